use num_complex::Complex;

use crate::error::{Error, Result};
use crate::matcore::{Mat, MatrixTuple, SelfAdjointMatrix};
use crate::scalar::Real;

use super::deriv::dquotient;
use super::poly::{Embedding, NcBiPoly, NcPoly};

/// Singular values below this floor make [`logabs_functional`] return `-inf`.
pub const SINGULAR_FLOOR: f64 = 1e-12;

/// Symbolic Jacobian: `entries[i][j] = D_i F_j`.
#[derive(Clone, Debug)]
pub struct NcJacobian<T> {
    n: usize,
    entries: Vec<Vec<NcBiPoly<T>>>,
}

impl<T: Real> NcJacobian<T> {
    pub fn new(f: &[NcPoly<T>]) -> Result<Self> {
        let n = f.len();
        for fj in f {
            if fj.arity() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: fj.arity(),
                });
            }
            f[0].check_compatible(fj)?;
        }
        let entries = (0..n)
            .map(|i| f.iter().map(|fj| dquotient(fj, i)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n, entries })
    }

    pub fn arity(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> &NcBiPoly<T> {
        &self.entries[i][j]
    }

    pub fn evaluate(&self, t: &MatrixTuple<T>, embed: &Embedding<T>) -> Result<EvaluatedJacobian<T>> {
        if t.arity() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: t.arity(),
            });
        }
        let entries = self
            .entries
            .iter()
            .map(|row| row.iter().map(|e| e.evaluate(t, embed)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(EvaluatedJacobian {
            n: self.n,
            k: t.dim(),
            entries,
        })
    }
}

/// `D_BF(x)`: entry `(i, j)` is the operator `z ↦ Σ a z b` on `M_k`.
#[derive(Clone, Debug)]
pub struct EvaluatedJacobian<T> {
    n: usize,
    k: usize,
    entries: Vec<Vec<Vec<(Mat<T>, Mat<T>)>>>,
}

/// Evaluated Jacobian of the map `F` at `t`.
pub fn jacobian<T: Real>(f: &[NcPoly<T>], t: &MatrixTuple<T>, embed: &Embedding<T>) -> Result<EvaluatedJacobian<T>> {
    NcJacobian::new(f)?.evaluate(t, embed)
}

impl<T: Real> EvaluatedJacobian<T> {
    pub fn arity(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn entry(&self, i: usize, j: usize) -> &[(Mat<T>, Mat<T>)] {
        &self.entries[i][j]
    }

    /// Directional derivative: `out_j = Σ_i D_iF_j # h_i`.
    pub fn apply(&self, h: &[Mat<T>]) -> Result<Vec<Mat<T>>> {
        if h.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: h.len(),
            });
        }
        let one = Complex::new(T::one(), T::zero());
        Ok((0..self.n)
            .map(|j| {
                let mut out = Mat::zeros(self.k);
                for (i, hi) in h.iter().enumerate() {
                    for (a, b) in &self.entries[i][j] {
                        out.add_scaled(&a.matmul(hi).matmul(b), one);
                    }
                }
                out
            })
            .collect())
    }

    /// Real matrix of the derivative on `(M_k^sa)^n` in orthonormal λ
    /// coordinates (row-major, side `n·k²`). Outputs are projected onto their
    /// Hermitian part, which is exact for self-adjoint maps.
    pub fn real_matrix(&self) -> Result<Vec<T>> {
        let kk = self.k * self.k;
        let dim = self.n * kk;
        let mut m = vec![T::zero(); dim * dim];
        let mut coords = vec![T::zero(); kk];
        for col in 0..dim {
            let (var, c) = (col / kk, col % kk);
            coords.iter_mut().for_each(|x| *x = T::zero());
            coords[c] = T::one();
            let e = SelfAdjointMatrix::from_coords(self.k, &coords)?.into_mat();
            let h: Vec<Mat<T>> = (0..self.n)
                .map(|i| if i == var { e.clone() } else { Mat::zeros(self.k) })
                .collect();
            for (j, out) in self.apply(&h)?.iter().enumerate() {
                let v = SelfAdjointMatrix::hermitian_part(out).to_coords();
                for (r, x) in v.into_iter().enumerate() {
                    m[(j * kk + r) * dim + col] = x;
                }
            }
        }
        Ok(m)
    }
}

/// Singular values of a real row-major `rows×cols` matrix (one-sided Jacobi).
pub fn singular_values<T: Real>(a: &[T], rows: usize, cols: usize) -> Result<Vec<T>> {
    // Work on columns stored contiguously.
    let mut u: Vec<Vec<T>> = (0..cols)
        .map(|j| (0..rows).map(|i| a[i * cols + j]).collect())
        .collect();
    let eps = T::epsilon() * T::lit(4.0);
    let mut converged = false;
    for _ in 0..crate::matcore::MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for i in 0..rows {
                    alpha += u[p][i] * u[p][i];
                    beta += u[q][i] * u[q][i];
                    gamma += u[p][i] * u[q][i];
                }
                if gamma.abs() <= eps * (alpha * beta).sqrt() || gamma == T::zero() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                let (left, right) = u.split_at_mut(q);
                let (cp, cq) = (&mut left[p], &mut right[0]);
                for i in 0..rows {
                    let x = cp[i];
                    let y = cq[i];
                    cp[i] = c * x - s * y;
                    cq[i] = s * x + c * y;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            sweeps: crate::matcore::MAX_SWEEPS,
            residual: f64::NAN,
        });
    }
    let mut s: Vec<T> = u
        .iter()
        .map(|col| col.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt())
        .collect();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(s)
}

/// `(Tr ⊗ τ_k ⊗ τ_k) log|D_BF|`, i.e. `(1/k²)·log|det|` of the real Jacobian
/// on `(M_k^sa)^n`. Returns `-inf` when a singular value is below
/// [`SINGULAR_FLOOR`].
pub fn logabs_functional<T: Real>(j: &EvaluatedJacobian<T>) -> Result<T> {
    let dim = j.n * j.k * j.k;
    let m = j.real_matrix()?;
    let s = singular_values(&m, dim, dim)?;
    let floor = T::lit(SINGULAR_FLOOR);
    if s.iter().any(|&x| x < floor) {
        return Ok(T::neg_infinity());
    }
    let sum = s.iter().fold(T::zero(), |acc, &x| acc + x.ln());
    Ok(sum / T::from_usize(j.k * j.k).unwrap())
}
