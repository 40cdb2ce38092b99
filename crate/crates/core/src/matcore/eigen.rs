//! Cyclic Jacobi eigenvalues for complex Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot `a_pq = r·e^{iφ}` with
//! the diagonal similarity `D = diag(1,…,e^{−iφ},…)` acting on index `q`, then
//! applies the real plane rotation that annihilates the now-real pivot.
//! The first three sweeps skip pivots below `0.2·Σ|a_pq| / k²`.

use num_complex::Complex;

use super::matrix::SelfAdjointMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Sweep cap before reporting non-convergence.
pub const MAX_SWEEPS: usize = 100;

fn relative_tolerance<T: Real>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(8.0))
}

/// Ascending eigenvalues. Terminates once the off-diagonal Frobenius mass is
/// below `1e-12·‖m‖_F` (or a few ulps for `f32`).
pub fn eigenvalues<T: Real>(m: &SelfAdjointMatrix<T>) -> Result<Vec<T>> {
    let k = m.dim();
    if k == 0 {
        return Ok(vec![]);
    }
    if k == 1 {
        return Ok(vec![m.get(0, 0).re]);
    }
    let mut a: Vec<Complex<T>> = m.as_mat().data().to_vec();
    let total = a.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
    let tol = relative_tolerance::<T>() * total;
    let kk = T::from_usize(k * k).unwrap();

    let mut residual = T::zero();
    for sweep in 0..MAX_SWEEPS {
        let mut off2 = T::zero();
        let mut off1 = T::zero();
        for p in 0..k {
            for q in p + 1..k {
                let z = a[p * k + q];
                off2 += z.norm_sqr();
                off1 += z.norm();
            }
        }
        residual = (off2 + off2).sqrt();
        if residual <= tol || total == T::zero() {
            let mut ev: Vec<T> = (0..k).map(|i| a[i * k + i].re).collect();
            ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
            return Ok(ev);
        }
        let threshold = if sweep < 3 { T::lit(0.2) * off1 / kk } else { T::zero() };
        for p in 0..k {
            for q in p + 1..k {
                let apq = a[p * k + q];
                let r = apq.norm();
                if r == T::zero() || r <= threshold {
                    continue;
                }
                let phase_conj = (apq / r).conj();
                let app = a[p * k + p].re;
                let aqq = a[q * k + q].re;
                let zeta = (aqq - app) / (r + r);
                let t = if zeta == T::zero() {
                    T::one()
                } else {
                    zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                a[p * k + p] = Complex::new(app - t * r, T::zero());
                a[q * k + q] = Complex::new(aqq + t * r, T::zero());
                a[p * k + q] = Complex::new(T::zero(), T::zero());
                a[q * k + p] = Complex::new(T::zero(), T::zero());
                for i in 0..k {
                    if i == p || i == q {
                        continue;
                    }
                    let aip = a[i * k + p];
                    let aiq = a[i * k + q] * phase_conj;
                    let nip = aip * c - aiq * s;
                    let niq = aip * s + aiq * c;
                    a[i * k + p] = nip;
                    a[p * k + i] = nip.conj();
                    a[i * k + q] = niq;
                    a[q * k + i] = niq.conj();
                }
            }
        }
    }
    Err(Error::NoConvergence {
        sweeps: MAX_SWEEPS,
        residual: residual.as_f64(),
    })
}
