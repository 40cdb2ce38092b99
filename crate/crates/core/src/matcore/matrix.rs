use std::ops::{Add, Mul, Sub};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense square complex matrix, row-major.
///
/// Products of Hermitian matrices, coefficient embeddings and Jacobian legs
/// all live here; [`SelfAdjointMatrix`] wraps it when Hermiticity is an
/// invariant.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex::new(T::zero(), T::zero()); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn scalar(dim: usize, c: Complex<T>) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = c;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Builds from a row-major vector of length `dim²`.
    pub fn from_vec(dim: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    /// Real matrix from nested rows.
    pub fn from_real_rows(rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.len(),
                });
            }
            data.extend(r.iter().map(|&x| Complex::new(x, T::zero())));
        }
        Ok(Self { dim, data })
    }

    pub fn diag(values: &[T]) -> Self {
        let dim = values.len();
        let mut m = Self::zeros(dim);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * dim + i] = Complex::new(v, T::zero());
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex<T>) {
        self.data[i * self.dim + j] = v;
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * c).collect(),
        }
    }

    pub fn scale_real(&self, c: T) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * c).collect(),
        }
    }

    /// `self += c · other`
    pub fn add_scaled(&mut self, other: &Self, c: Complex<T>) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b * c;
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.dim;
        assert_eq!(n, other.dim, "matmul dimension mismatch");
        let mut out = vec![Complex::new(T::zero(), T::zero()); n * n];
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            let dst = &mut out[i * n..(i + 1) * n];
            for (l, &a) in row.iter().enumerate() {
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                let orow = &other.data[l * n..(l + 1) * n];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Self { dim: n, data: out }
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim).fold(Complex::new(T::zero(), T::zero()), |acc, i| acc + self.get(i, i))
    }

    /// `(1/k)·Tr`
    pub fn normalized_trace(&self) -> Complex<T> {
        self.trace() / T::from_usize(self.dim).unwrap()
    }

    /// `Tr(self · other)` in O(k²) without forming the product.
    pub fn trace_of_product(&self, other: &Self) -> Complex<T> {
        let n = self.dim;
        let mut acc = Complex::new(T::zero(), T::zero());
        for i in 0..n {
            for l in 0..n {
                acc += self.data[i * n + l] * other.data[l * n + i];
            }
        }
        acc
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), T::max)
    }

    /// Largest deviation `|a_ij − conj(a_ji)|`.
    pub fn hermitian_defect(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Operator norm, `sqrt(λ_max(A* A))`.
    pub fn op_norm(&self) -> Result<T> {
        let gram = SelfAdjointMatrix::hermitian_part(&self.adjoint().matmul(self));
        let ev = super::eigen::eigenvalues(&gram)?;
        Ok(ev.last().copied().unwrap_or(T::zero()).max(T::zero()).sqrt())
    }

    /// Block embedding `self ⊗ 1_reps`: entry `(i·reps + a, j·reps + b) = self_ij δ_ab`.
    pub fn kron_identity(&self, reps: usize) -> Self {
        let big = self.dim * reps;
        let mut out = Self::zeros(big);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let v = self.get(i, j);
                for a in 0..reps {
                    out.set(i * reps + a, j * reps + a, v);
                }
            }
        }
        out
    }
}

impl<T: Real> Add for &Mat<T> {
    type Output = Mat<T>;
    fn add(self, rhs: Self) -> Mat<T> {
        assert_eq!(self.dim, rhs.dim);
        Mat {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<T: Real> Sub for &Mat<T> {
    type Output = Mat<T>;
    fn sub(self, rhs: Self) -> Mat<T> {
        assert_eq!(self.dim, rhs.dim);
        Mat {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl<T: Real> Mul for &Mat<T> {
    type Output = Mat<T>;
    fn mul(self, rhs: Self) -> Mat<T> {
        self.matmul(rhs)
    }
}

/// A k×k complex Hermitian matrix, an element of `M_k^sa`.
///
/// Hermiticity is exact: `entry(i,j) == conj(entry(j,i))` bit for bit, and
/// every entry is finite. Constructors either verify this or build the
/// matrix from its upper triangle.
///
/// # Lebesgue coordinates
///
/// `M_k^sa` carries the inner product `⟨a,b⟩ = Tr(ab)` (non-normalized trace).
/// An orthonormal real basis is `E_ii`, `(E_ij + E_ji)/√2` and
/// `i(E_ij − E_ji)/√2` for `i < j`, so the coordinates of `a` are
/// `a_ii`, `√2·Re a_ij`, `√2·Im a_ij`. The reference measure λ is Lebesgue
/// measure in these k² coordinates; in raw entries
/// `dλ = 2^{k(k−1)/2} Π da_ii Π dRe a_ij dIm a_ij`.
#[derive(Clone, Debug, PartialEq)]
pub struct SelfAdjointMatrix<T>(Mat<T>);

impl<T: Real> SelfAdjointMatrix<T> {
    /// Verifies exact Hermiticity and finiteness.
    pub fn new(m: Mat<T>) -> Result<Self> {
        let k = m.dim();
        for i in 0..k {
            for j in 0..k {
                let z = m.get(i, j);
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                if j >= i && z != m.get(j, i).conj() {
                    return Err(Error::NotHermitian { row: i, col: j });
                }
            }
        }
        Ok(Self(m))
    }

    /// Builds from the upper triangle; the diagonal's imaginary part is dropped.
    pub fn from_upper(dim: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut m = Mat::zeros(dim);
        for i in 0..dim {
            m.set(i, i, Complex::new(f(i, i).re, T::zero()));
            for j in i + 1..dim {
                let z = f(i, j);
                m.set(i, j, z);
                m.set(j, i, z.conj());
            }
        }
        Self(m)
    }

    /// `(A + A*)/2`, symmetrized exactly.
    pub fn hermitian_part(a: &Mat<T>) -> Self {
        let half = T::lit(0.5);
        Self::from_upper(a.dim(), |i, j| (a.get(i, j) + a.get(j, i).conj()) * half)
    }

    pub fn identity(dim: usize) -> Self {
        Self(Mat::identity(dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(Mat::zeros(dim))
    }

    pub fn diag(values: &[T]) -> Self {
        Self(Mat::diag(values))
    }

    pub fn from_real_rows(rows: &[Vec<T>]) -> Result<Self> {
        Self::new(Mat::from_real_rows(rows)?)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.0.get(i, j)
    }

    pub fn as_mat(&self) -> &Mat<T> {
        &self.0
    }

    pub fn into_mat(self) -> Mat<T> {
        self.0
    }

    /// `(1/k)·Σ m_ii`; the imaginary part of a Hermitian diagonal is zero.
    pub fn normalized_trace(&self) -> T {
        self.0.normalized_trace().re
    }

    /// Ascending eigenvalues (cyclic Jacobi).
    pub fn eigenvalues(&self) -> Result<Vec<T>> {
        super::eigen::eigenvalues(self)
    }

    /// `max |λ|`
    pub fn op_norm(&self) -> Result<T> {
        let ev = self.eigenvalues()?;
        Ok(ev
            .first()
            .map(|l| l.abs())
            .unwrap_or(T::zero())
            .max(ev.last().map(|l| l.abs()).unwrap_or(T::zero())))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(&self.0 - &other.0)
    }

    pub fn scale(&self, c: T) -> Self {
        Self(self.0.scale_real(c))
    }

    /// `self + c·1`
    pub fn shift(&self, c: T) -> Self {
        let mut m = self.0.clone();
        for i in 0..m.dim() {
            let z = m.get(i, i);
            m.set(i, i, Complex::new(z.re + c, T::zero()));
        }
        Self(m)
    }

    /// Orthonormal λ-coordinates, see the type docs. Length k².
    pub fn to_coords(&self) -> Vec<T> {
        let k = self.dim();
        let r2 = T::SQRT_2();
        let mut out = Vec::with_capacity(k * k);
        for i in 0..k {
            out.push(self.get(i, i).re);
        }
        for i in 0..k {
            for j in i + 1..k {
                let z = self.get(i, j);
                out.push(r2 * z.re);
                out.push(r2 * z.im);
            }
        }
        out
    }

    /// Inverse of [`Self::to_coords`].
    pub fn from_coords(dim: usize, coords: &[T]) -> Result<Self> {
        if coords.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: coords.len(),
            });
        }
        let inv = T::FRAC_1_SQRT_2();
        let mut m = Mat::zeros(dim);
        for i in 0..dim {
            m.set(i, i, Complex::new(coords[i], T::zero()));
        }
        let mut c = dim;
        for i in 0..dim {
            for j in i + 1..dim {
                let z = Complex::new(coords[c] * inv, coords[c + 1] * inv);
                c += 2;
                m.set(i, j, z);
                m.set(j, i, z.conj());
            }
        }
        Ok(Self(m))
    }

    /// `Tr(a²)`, the squared λ-norm.
    pub fn hs_norm_sqr(&self) -> T {
        self.0.data().iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Ordered tuple of Hermitian matrices of one common dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixTuple<T> {
    dim: usize,
    mats: Vec<SelfAdjointMatrix<T>>,
}

impl<T: Real> MatrixTuple<T> {
    /// An empty tuple still remembers its dimension.
    pub fn new(dim: usize, mats: Vec<SelfAdjointMatrix<T>>) -> Result<Self> {
        for m in &mats {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: m.dim(),
                });
            }
        }
        Ok(Self { dim, mats })
    }

    /// Non-empty tuple; dimension taken from the first matrix.
    pub fn from_mats(mats: Vec<SelfAdjointMatrix<T>>) -> Result<Self> {
        let dim = mats
            .first()
            .map(|m| m.dim())
            .ok_or_else(|| Error::InvalidParameter("empty matrix tuple".into()))?;
        Self::new(dim, mats)
    }

    pub fn empty(dim: usize) -> Self {
        Self { dim, mats: vec![] }
    }

    #[inline]
    pub fn arity(&self) -> usize {
        self.mats.len()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize) -> &SelfAdjointMatrix<T> {
        &self.mats[i]
    }

    pub fn mats(&self) -> &[SelfAdjointMatrix<T>] {
        &self.mats
    }

    pub fn into_mats(self) -> Vec<SelfAdjointMatrix<T>> {
        self.mats
    }

    /// `(x₁,…,xₙ, y₁,…,yₘ)`
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut mats = self.mats.clone();
        mats.extend(other.mats.iter().cloned());
        Ok(Self { dim: self.dim, mats })
    }

    /// Sub-tuple with the given indices, in order.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            dim: self.dim,
            mats: idx.iter().map(|&i| self.mats[i].clone()).collect(),
        }
    }

    /// Largest operator norm over the tuple.
    pub fn max_op_norm(&self) -> Result<T> {
        let mut worst = T::zero();
        for m in &self.mats {
            worst = worst.max(m.op_norm()?);
        }
        Ok(worst)
    }
}

/// `τ_k(x_{i₁}⋯x_{i_p})` as a complex number; the empty word gives 1.
///
/// Indices are 0-based.
pub fn eval_word_trace_complex<T: Real>(t: &MatrixTuple<T>, word: &[usize]) -> Result<Complex<T>> {
    for &i in word {
        if i >= t.arity() {
            return Err(Error::IndexOutOfRange {
                index: i,
                arity: t.arity(),
            });
        }
    }
    let k = T::from_usize(t.dim()).unwrap();
    match word.len() {
        0 => Ok(Complex::new(T::one(), T::zero())),
        1 => Ok(t.get(word[0]).as_mat().normalized_trace()),
        _ => {
            let mut acc = t.get(word[0]).as_mat().clone();
            for &i in &word[1..word.len() - 1] {
                acc = acc.matmul(t.get(i).as_mat());
            }
            let last = t.get(word[word.len() - 1]).as_mat();
            Ok(acc.trace_of_product(last) / k)
        }
    }
}

/// Real part of [`eval_word_trace_complex`].
pub fn eval_word_trace<T: Real>(t: &MatrixTuple<T>, word: &[usize]) -> Result<T> {
    eval_word_trace_complex(t, word).map(|z| z.re)
}

/// `τ_k(m)`
pub fn normalized_trace<T: Real>(m: &SelfAdjointMatrix<T>) -> T {
    m.normalized_trace()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn trace_examples() {
        for k in 1..6 {
            assert_eq!(normalized_trace(&SelfAdjointMatrix::<f64>::identity(k)), 1.0);
        }
        assert_eq!(normalized_trace(&SelfAdjointMatrix::diag(&[1.0, -1.0])), 0.0);
        assert_eq!(normalized_trace(&SelfAdjointMatrix::diag(&[1.0, 0.0])), 0.5);
    }

    #[test]
    fn word_trace_examples() {
        let x1 = SelfAdjointMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let x2 = SelfAdjointMatrix::diag(&[1.0, -1.0]);
        let single = MatrixTuple::from_mats(vec![x2.clone()]).unwrap();
        assert_eq!(eval_word_trace(&single, &[]).unwrap(), 1.0);
        assert_eq!(eval_word_trace(&single, &[0, 0]).unwrap(), 1.0);
        let pair = MatrixTuple::from_mats(vec![x1, x2]).unwrap();
        // x1 x2 = [[0,-1],[1,0]], squared is -I.
        assert_eq!(eval_word_trace(&pair, &[0, 1, 0, 1]).unwrap(), -1.0);
        assert!(matches!(
            eval_word_trace(&pair, &[2]),
            Err(Error::IndexOutOfRange { index: 2, arity: 2 })
        ));
    }

    #[test]
    fn hermitian_enforced() {
        let bad = Mat::from_vec(2, vec![c(1.0, 0.0), c(1.0, 1.0), c(1.0, 1.0), c(0.0, 0.0)]).unwrap();
        assert!(matches!(SelfAdjointMatrix::new(bad), Err(Error::NotHermitian { .. })));
        let nan = Mat::from_vec(1, vec![c(f64::NAN, 0.0)]).unwrap();
        assert!(matches!(SelfAdjointMatrix::new(nan), Err(Error::NonFinite { .. })));
        let mixed = MatrixTuple::new(
            2,
            vec![SelfAdjointMatrix::<f64>::identity(2), SelfAdjointMatrix::identity(3)],
        );
        assert!(mixed.is_err());
    }

    #[test]
    fn coords_round_trip_and_norm() {
        let a = SelfAdjointMatrix::from_upper(3, |i, j| c((i + 2 * j) as f64 * 0.3, (j as f64) - (i as f64)));
        let v = a.to_coords();
        let norm: f64 = v.iter().map(|x| x * x).sum();
        assert!((norm - a.hs_norm_sqr()).abs() < 1e-12);
        let b = SelfAdjointMatrix::from_coords(3, &v).unwrap();
        assert!(a.as_mat().max_abs_diff(b.as_mat()) < 1e-15);
    }

    #[test]
    fn kron_identity_layout() {
        let b = Mat::from_vec(2, vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)]).unwrap();
        let e = b.kron_identity(2);
        assert_eq!(e.get(0, 2), c(2.0, 0.0));
        assert_eq!(e.get(1, 3), c(2.0, 0.0));
        assert_eq!(e.get(0, 3), c(0.0, 0.0));
        assert_eq!(e.get(3, 1), c(3.0, 0.0));
    }
}
