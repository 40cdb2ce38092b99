//! Seeded random matrix samplers.

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::matrix::{Mat, MatrixTuple, SelfAdjointMatrix};
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Real;

/// Attempts per coordinate before the ball sampler declares a stall.
pub const STALL_WINDOW: u64 = 1_000_000;
/// Acceptance rate below which the ball sampler gives up.
pub const STALL_RATE: f64 = 1e-6;

#[inline]
pub(crate) fn normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    let z: f64 = StandardNormal.sample(rng);
    T::lit(z)
}

/// GUE matrix from an existing stream: diagonal entries `N(0, v/k)`, real and
/// imaginary parts above the diagonal `N(0, v/2k)`. Equivalently every
/// λ-coordinate is `N(0, v/k)`, and `E τ_k(x²) = v`.
pub fn gue<T: Real, R: Rng + ?Sized>(k: usize, variance: T, rng: &mut R) -> SelfAdjointMatrix<T> {
    let kf = T::from_usize(k).unwrap();
    let sd = (variance / kf).sqrt();
    let sd_off = sd * T::FRAC_1_SQRT_2();
    let mut m = Mat::zeros(k);
    for i in 0..k {
        m.set(i, i, Complex::new(sd * normal::<T, R>(rng), T::zero()));
        for j in i + 1..k {
            let z = Complex::new(sd_off * normal::<T, R>(rng), sd_off * normal::<T, R>(rng));
            m.set(i, j, z);
            m.set(j, i, z.conj());
        }
    }
    SelfAdjointMatrix::new(m).expect("GUE construction is Hermitian")
}

/// GUE sample with `E τ(x²) = variance`, deterministic in `seed`.
///
/// # Panics
/// If `variance <= 0`.
pub fn sample_gue<T: Real>(k: usize, variance: T, seed: u64) -> SelfAdjointMatrix<T> {
    assert!(variance > T::zero(), "GUE variance must be positive");
    let mut r = rng::stream(seed, 0);
    gue(k, variance, &mut r)
}

/// Uniform point of the λ-ball of the given radius in `M_k^sa` (dimension k²).
pub fn hs_ball_point<T: Real, R: Rng + ?Sized>(k: usize, radius: T, rng: &mut R) -> SelfAdjointMatrix<T> {
    let d = k * k;
    let mut v: Vec<T> = (0..d).map(|_| normal::<T, R>(rng)).collect();
    let norm = v.iter().map(|&x| x * x).sum::<T>().sqrt();
    let u: f64 = rng.random();
    let scale = radius * T::lit(u.powf(1.0 / d as f64)) / norm;
    for x in &mut v {
        *x *= scale;
    }
    SelfAdjointMatrix::from_coords(k, &v).expect("coordinate count matches")
}

/// One coordinate uniform on `{x : ‖x‖_op ≤ R}` by rejection from the
/// λ-ball of radius `R√k`, which contains it. Returns the point and the
/// number of attempts used.
pub fn op_ball_point<T: Real, R: Rng + ?Sized>(
    k: usize,
    radius: T,
    rng: &mut R,
) -> Result<(SelfAdjointMatrix<T>, u64)> {
    let outer = radius * T::from_usize(k).unwrap().sqrt();
    let mut attempts = 0u64;
    loop {
        attempts += 1;
        let x = hs_ball_point(k, outer, rng);
        if x.op_norm()? <= radius {
            return Ok((x, attempts));
        }
        if attempts >= STALL_WINDOW {
            return Err(Error::RejectionStall {
                attempts,
                rate: STALL_RATE,
            });
        }
    }
}

/// An n-tuple uniform for λ on `{each ‖x_i‖_op ≤ R}`.
pub fn sample_ball<T: Real>(k: usize, n: usize, radius: T, seed: u64) -> Result<MatrixTuple<T>> {
    if !(radius > T::zero()) {
        return Err(Error::InvalidParameter("ball radius must be positive".into()));
    }
    let mut r = rng::stream(seed, 0);
    let mats = (0..n)
        .map(|_| op_ball_point(k, radius, &mut r).map(|(x, _)| x))
        .collect::<Result<Vec<_>>>()?;
    MatrixTuple::new(k, mats)
}

/// Haar unitary: Gram–Schmidt on a complex Ginibre matrix, columns normalized
/// with positive diagonal in the implied R factor.
pub fn haar_unitary<T: Real, R: Rng + ?Sized>(k: usize, rng: &mut R) -> Mat<T> {
    let half = T::FRAC_1_SQRT_2();
    let mut cols: Vec<Vec<Complex<T>>> = (0..k)
        .map(|_| {
            (0..k)
                .map(|_| Complex::new(normal::<T, R>(rng) * half, normal::<T, R>(rng) * half))
                .collect()
        })
        .collect();
    for j in 0..k {
        for i in 0..j {
            let (done, rest) = cols.split_at_mut(j);
            let qi = &done[i];
            let proj: Complex<T> = qi.iter().zip(rest[0].iter()).map(|(a, b)| a.conj() * b).sum();
            for (x, q) in rest[0].iter_mut().zip(qi) {
                *x -= *q * proj;
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        for x in &mut cols[j] {
            *x = *x / norm;
        }
    }
    Mat::from_fn(k, |i, j| cols[j][i])
}

/// `U·d·U*` for a diagonal spectrum, Hermitian by construction.
pub fn conjugated_diag<T: Real>(u: &Mat<T>, spectrum: &[T]) -> SelfAdjointMatrix<T> {
    let d = Mat::diag(spectrum);
    SelfAdjointMatrix::hermitian_part(&u.matmul(&d).matmul(&u.adjoint()))
}
