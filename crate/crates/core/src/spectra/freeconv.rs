use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

use super::measure::SpectralMeasure;

/// Roots of the monic cubic `w³ + a w² + b w + c` (Durand–Kerner).
fn cubic_roots(a: Complex64, b: Complex64, c: Complex64) -> [Complex64; 3] {
    let p = |w: Complex64| ((w + a) * w + b) * w + c;
    let seed = Complex64::new(0.4, 0.9);
    let mut r = [Complex64::new(1.0, 0.0), seed, seed * seed];
    for _ in 0..500 {
        let mut delta: f64 = 0.0;
        for i in 0..3 {
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..3 {
                if i != j {
                    den *= r[i] - r[j];
                }
            }
            let step = p(r[i]) / den;
            r[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }
    r
}

/// Density of `½δ₋₁ + ½δ₁ ⊞ semicircle(t)` at `x`.
///
/// The subordination function `ω` solves `ω³ - xω² + (t - 1)ω + x = 0`
/// and the density is `Im ω / (π t)` for the root in the upper half plane.
pub fn bernoulli_semicircle_density(x: f64, t: f64) -> f64 {
    let z = Complex64::new(x, 0.0);
    let roots = cubic_roots(-z, Complex64::new(t - 1.0, 0.0), z);
    let im = roots.iter().map(|w| w.im).fold(0.0, f64::max);
    if im < 1e-9 {
        0.0
    } else {
        im / (PI * t)
    }
}

/// `½δ₋₁ + ½δ₁ ⊞ semicircle(t)` as a histogram on `cells` equal cells of
/// `[-1 - 2√t, 1 + 2√t]` (4-point Gauss–Legendre masses, renormalized).
pub fn bernoulli_semicircle(t: f64, cells: usize) -> Result<SpectralMeasure> {
    if !(t > 0.0) || cells == 0 {
        return Err(Error::InvalidParameter("need t > 0 and cells > 0".into()));
    }
    let r = 1.0 + 2.0 * t.sqrt();
    let h = 2.0 * r / cells as f64;
    let edges: Vec<f64> = (0..=cells).map(|i| -r + h * i as f64).collect();
    let gl = [
        (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
        (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
        (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
        (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    ];
    let masses: Vec<f64> = (0..cells)
        .map(|i| {
            let mid = edges[i] + 0.5 * h;
            gl.iter()
                .map(|&(u, w)| 0.5 * h * w * bernoulli_semicircle_density(mid + 0.5 * h * u, t))
                .sum()
        })
        .collect();
    let total: f64 = masses.iter().sum();
    SpectralMeasure::histogram(edges, masses.into_iter().map(|m| m / total).collect())
}
