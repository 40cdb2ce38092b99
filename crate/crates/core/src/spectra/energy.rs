use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::Result;

use super::field::ScalarField;
use super::measure::{Discretized, SpectralMeasure, DEFAULT_CELLS};

/// Below this `|Δf/Δx|` a map counts as singular.
pub const DERIVATIVE_FLOOR: f64 = 1e-10;

/// Antiderivative kernel: `∂_s ∂_t G(s - t) = -log|s - t|`.
fn g_kernel(u: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        let u2 = u * u;
        0.5 * u2 * u.abs().ln() - 0.75 * u2
    }
}

/// `∫∫ log|s - t| dμ dμ` of a piecewise-constant density, exactly.
///
/// With `d_a` the density jump at edge `e_a`, the cell-by-cell integral
/// collapses to `-Σ_{a,b} d_a d_b G(e_a - e_b)`.
pub fn histogram_log_energy(d: &Discretized) -> f64 {
    let m = d.cells();
    let rho = |i: isize| -> f64 {
        if i < 0 || i as usize >= m {
            0.0
        } else {
            d.cell_density(i as usize)
        }
    };
    let jumps: Vec<f64> = (0..=m as isize).map(|a| rho(a) - rho(a - 1)).collect();
    let e = &d.edges;
    let rows: Vec<f64> = (0..=m)
        .into_par_iter()
        .map(|a| {
            let da = jumps[a];
            if da == 0.0 {
                return 0.0;
            }
            let mut acc = 0.0;
            for b in a + 1..=m {
                acc += jumps[b] * g_kernel(e[b] - e[a]);
            }
            da * acc
        })
        .collect();
    -2.0 * rows.iter().sum::<f64>()
}

/// Logarithmic energy `I(μ) = ∫∫ log|s - t| dμ(s) dμ(t)`. Every atomic
/// measure has `I = -inf` (diagonal pairs included). Densities are
/// discretized on [`DEFAULT_CELLS`] cells and integrated exactly on the
/// resulting histogram.
pub fn log_energy(mu: &SpectralMeasure) -> Result<f64> {
    log_energy_with(mu, DEFAULT_CELLS)
}

pub fn log_energy_with(mu: &SpectralMeasure, cells: usize) -> Result<f64> {
    if mu.is_atomic() {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(histogram_log_energy(&mu.discretize(cells)?))
}

/// Closed-form `I(μ)` where one is known.
pub fn log_energy_closed_form(mu: &SpectralMeasure) -> Option<f64> {
    match mu {
        SpectralMeasure::Atomic { .. } => Some(f64::NEG_INFINITY),
        SpectralMeasure::Semicircle { variance } => Some(0.5 * variance.ln() - 0.25),
        SpectralMeasure::Uniform { a, b } => Some((b - a).ln() - 1.5),
        SpectralMeasure::Arcsine { a, b } => Some(((b - a) / 4.0).ln()),
        _ => None,
    }
}

/// `I + 3/4 + ½·log 2π`.
pub fn chi_from_energy(i: f64) -> f64 {
    i + 0.75 + 0.5 * (2.0 * PI).ln()
}

/// Single-variable free entropy `χ(μ) = I(μ) + 3/4 + ½·log 2π`.
pub fn chi_single(mu: &SpectralMeasure) -> Result<f64> {
    Ok(chi_from_energy(log_energy(mu)?))
}

/// Gauss–Legendre nodes (two per cell) with their masses.
fn gl_nodes(d: &Discretized) -> (Vec<f64>, Vec<f64>) {
    let r = 0.5 / 3f64.sqrt();
    let mut xs = Vec::with_capacity(2 * d.cells());
    let mut ws = Vec::with_capacity(2 * d.cells());
    for i in 0..d.cells() {
        let (mid, h) = (0.5 * (d.edges[i] + d.edges[i + 1]), d.width(i));
        xs.push(mid - r * h);
        xs.push(mid + r * h);
        ws.push(0.5 * d.masses[i]);
        ws.push(0.5 * d.masses[i]);
    }
    (xs, ws)
}

/// `∫∫ log(|f(s) - f(t)| / |s - t|) dμ dμ`, the diagonal read as
/// `log|f'(s)|`.
pub fn cov_correction(mu: &SpectralMeasure, f: &ScalarField) -> Result<f64> {
    let (xs, ws) = match mu {
        SpectralMeasure::Atomic { atoms } => {
            let mut xs: Vec<f64> = atoms.iter().map(|a| a.0).collect();
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            xs.dedup();
            if xs.len() > 1 {
                f.check_monotone(&xs, DERIVATIVE_FLOOR)?;
            }
            (atoms.iter().map(|a| a.0).collect(), atoms.iter().map(|a| a.1).collect())
        }
        _ => {
            let d = mu.discretize(DEFAULT_CELLS)?;
            f.check_monotone(&d.edges, DERIVATIVE_FLOOR)?;
            gl_nodes(&d)
        }
    };
    let fx: Vec<f64> = xs.iter().map(|&x| f.eval(x)).collect();
    let ld: Vec<f64> = xs.iter().map(|&x| f.deriv(x).abs().ln()).collect();
    let rows: Vec<f64> = (0..xs.len())
        .into_par_iter()
        .map(|a| {
            let mut acc = 0.5 * ws[a] * ld[a];
            for b in a + 1..xs.len() {
                let dx = xs[b] - xs[a];
                let v = if dx == 0.0 {
                    0.5 * (ld[a] + ld[b])
                } else {
                    ((fx[b] - fx[a]) / dx).abs().ln()
                };
                acc += ws[b] * v;
            }
            ws[a] * acc
        })
        .collect();
    Ok(2.0 * rows.iter().sum::<f64>())
}

/// Law of `f(X)` for `X ~ μ`. Atoms are mapped; densities become histograms
/// whose cell masses sit on the mapped edges (reversed for decreasing `f`).
pub fn pushforward(mu: &SpectralMeasure, f: &ScalarField) -> Result<SpectralMeasure> {
    match mu {
        SpectralMeasure::Atomic { atoms } => {
            SpectralMeasure::atomic(atoms.iter().map(|&(x, w)| (f.eval(x), w)).collect())
        }
        _ => {
            let d = mu.discretize(DEFAULT_CELLS)?;
            let dir = f.check_monotone(&d.edges, DERIVATIVE_FLOOR)?;
            let mut edges: Vec<f64> = d.edges.iter().map(|&x| f.eval(x)).collect();
            let mut masses = d.masses;
            if dir < 0.0 {
                edges.reverse();
                masses.reverse();
            }
            SpectralMeasure::histogram(edges, masses)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_energy_is_exact() {
        let u = SpectralMeasure::uniform(0.0, 1.0).unwrap();
        assert!((log_energy(&u).unwrap() + 1.5).abs() < 1e-12);
        assert!((log_energy_with(&u, 1).unwrap() + 1.5).abs() < 1e-15);
    }

    #[test]
    fn quadrature_against_closed_forms() {
        for mu in [
            SpectralMeasure::semicircle(1.0).unwrap(),
            SpectralMeasure::semicircle(0.3).unwrap(),
            SpectralMeasure::arcsine(-1.0, 3.0).unwrap(),
        ] {
            let q = log_energy(&mu).unwrap();
            let c = log_energy_closed_form(&mu).unwrap();
            assert!((q - c).abs() < 1e-3, "{mu:?}: {q} vs {c}");
        }
        let chi = chi_single(&SpectralMeasure::semicircle(1.0).unwrap()).unwrap();
        assert!((chi - 0.5 * (2.0 * PI * std::f64::consts::E).ln()).abs() < 1e-3);
        assert_eq!(
            chi_single(&SpectralMeasure::atomic(vec![(0.0, 1.0)]).unwrap()).unwrap(),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn semicircle_entropy_scales() {
        let t = 2.5;
        let chi = chi_single(&SpectralMeasure::semicircle(t).unwrap()).unwrap();
        assert!((chi - 0.5 * (2.0 * PI * std::f64::consts::E * t).ln()).abs() < 1e-3);
    }

    #[test]
    fn cov_examples() {
        let sc = SpectralMeasure::semicircle(1.0).unwrap();
        assert!(cov_correction(&sc, &ScalarField::identity()).unwrap().abs() < 1e-14);
        let two = SpectralMeasure::atomic(vec![(1.0, 0.5), (-1.0, 0.5)]).unwrap();
        for mu in [&sc, &two] {
            let c = cov_correction(mu, &ScalarField::affine(3.0, -1.0)).unwrap();
            assert!((c - 3f64.ln()).abs() < 1e-12);
        }
        let f = ScalarField::polynomial(vec![0.0, 1.0, 0.0, 1.0]);
        let lhs = log_energy(&pushforward(&sc, &f).unwrap()).unwrap() - log_energy(&sc).unwrap();
        let rhs = cov_correction(&sc, &f).unwrap();
        assert!((lhs - rhs).abs() < 2e-3, "{lhs} {rhs}");
        assert!(cov_correction(&sc, &ScalarField::polynomial(vec![0.0, 0.0, 1.0])).is_err());
    }

    #[test]
    fn pushforward_examples() {
        let two = SpectralMeasure::atomic(vec![(1.0, 0.5), (-1.0, 0.5)]).unwrap();
        let cube = ScalarField::polynomial(vec![0.0, 0.0, 0.0, 1.0]);
        assert_eq!(pushforward(&two, &cube).unwrap(), two);
        let u = SpectralMeasure::uniform(0.0, 1.0).unwrap();
        let p = pushforward(&u, &ScalarField::affine(2.0, 0.0)).unwrap();
        assert_eq!(p.support(), (0.0, 2.0));
        for &x in &[0.01, 0.7, 1.3, 1.99] {
            assert!((p.density(x).unwrap() - 0.5).abs() < 1e-9);
        }
        let id = pushforward(&p, &ScalarField::identity()).unwrap();
        assert_eq!(id, p);
        let rev = pushforward(&u, &ScalarField::affine(-1.0, 0.0)).unwrap();
        assert_eq!(rev.support(), (-1.0, 0.0));
        let d = rev.discretize(0).unwrap();
        assert!((d.masses.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        assert!(matches!(
            pushforward(&u, &ScalarField::affine(1e-12, 0.0)),
            Err(crate::Error::SingularDerivative { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn translation_and_dilation(c in -3.0f64..3.0, a in 0.2f64..5.0) {
            let mu = SpectralMeasure::semicircle(1.0).unwrap();
            let i0 = log_energy(&mu).unwrap();
            let shifted = pushforward(&mu, &ScalarField::affine(1.0, c)).unwrap();
            prop_assert!((log_energy(&shifted).unwrap() - i0).abs() < 1e-6);
            let dilated = pushforward(&mu, &ScalarField::affine(a, 0.0)).unwrap();
            prop_assert!((log_energy(&dilated).unwrap() - i0 - a.ln()).abs() < 1e-4);
        }

        #[test]
        fn cov_identity_for_monotone_cubics(c1 in 0.2f64..2.0, c2 in -0.3f64..0.3, c3 in 0.0f64..0.5) {
            // f' = c1 + 2 c2 x + 3 c3 x² > 0 on [-2, 2] when c2² < 3 c1 c3 or |c2|·4 < c1.
            prop_assume!(c2 * c2 < 3.0 * c1 * c3 || 4.0 * c2.abs() < c1);
            let f = ScalarField::polynomial(vec![0.1, c1, c2, c3]);
            let mu = SpectralMeasure::semicircle(1.0).unwrap();
            let lhs = log_energy(&pushforward(&mu, &f).unwrap()).unwrap() - log_energy(&mu).unwrap();
            let rhs = cov_correction(&mu, &f).unwrap();
            prop_assert!((lhs - rhs).abs() < 2e-3);
        }
    }
}
