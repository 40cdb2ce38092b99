use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::SelfAdjointMatrix;
use crate::scalar::Real;

/// Cells used when an analytic law is discretized.
pub const DEFAULT_CELLS: usize = 2048;

const MASS_TOL: f64 = 1e-10;
const GRID_MASS_TOL: f64 = 1e-6;

/// A probability measure on the line.
///
/// JSON form (field `kind` selects the variant):
///
/// ```text
/// {"kind": "atomic", "atoms": [[location, weight], ...]}
/// {"kind": "gridded", "support": [a, b], "values": [p_0, ..., p_M]}
/// {"kind": "semicircle", "variance": v}
/// {"kind": "uniform", "a": a, "b": b}
/// {"kind": "arcsine", "a": a, "b": b}
/// {"kind": "histogram", "edges": [e_0, ..., e_M], "masses": [m_0, ..., m_{M-1}]}
/// ```
///
/// `gridded` values are density samples on the uniform grid of `M+1` nodes
/// over `support`, linear in between. `histogram` has constant density
/// `m_i / (e_{i+1} - e_i)` on each cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SpectralMeasure {
    Atomic { atoms: Vec<(f64, f64)> },
    Gridded { support: (f64, f64), values: Vec<f64> },
    Semicircle { variance: f64 },
    Uniform { a: f64, b: f64 },
    Arcsine { a: f64, b: f64 },
    Histogram { edges: Vec<f64>, masses: Vec<f64> },
}

/// Piecewise data on a grid: cell masses and nodal density values.
#[derive(Clone, Debug, PartialEq)]
pub struct Discretized {
    pub edges: Vec<f64>,
    pub masses: Vec<f64>,
    pub nodal: Vec<f64>,
}

impl Discretized {
    pub fn cells(&self) -> usize {
        self.masses.len()
    }

    pub fn width(&self, i: usize) -> f64 {
        self.edges[i + 1] - self.edges[i]
    }

    /// Constant density on cell `i`.
    pub fn cell_density(&self, i: usize) -> f64 {
        self.masses[i] / self.width(i)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.edges[0], *self.edges.last().unwrap())
    }

    /// `∫ g dμ` with two Gauss–Legendre nodes per cell.
    pub fn integrate(&self, mut g: impl FnMut(f64) -> f64) -> f64 {
        let r = 0.5 / 3f64.sqrt();
        (0..self.cells())
            .map(|i| {
                let (mid, h) = (0.5 * (self.edges[i] + self.edges[i + 1]), self.width(i));
                0.5 * self.masses[i] * (g(mid - r * h) + g(mid + r * h))
            })
            .sum()
    }
}

fn chebyshev_edges(a: f64, b: f64, cells: usize) -> Vec<f64> {
    let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
    let mut e: Vec<f64> = (0..=cells)
        .map(|i| c - r * (PI * i as f64 / cells as f64).cos())
        .collect();
    // Mirror so symmetric laws get a symmetric grid.
    for i in 0..cells / 2 {
        e[cells - i] = c + (c - e[i]);
    }
    if cells % 2 == 0 {
        e[cells / 2] = c;
    }
    e[0] = a;
    e[cells] = b;
    e
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl SpectralMeasure {
    pub fn semicircle(variance: f64) -> Result<Self> {
        Self::Semicircle { variance }.validated()
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        Self::Uniform { a, b }.validated()
    }

    pub fn arcsine(a: f64, b: f64) -> Result<Self> {
        Self::Arcsine { a, b }.validated()
    }

    pub fn atomic(atoms: Vec<(f64, f64)>) -> Result<Self> {
        Self::Atomic { atoms }.validated()
    }

    pub fn gridded(support: (f64, f64), values: Vec<f64>) -> Result<Self> {
        Self::Gridded { support, values }.validated()
    }

    pub fn histogram(edges: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        Self::Histogram { edges, masses }.validated()
    }

    /// Empirical spectral distribution: eigenvalues with weight `1/k` each,
    /// equal eigenvalues merged into one atom.
    pub fn esd<T: Real>(m: &SelfAdjointMatrix<T>) -> Result<Self> {
        let ev = m.eigenvalues()?;
        let k = ev.len() as f64;
        let mut atoms: Vec<(f64, usize)> = Vec::new();
        for x in ev.into_iter().map(|x| x.as_f64()) {
            match atoms.last_mut() {
                Some((y, c)) if *y == x => *c += 1,
                _ => atoms.push((x, 1)),
            }
        }
        Ok(Self::Atomic {
            atoms: atoms.into_iter().map(|(x, c)| (x, c as f64 / k)).collect(),
        })
    }

    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text).map_err(|e| Error::Document {
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        })?;
        m.validated()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("measure serializes")
    }

    fn interval(a: f64, b: f64) -> Result<()> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidParameter(format!("need finite a < b, got [{a}, {b}]")));
        }
        Ok(())
    }

    /// Checks the invariants: nonnegative weights and unit mass.
    pub fn validated(self) -> Result<Self> {
        match &self {
            Self::Atomic { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::InvalidParameter("atomic measure without atoms".into()));
                }
                if atoms.iter().any(|&(x, w)| !x.is_finite() || !(w >= 0.0)) {
                    return Err(Error::InvalidParameter(
                        "atoms need finite locations and nonnegative weights".into(),
                    ));
                }
                let total: f64 = atoms.iter().map(|a| a.1).sum();
                if (total - 1.0).abs() > MASS_TOL {
                    return Err(Error::NotNormalized(total));
                }
            }
            Self::Gridded { support, values } => {
                Self::interval(support.0, support.1)?;
                if values.len() < 2 || values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "gridded density needs at least 2 finite nonnegative values".into(),
                    ));
                }
                let h = (support.1 - support.0) / (values.len() - 1) as f64;
                let total: f64 = values.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).sum();
                if (total - 1.0).abs() > GRID_MASS_TOL {
                    return Err(Error::NotNormalized(total));
                }
            }
            Self::Semicircle { variance } => {
                if !(*variance > 0.0 && variance.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "variance must be positive, got {variance}"
                    )));
                }
            }
            Self::Uniform { a, b } | Self::Arcsine { a, b } => Self::interval(*a, *b)?,
            Self::Histogram { edges, masses } => {
                if edges.len() != masses.len() + 1 || masses.is_empty() {
                    return Err(Error::DimensionMismatch {
                        expected: masses.len() + 1,
                        found: edges.len(),
                    });
                }
                if edges.windows(2).any(|w| !(w[0] < w[1])) || edges.iter().any(|e| !e.is_finite()) {
                    return Err(Error::InvalidParameter("histogram edges must increase strictly".into()));
                }
                if masses.iter().any(|m| !(*m >= 0.0)) {
                    return Err(Error::InvalidParameter("histogram masses must be nonnegative".into()));
                }
                let total: f64 = masses.iter().sum();
                if (total - 1.0).abs() > MASS_TOL {
                    return Err(Error::NotNormalized(total));
                }
            }
        }
        Ok(self)
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Self::Atomic { .. })
    }

    /// Closed interval containing the support.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::Atomic { atoms } => atoms
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(x, _)| {
                    (lo.min(x), hi.max(x))
                }),
            Self::Gridded { support, .. } => *support,
            Self::Semicircle { variance } => {
                let r = 2.0 * variance.sqrt();
                (-r, r)
            }
            Self::Uniform { a, b } | Self::Arcsine { a, b } => (*a, *b),
            Self::Histogram { edges, .. } => (edges[0], *edges.last().unwrap()),
        }
    }

    /// Density at `x` (0 outside the support); `None` for atomic measures.
    pub fn density(&self, x: f64) -> Option<f64> {
        let (lo, hi) = self.support();
        if self.is_atomic() {
            return None;
        }
        if x < lo || x > hi {
            return Some(0.0);
        }
        Some(match self {
            Self::Atomic { .. } => unreachable!(),
            Self::Gridded { support, values } => {
                let h = (support.1 - support.0) / (values.len() - 1) as f64;
                let u = ((x - support.0) / h).min((values.len() - 1) as f64);
                let i = (u.floor() as usize).min(values.len() - 2);
                let f = u - i as f64;
                values[i] * (1.0 - f) + values[i + 1] * f
            }
            Self::Semicircle { variance } => (4.0 * variance - x * x).max(0.0).sqrt() / (2.0 * PI * variance),
            Self::Uniform { a, b } => 1.0 / (b - a),
            Self::Arcsine { a, b } => 1.0 / (PI * ((x - a) * (b - x)).sqrt()),
            Self::Histogram { edges, masses } => {
                let i = edges.partition_point(|&e| e <= x).clamp(1, masses.len()) - 1;
                masses[i] / (edges[i + 1] - edges[i])
            }
        })
    }

    /// Distribution function.
    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        match self {
            Self::Atomic { atoms } => atoms.iter().filter(|a| a.0 <= x).map(|a| a.1).sum(),
            _ if x <= lo => 0.0,
            _ if x >= hi => 1.0,
            Self::Semicircle { variance } => {
                let r = 2.0 * variance.sqrt();
                let u = (x / r).clamp(-1.0, 1.0);
                0.5 + (u * (1.0 - u * u).sqrt() + u.asin()) / PI
            }
            Self::Uniform { a, b } => (x - a) / (b - a),
            Self::Arcsine { a, b } => 2.0 / PI * ((x - a) / (b - a)).sqrt().asin(),
            Self::Gridded { .. } | Self::Histogram { .. } => {
                let d = self.discretize(DEFAULT_CELLS).expect("density kinds discretize");
                let i = d.edges.partition_point(|&e| e <= x).clamp(1, d.cells()) - 1;
                let below: f64 = d.masses[..i].iter().sum();
                below + d.masses[i] * (x - d.edges[i]) / d.width(i)
            }
        }
    }

    /// Cell masses and nodal densities on a grid. Analytic laws use `cells`
    /// Chebyshev-clustered cells with exact masses; infinite endpoint
    /// densities are replaced by the value that makes the trapezoid mass of
    /// the end cell exact. Histograms and gridded densities keep their own
    /// grids.
    pub fn discretize(&self, cells: usize) -> Result<Discretized> {
        match self {
            Self::Atomic { .. } => Err(Error::NeedsDensity),
            Self::Histogram { edges, masses } => {
                let m = masses.len();
                let dens: Vec<f64> = (0..m).map(|i| masses[i] / (edges[i + 1] - edges[i])).collect();
                let nodal = (0..=m)
                    .map(|j| match j {
                        0 => dens[0],
                        j if j == m => dens[m - 1],
                        j => 0.5 * (dens[j - 1] + dens[j]),
                    })
                    .collect();
                Ok(Discretized {
                    edges: edges.clone(),
                    masses: masses.clone(),
                    nodal,
                })
            }
            Self::Gridded { support, values } => {
                let m = values.len() - 1;
                let h = (support.1 - support.0) / m as f64;
                let edges: Vec<f64> = (0..=m).map(|i| support.0 + h * i as f64).collect();
                let raw: Vec<f64> = values.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).collect();
                let total: f64 = raw.iter().sum();
                Ok(Discretized {
                    edges,
                    masses: raw.iter().map(|x| x / total).collect(),
                    nodal: values.iter().map(|v| v / total).collect(),
                })
            }
            _ => {
                let cells = cells.max(1);
                let (a, b) = self.support();
                let edges = chebyshev_edges(a, b, cells);
                let cdf: Vec<f64> = edges.iter().map(|&x| self.cdf(x)).collect();
                let masses: Vec<f64> = cdf.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect();
                let mut nodal: Vec<f64> = edges.iter().map(|&x| self.density(x).unwrap()).collect();
                if !nodal[0].is_finite() {
                    nodal[0] = (2.0 * masses[0] / (edges[1] - edges[0]) - nodal[1]).max(0.0);
                }
                if !nodal[cells].is_finite() {
                    let h = edges[cells] - edges[cells - 1];
                    nodal[cells] = (2.0 * masses[cells - 1] / h - nodal[cells - 1]).max(0.0);
                }
                Ok(Discretized { edges, masses, nodal })
            }
        }
    }

    /// `∫ x^p dμ`.
    pub fn moment(&self, p: usize) -> f64 {
        match self {
            Self::Atomic { atoms } => atoms.iter().map(|&(x, w)| w * x.powi(p as i32)).sum(),
            Self::Semicircle { variance } => {
                if p % 2 == 1 {
                    0.0
                } else {
                    let m = p / 2;
                    binomial(2 * m, m) / (m + 1) as f64 * variance.powi(m as i32)
                }
            }
            Self::Uniform { a, b } => (b.powi(p as i32 + 1) - a.powi(p as i32 + 1)) / ((p + 1) as f64 * (b - a)),
            Self::Arcsine { a, b } => {
                // x = c + r·y with y arcsine on [-1, 1], E[y^q] = C(q, q/2)/2^q for even q.
                let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
                (0..=p)
                    .step_by(2)
                    .map(|q| {
                        let ey = binomial(q, q / 2) / 2f64.powi(q as i32);
                        binomial(p, q) * r.powi(q as i32) * c.powi((p - q) as i32) * ey
                    })
                    .sum()
            }
            Self::Histogram { edges, masses } => masses
                .iter()
                .enumerate()
                .map(|(i, m)| {
                    let (l, h) = (edges[i], edges[i + 1]);
                    m * (h.powi(p as i32 + 1) - l.powi(p as i32 + 1)) / ((p + 1) as f64 * (h - l))
                })
                .sum(),
            Self::Gridded { .. } => {
                let d = self.discretize(DEFAULT_CELLS).expect("gridded discretizes");
                let gl = Discretized { nodal: vec![], ..d };
                gl.integrate(|x| x.powi(p as i32))
            }
        }
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    pub fn variance(&self) -> f64 {
        self.moment(2) - self.mean().powi(2)
    }

    /// The `k` mid-quantiles `F^{-1}((i + ½)/k)`, ascending.
    pub fn quantiles(&self, k: usize) -> Result<Vec<f64>> {
        let us = (0..k).map(|i| (i as f64 + 0.5) / k as f64);
        match self {
            Self::Atomic { atoms } => {
                let mut sorted = atoms.clone();
                sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                Ok(us
                    .map(|u| {
                        let mut acc = 0.0;
                        for &(x, w) in &sorted {
                            acc += w;
                            if acc >= u {
                                return x;
                            }
                        }
                        sorted.last().unwrap().0
                    })
                    .collect())
            }
            _ => {
                let d = self.discretize(DEFAULT_CELLS)?;
                let mut cum = Vec::with_capacity(d.cells() + 1);
                cum.push(0.0);
                for m in &d.masses {
                    cum.push(cum.last().unwrap() + m);
                }
                Ok(us
                    .map(|u| {
                        let i = cum.partition_point(|&c| c < u).clamp(1, d.cells()) - 1;
                        let f = if d.masses[i] > 0.0 {
                            (u - cum[i]) / d.masses[i]
                        } else {
                            0.5
                        };
                        d.edges[i] + f.clamp(0.0, 1.0) * d.width(i)
                    })
                    .collect())
            }
        }
    }
}

/// Kolmogorov distance between the empirical law of `samples` and `μ`.
pub fn kolmogorov_distance(samples: &[f64], mu: &SpectralMeasure) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = mu.cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::sample_gue;

    #[test]
    fn esd_examples() {
        let m = SpectralMeasure::esd(&SelfAdjointMatrix::diag(&[1.0, -1.0])).unwrap();
        assert_eq!(
            m,
            SpectralMeasure::Atomic {
                atoms: vec![(-1.0, 0.5), (1.0, 0.5)]
            }
        );
        let id = SpectralMeasure::esd(&SelfAdjointMatrix::<f64>::identity(3)).unwrap();
        assert_eq!(id.cdf(0.999), 0.0);
        assert!((id.cdf(1.0) - 1.0).abs() < 1e-15);
        assert_eq!(id.support(), (1.0, 1.0));
    }

    #[test]
    fn gue_spectrum_is_semicircular() {
        let m = sample_gue::<f64>(256, 1.0, 7);
        let ev = m.eigenvalues().unwrap();
        let d = kolmogorov_distance(&ev, &SpectralMeasure::semicircle(1.0).unwrap());
        assert!(d < 0.05, "{d}");
    }

    #[test]
    fn semicircle_cdf_matches_density_quadrature() {
        let mu = SpectralMeasure::semicircle(1.3).unwrap();
        let (lo, _) = mu.support();
        for &x in &[-1.5, -0.3, 0.0, 0.8, 2.0] {
            let n = 200_000;
            let h = (x - lo) / n as f64;
            let q: f64 = (0..n).map(|i| mu.density(lo + (i as f64 + 0.5) * h).unwrap() * h).sum();
            assert!((q - mu.cdf(x)).abs() < 1e-6);
        }
    }

    #[test]
    fn discretization_conserves_mass() {
        for mu in [
            SpectralMeasure::semicircle(1.0).unwrap(),
            SpectralMeasure::uniform(-1.0, 2.0).unwrap(),
            SpectralMeasure::arcsine(-2.0, 2.0).unwrap(),
        ] {
            let d = mu.discretize(512).unwrap();
            assert!((d.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(d.nodal.iter().all(|x| x.is_finite() && *x >= 0.0));
            assert!((d.integrate(|x| x * x) - mu.moment(2)).abs() < 1e-4);
        }
        assert_eq!(
            SpectralMeasure::atomic(vec![(0.0, 1.0)]).unwrap().discretize(8),
            Err(Error::NeedsDensity)
        );
    }

    #[test]
    fn moments() {
        let sc = SpectralMeasure::semicircle(2.0).unwrap();
        assert_eq!(sc.moment(4), 8.0);
        assert_eq!(sc.moment(3), 0.0);
        let arc = SpectralMeasure::arcsine(-2.0f64.sqrt(), 2.0f64.sqrt()).unwrap();
        assert!((arc.variance() - 1.0).abs() < 1e-14);
        let u = SpectralMeasure::uniform(0.0, 1.0).unwrap();
        assert!((u.moment(2) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        assert!(SpectralMeasure::semicircle(0.0).is_err());
        assert_eq!(
            SpectralMeasure::atomic(vec![(0.0, 0.4)]).unwrap_err(),
            Error::NotNormalized(0.4)
        );
        assert!(SpectralMeasure::gridded((0.0, 1.0), vec![1.0, 1.0]).is_ok());
        assert!(SpectralMeasure::gridded((0.0, 1.0), vec![1.0, 1.1]).is_err());
        assert!(SpectralMeasure::uniform(1.0, 1.0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let mu = SpectralMeasure::from_json(r#"{"kind": "semicircle", "variance": 1}"#).unwrap();
        assert_eq!(mu, SpectralMeasure::Semicircle { variance: 1.0 });
        let a = SpectralMeasure::from_json(r#"{"kind":"atomic","atoms":[[1,0.5],[-1,0.5]]}"#).unwrap();
        assert_eq!(SpectralMeasure::from_json(&a.to_json()).unwrap(), a);
        let err = SpectralMeasure::from_json("{\n \"kind\": \"semicircle\",\n \"variance\": }").unwrap_err();
        assert!(matches!(err, Error::Document { line: 3, .. }));
    }

    #[test]
    fn quantiles_match_cdf() {
        let mu = SpectralMeasure::semicircle(1.0).unwrap();
        let q = mu.quantiles(10).unwrap();
        for (i, x) in q.iter().enumerate() {
            assert!((mu.cdf(*x) - (i as f64 + 0.5) / 10.0).abs() < 1e-6);
        }
        let a = SpectralMeasure::atomic(vec![(1.0, 0.5), (-1.0, 0.5)]).unwrap();
        assert_eq!(a.quantiles(4).unwrap(), vec![-1.0, -1.0, 1.0, 1.0]);
    }
}
