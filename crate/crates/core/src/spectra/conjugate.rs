use crate::error::{Error, Result};

use super::field::ScalarField;
use super::measure::{Discretized, SpectralMeasure, DEFAULT_CELLS};

/// Conjugate variable `J(x) = 2·PV∫ p(t)/(x - t) dt` of a density `p`,
/// with `p` taken piecewise linear through its nodal values.
#[derive(Clone, Debug)]
pub struct ConjugateVariable {
    edges: Vec<f64>,
    nodal: Vec<f64>,
    slopes: Vec<f64>,
}

fn xlog(u: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        u * u.abs().ln()
    }
}

impl ConjugateVariable {
    pub fn from_discretized(d: &Discretized) -> Self {
        let slopes = (0..d.cells())
            .map(|i| (d.nodal[i + 1] - d.nodal[i]) / d.width(i))
            .collect();
        Self {
            edges: d.edges.clone(),
            nodal: d.nodal.clone(),
            slopes,
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.edges[0], *self.edges.last().unwrap())
    }

    /// `J(x)`; the principal value is integrated in closed form cell by cell.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.support();
        if !(x >= lo && x <= hi) {
            return Err(Error::OutsideSupport { x, lo, hi });
        }
        let (t, p, s) = (&self.edges, &self.nodal, &self.slopes);
        let m = s.len();
        let mut acc = 0.0;
        for j in 1..m {
            acc += (s[j] - s[j - 1]) * xlog(x - t[j]);
        }
        let log_end = |u: f64, pv: f64| if pv == 0.0 { 0.0 } else { pv * u.abs().ln() };
        acc += log_end(x - t[0], p[0]) + s[0] * xlog(x - t[0]);
        acc -= log_end(x - t[m], p[m]) + s[m - 1] * xlog(x - t[m]);
        acc -= p[m] - p[0];
        Ok(2.0 * acc)
    }

    /// As a scalar field on the support (derivative by central differences).
    pub fn to_field(&self) -> ScalarField {
        let (lo, hi) = self.support();
        let h = 1e-6 * (hi - lo);
        let (a, b) = (self.clone(), self.clone());
        ScalarField::new(
            "conjugate",
            move |x| a.eval(x).unwrap_or(f64::NAN),
            move |x| {
                let (l, r) = ((x - h).max(lo), (x + h).min(hi));
                (b.eval(r).unwrap_or(f64::NAN) - b.eval(l).unwrap_or(f64::NAN)) / (r - l)
            },
        )
    }

    /// `sup |J(x) - g(x)|` over `points` equally spaced `x` in the central
    /// `fraction` of the support.
    pub fn sup_deviation(&self, g: impl Fn(f64) -> f64, fraction: f64, points: usize) -> Result<f64> {
        let (lo, hi) = self.support();
        let (c, r) = (0.5 * (lo + hi), 0.5 * (hi - lo) * fraction);
        let mut worst: f64 = 0.0;
        for i in 0..points {
            let x = c - r + 2.0 * r * i as f64 / (points - 1).max(1) as f64;
            worst = worst.max((self.eval(x)? - g(x)).abs());
        }
        Ok(worst)
    }
}

/// Conjugate variable of a measure with a density.
pub fn conjugate_variable(mu: &SpectralMeasure) -> Result<ConjugateVariable> {
    Ok(ConjugateVariable::from_discretized(&mu.discretize(DEFAULT_CELLS)?))
}

/// `(∫ J·P dμ, ∫ x·P dμ)`; the two agree at a semicircular law.
pub fn inner_product_stationarity(mu: &SpectralMeasure, p: &ScalarField) -> Result<(f64, f64)> {
    let d = mu.discretize(DEFAULT_CELLS)?;
    let j = ConjugateVariable::from_discretized(&d);
    let mut err = None;
    let lhs = d.integrate(|x| match j.eval(x) {
        Ok(v) => v * p.eval(x),
        Err(e) => {
            err = Some(e);
            0.0
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let rhs = d.integrate(|x| x * p.eval(x));
    Ok((lhs, rhs))
}
