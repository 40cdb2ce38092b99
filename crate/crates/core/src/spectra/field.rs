use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type Fun = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A real function with its derivative.
#[derive(Clone)]
pub struct ScalarField {
    name: String,
    f: Fun,
    df: Fun,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField").field("name", &self.name).finish()
    }
}

impl ScalarField {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
            df: Arc::new(df),
        }
    }

    pub fn identity() -> Self {
        Self::new("identity", |x| x, |_| 1.0)
    }

    /// `x ↦ a·x + b`.
    pub fn affine(a: f64, b: f64) -> Self {
        Self::new(format!("affine:{a},{b}"), move |x| a * x + b, move |_| a)
    }

    /// `x ↦ Σ c_i x^i`.
    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        let name = format!(
            "poly:{}",
            coeffs.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
        );
        let dc: Vec<f64> = coeffs.iter().enumerate().skip(1).map(|(i, c)| i as f64 * c).collect();
        let horner = |c: &[f64], x: f64| c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci);
        Self::new(name, move |x| horner(&coeffs, x), move |x| horner(&dc, x))
    }

    /// `x ↦ s·atan(x/s)`, the identity near 0 with bounded range.
    pub fn arctan(s: f64) -> Self {
        Self::new(
            format!("arctan:{s}"),
            move |x| s * (x / s).atan(),
            move |x| 1.0 / (1.0 + (x / s) * (x / s)),
        )
    }

    /// Piecewise-linear interpolation of samples `(xs[i], ys[i])`; constant
    /// slope extension outside.
    pub fn tabulated(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::DimensionMismatch {
                expected: xs.len().max(2),
                found: ys.len(),
            });
        }
        if xs.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter("tabulated abscissae must increase".into()));
        }
        let xs = Arc::new(xs);
        let ys = Arc::new(ys);
        let seg = {
            let xs = xs.clone();
            move |x: f64| xs.partition_point(|&e| e <= x).clamp(1, xs.len() - 1) - 1
        };
        let slope = {
            let (xs, ys) = (xs.clone(), ys.clone());
            move |i: usize| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])
        };
        let (seg2, slope2) = (seg.clone(), slope.clone());
        let (xs2, ys2) = (xs.clone(), ys.clone());
        Ok(Self::new(
            "tabulated",
            move |x| {
                let i = seg(x);
                ys2[i] + slope(i) * (x - xs2[i])
            },
            move |x| slope2(seg2(x)),
        ))
    }

    /// Parses `identity`, `affine:a,b`, `poly:c0,c1,...` or `arctan:s`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (head, tail) = spec.split_once(':').unwrap_or((spec, ""));
        let nums = || -> Result<Vec<f64>> {
            tail.split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|_| Error::Parse {
                        pos: head.len() + 1,
                        msg: format!("bad number '{s}' in map '{spec}'"),
                    })
                })
                .collect()
        };
        let bad = |msg: &str| Error::Parse {
            pos: 0,
            msg: format!("{msg} in map '{spec}'"),
        };
        match head.trim() {
            "identity" if tail.is_empty() => Ok(Self::identity()),
            "affine" => match nums()?.as_slice() {
                [a, b] => Ok(Self::affine(*a, *b)),
                _ => Err(bad("affine needs two numbers")),
            },
            "poly" => Ok(Self::polynomial(nums()?)),
            "arctan" => match nums()?.as_slice() {
                [s] if *s > 0.0 => Ok(Self::arctan(*s)),
                _ => Err(bad("arctan needs one positive scale")),
            },
            _ => Err(bad("unknown map")),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn deriv(&self, x: f64) -> f64 {
        (self.df)(x)
    }

    /// Values and derivatives on a grid.
    pub fn sample_on(&self, xs: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (
            xs.iter().map(|&x| self.eval(x)).collect(),
            xs.iter().map(|&x| self.deriv(x)).collect(),
        )
    }

    /// Pointwise `self + c·other`.
    pub fn add_scaled(&self, other: &ScalarField, c: f64) -> Self {
        let (f, g, df, dg) = (self.f.clone(), other.f.clone(), self.df.clone(), other.df.clone());
        Self::new(
            format!("{}+{}*{}", self.name, c, other.name),
            move |x| f(x) + c * g(x),
            move |x| df(x) + c * dg(x),
        )
    }

    /// Whether the samples on `xs` are strictly monotone with `|Δf/Δx|`
    /// at least `floor`. Returns +1 / -1 for the direction.
    pub fn check_monotone(&self, xs: &[f64], floor: f64) -> Result<f64> {
        let ys: Vec<f64> = xs.iter().map(|&x| self.eval(x)).collect();
        let mut dir = 0.0;
        for i in 0..xs.len().saturating_sub(1) {
            let q = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
            if q.abs() < floor {
                return Err(Error::SingularDerivative { at: xs[i], value: q });
            }
            if dir == 0.0 {
                dir = q.signum();
            } else if q.signum() != dir {
                return Err(Error::NotMonotone { at: xs[i] });
            }
        }
        Ok(if dir == 0.0 { 1.0 } else { dir })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_eval() {
        let f = ScalarField::parse("poly:0,1,0,1").unwrap();
        assert_eq!(f.eval(2.0), 10.0);
        assert_eq!(f.deriv(2.0), 13.0);
        let a = ScalarField::parse("affine:2,-1").unwrap();
        assert_eq!(a.eval(3.0), 5.0);
        let t = ScalarField::parse("arctan:2").unwrap();
        assert!((t.eval(1.0) - 2.0 * 0.5f64.atan()).abs() < 1e-15);
        assert!(ScalarField::parse("cosh").is_err());
        assert!(ScalarField::parse("affine:1").is_err());
        assert!(ScalarField::parse("poly:1,x").is_err());
    }

    #[test]
    fn derivatives_match_differences() {
        for f in [
            ScalarField::arctan(0.7),
            ScalarField::polynomial(vec![0.3, 1.0, -0.2, 0.5]),
        ] {
            for &x in &[-1.3, 0.0, 0.4, 2.2] {
                let h = 1e-6;
                let fd = (f.eval(x + h) - f.eval(x - h)) / (2.0 * h);
                assert!((fd - f.deriv(x)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn monotonicity() {
        let xs: Vec<f64> = (0..=40).map(|i| -2.0 + 0.1 * i as f64).collect();
        assert_eq!(ScalarField::affine(-2.0, 0.0).check_monotone(&xs, 1e-10).unwrap(), -1.0);
        assert!(matches!(
            ScalarField::polynomial(vec![0.0, 0.0, 1.0]).check_monotone(&xs, 1e-10),
            Err(Error::NotMonotone { .. })
        ));
        assert!(matches!(
            ScalarField::affine(0.0, 1.0).check_monotone(&xs, 1e-10),
            Err(Error::SingularDerivative { .. })
        ));
    }

    #[test]
    fn tabulated_interpolates() {
        let f = ScalarField::tabulated(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 3.0]).unwrap();
        assert_eq!(f.eval(0.5), 1.0);
        assert_eq!(f.eval(2.0), 2.5);
        assert_eq!(f.deriv(2.0), 0.5);
        assert_eq!(f.eval(4.0), 3.5);
    }
}
