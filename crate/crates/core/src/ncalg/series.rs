use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::poly::{CoefficientAlgebra, Monomial, NcPoly};

/// A power series known through a polynomial truncation. `truncated = false`
/// means the polynomial is the whole series.
#[derive(Clone, Debug)]
pub struct PowerSeries<T> {
    pub poly: NcPoly<T>,
    pub truncated: bool,
}

impl<T: Real> PowerSeries<T> {
    pub fn polynomial(poly: NcPoly<T>) -> Self {
        Self { poly, truncated: false }
    }

    pub fn truncation(poly: NcPoly<T>) -> Self {
        Self { poly, truncated: true }
    }
}

fn monomial_majorant<T: Real>(m: &Monomial, radii: &[T], norms: &[T]) -> T {
    let mut v = T::one();
    for s in &m.slots {
        for g in s {
            v *= norms[g.id];
        }
    }
    for &i in &m.vars {
        v *= radii[i];
    }
    v
}

fn check_radii<T: Real>(f: &NcPoly<T>, radii: &[T]) -> Result<()> {
    if radii.len() != f.arity() {
        return Err(Error::DimensionMismatch {
            expected: f.arity(),
            found: radii.len(),
        });
    }
    if radii.iter().any(|&r| !(r > T::zero())) {
        return Err(Error::InvalidParameter("radii must be positive".into()));
    }
    Ok(())
}

/// Commutative majorant `F̂` at `radii`: every coefficient replaced by
/// `|c|·Π‖b‖` and every `t_i` by `radii[i]`. `norms[g]` is the norm of
/// generator `g`.
pub fn majorant_value<T: Real>(f: &NcPoly<T>, radii: &[T], norms: &[T]) -> Result<T> {
    check_radii(f, radii)?;
    Ok(f.terms().fold(T::zero(), |acc, (m, c)| {
        acc + c.norm() * monomial_majorant(m, radii, norms)
    }))
}

/// Per-degree majorant sums `a_d`, `d = 0..=deg`.
fn degree_sums<T: Real>(f: &NcPoly<T>, radii: &[T], norms: &[T]) -> Vec<T> {
    let mut a = vec![T::zero(); f.degree() + 1];
    for (m, c) in f.terms() {
        a[m.degree()] += c.norm() * monomial_majorant(m, radii, norms);
    }
    a
}

/// Whether the majorant certifies convergence at `radii`. Polynomials always
/// converge. For truncations the root test `a_D^{1/D} < 1` is applied to the
/// top-degree majorant sum `a_D`.
pub fn majorant_radius<T: Real>(f: &PowerSeries<T>, radii: &[T], norms: &[T]) -> Result<bool> {
    check_radii(&f.poly, radii)?;
    if !f.truncated {
        return Ok(true);
    }
    let a = degree_sums(&f.poly, radii, norms);
    let d = a.len() - 1;
    if d == 0 {
        return Ok(true);
    }
    Ok(a[d].powf(T::one() / T::from_usize(d).unwrap()) < T::one())
}

/// Componentwise composition `F ∘ G`.
pub fn compose<T: Real>(f: &[NcPoly<T>], g: &[NcPoly<T>]) -> Result<Vec<NcPoly<T>>> {
    f.iter().map(|fi| fi.compose(g)).collect()
}

/// Evaluates a monomial on ε-graded inputs, keeping grades `< order`.
fn graded_monomial<T: Real>(
    m: &Monomial,
    g: &[Vec<NcPoly<T>>],
    n: usize,
    alg: &Arc<CoefficientAlgebra<T>>,
    order: usize,
) -> Result<Vec<NcPoly<T>>> {
    let slot = |s: &Vec<_>| {
        NcPoly::from_terms(
            n,
            alg.clone(),
            vec![(
                Monomial {
                    vars: vec![],
                    slots: vec![s.clone()],
                },
                num_complex::Complex::new(T::one(), T::zero()),
            )],
        )
    };
    let mut acc: Vec<NcPoly<T>> = (0..order).map(|_| NcPoly::zero(n, alg.clone())).collect();
    acc[0] = slot(&m.slots[0]);
    for (p, &v) in m.vars.iter().enumerate() {
        let right = slot(&m.slots[p + 1]);
        let mut next: Vec<NcPoly<T>> = (0..order).map(|_| NcPoly::zero(n, alg.clone())).collect();
        for (ra, a) in acc.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (rb, b) in g.iter().enumerate() {
                if ra + rb >= order || b[v].is_zero() {
                    continue;
                }
                next[ra + rb] = next[ra + rb].add(&a.multiply(&b[v])?.multiply(&right)?)?;
            }
        }
        acc = next;
    }
    Ok(acc)
}

/// Formal inverse of `F_i = t_i + ε·P_i`, truncated after `ε^order`:
/// `G = Σ_r ε^r G_r` with `G_0 = t` and `G_r = -[P(G)]_{r-1}`, so that
/// `F∘G = id + O(ε^{order+1})`. The majorant of `ε^order·G_order` at unit
/// radii must pass the root test, otherwise the expansion is rejected.
pub fn perturbation_inverse<T: Real>(p: &[NcPoly<T>], eps: T, order: usize) -> Result<Vec<NcPoly<T>>> {
    let n = p.len();
    let Some(first) = p.first() else {
        return Ok(vec![]);
    };
    let alg = first.algebra().clone();
    for pi in p {
        first.check_compatible(pi)?;
        if pi.arity() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: pi.arity(),
            });
        }
    }
    // graded[r][j] = G_{r,j}
    let mut graded: Vec<Vec<NcPoly<T>>> = vec![(0..n).map(|j| NcPoly::var(n, alg.clone(), j)).collect()];
    for r in 1..=order {
        // [P(G)]_{r-1} needs G_0..G_{r-1}.
        let row = p
            .iter()
            .map(|pj| {
                let mut acc = NcPoly::zero(n, alg.clone());
                for (m, &c) in pj.terms() {
                    let gm = graded_monomial(m, &graded, n, &alg, r)?;
                    acc = acc.add(&gm[r - 1].scale(c))?;
                }
                Ok(acc.scale_real(-T::one()))
            })
            .collect::<Result<Vec<_>>>()?;
        graded.push(row);
    }
    if order > 0 {
        let norms = alg.generator_norms()?;
        let unit = vec![T::one(); n];
        let mut top = T::zero();
        for g in &graded[order] {
            top += majorant_value(g, &unit, &norms)?;
        }
        let ratio = (top.powf(T::one() / T::from_usize(order).unwrap())) * eps.abs();
        if !(ratio < T::one()) {
            return Err(Error::MajorantDivergence {
                ratio: ratio.as_f64(),
                order,
            });
        }
    }
    let mut out: Vec<NcPoly<T>> = (0..n).map(|_| NcPoly::zero(n, alg.clone())).collect();
    let mut w = T::one();
    for row in &graded {
        for (o, g) in out.iter_mut().zip(row) {
            *o = o.add(&g.scale_real(w))?;
        }
        w *= eps;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{gue, MatrixTuple};
    use crate::ncalg::{parse_poly, parse_poly_in, Embedding};
    use num_complex::Complex;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn geometric(deg: usize) -> PowerSeries<f64> {
        let t = parse_poly::<f64>("0.5 t1").unwrap();
        let mut acc = NcPoly::zero(1, t.algebra().clone());
        for d in 0..=deg {
            acc = acc.add(&t.pow(d).unwrap()).unwrap();
        }
        PowerSeries::truncation(acc)
    }

    #[test]
    fn geometric_growth_test() {
        let s = geometric(30);
        assert!(majorant_radius(&s, &[1.9], &[]).unwrap());
        assert!(!majorant_radius(&s, &[2.1], &[]).unwrap());
        let p = PowerSeries::polynomial(s.poly.clone());
        assert!(majorant_radius(&p, &[100.0], &[]).unwrap());
        assert!(majorant_radius(&p, &[0.0], &[]).is_err());
    }

    #[test]
    fn majorant_of_coefficient_word() {
        let f = parse_poly::<f64>("-2 b0 t1 b1").unwrap();
        let v = majorant_value(&f, &[3.0], &[0.5, 4.0]).unwrap();
        assert!((v - 2.0 * 0.5 * 4.0 * 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_perturbation_is_identity() {
        let p = vec![parse_poly::<f64>("0 t1 + 0 t2").unwrap(); 2];
        let g = perturbation_inverse(&p, 0.3, 4).unwrap();
        assert_eq!(g[0], NcPoly::var(2, p[0].algebra().clone(), 0));
        assert_eq!(g[1], NcPoly::var(2, p[0].algebra().clone(), 1));
    }

    fn eval_tuple(f: &[NcPoly<f64>], t: &MatrixTuple<f64>) -> MatrixTuple<f64> {
        let e = Embedding::scalars(t.dim());
        MatrixTuple::from_mats(f.iter().map(|fi| fi.evaluate_selfadjoint(t, &e).unwrap()).collect()).unwrap()
    }

    #[test]
    fn quadratic_inverse_residual_is_third_order() {
        let p = vec![parse_poly::<f64>("t1^2").unwrap()];
        let t = MatrixTuple::from_mats(vec![gue(3, 0.25, &mut ChaCha20Rng::seed_from_u64(5))]).unwrap();
        let residual = |eps: f64| {
            let g = perturbation_inverse(&p, eps, 2).unwrap();
            let f = vec![NcPoly::var(1, p[0].algebra().clone(), 0)
                .add(&p[0].scale_real(eps))
                .unwrap()];
            let fg = compose(&f, &g).unwrap();
            let y = eval_tuple(&fg, &t);
            y.get(0).as_mat().max_abs_diff(t.get(0).as_mat())
        };
        let r1 = residual(1e-2);
        let r2 = residual(5e-3);
        let rate = (r1 / r2).log2();
        assert!((rate - 3.0).abs() < 0.2, "rate {rate}");
        let g = perturbation_inverse(&p, 0.5, 2).unwrap();
        assert_eq!(g[0].to_string(), "t1 - 0.5 t1 t1 + 0.5 t1 t1 t1");
        assert!(matches!(
            perturbation_inverse(&p, 1.0, 3),
            Err(Error::MajorantDivergence { .. })
        ));
    }

    #[test]
    fn linear_inverse_matches_matrix_inverse() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let a: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let alg = parse_poly::<f64>("t1 t2").unwrap().algebra().clone();
        let text = |r: usize| format!("({}) t1 + ({}) t2", a[2 * r], a[2 * r + 1]);
        let p = vec![
            parse_poly_in(&text(0), 2, alg.clone()).unwrap(),
            parse_poly_in(&text(1), 2, alg).unwrap(),
        ];
        let eps = 0.2;
        let g = perturbation_inverse(&p, eps, 60).unwrap();
        // (I + εA)^{-1}
        let m = [1.0 + eps * a[0], eps * a[1], eps * a[2], 1.0 + eps * a[3]];
        let det = m[0] * m[3] - m[1] * m[2];
        let inv = [m[3] / det, -m[1] / det, -m[2] / det, m[0] / det];
        for (j, gj) in g.iter().enumerate() {
            for (mono, c) in gj.terms() {
                assert_eq!(mono.degree(), 1);
                let want = inv[2 * j + mono.vars[0]];
                assert!((c - Complex::new(want, 0.0)).norm() < 1e-10);
            }
        }
    }
}
