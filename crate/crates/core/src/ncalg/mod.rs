//! Non-commutative polynomials with coefficients in a matrix algebra `B`,
//! free difference quotients, evaluated Jacobians and their log-determinant.
//!
//! Tensor legs act on directions by `a ⊗ b : z ↦ a z b`.

mod deriv;
mod jacobian;
mod parse;
mod poly;
mod series;

pub use deriv::dquotient;
pub use jacobian::{jacobian, logabs_functional, singular_values, EvaluatedJacobian, NcJacobian, SINGULAR_FLOOR};
pub use parse::{parse_poly, parse_poly_in};
pub use poly::{CoefficientAlgebra, Embedding, Gen, Monomial, NcBiPoly, NcPoly};
pub use series::{compose, majorant_radius, majorant_value, perturbation_inverse, PowerSeries};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{gue, Mat, MatrixTuple, SelfAdjointMatrix};
    use num_complex::Complex;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use std::sync::Arc;

    fn rand_mat(rng: &mut ChaCha20Rng, k: usize) -> Mat<f64> {
        Mat::from_fn(k, |_, _| {
            Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    #[test]
    fn evaluate_examples() {
        let x1 = SelfAdjointMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let x2 = SelfAdjointMatrix::identity(2);
        let t = MatrixTuple::from_mats(vec![x1.clone(), x2]).unwrap();
        let e = Embedding::scalars(2);
        let f = parse_poly::<f64>("t1").unwrap();
        assert_eq!(f.evaluate(&t.select(&[0]), &e).unwrap(), *x1.as_mat());
        let g = parse_poly::<f64>("t1^2 + t2").unwrap();
        assert_eq!(g.evaluate(&t, &e).unwrap(), Mat::identity(2).scale_real(2.0));
    }

    #[test]
    fn evaluate_coefficient_word_by_hand() {
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let f = parse_poly::<f64>("b0 t1 b1 t2 b2 t1 b3 t4 b4").unwrap();
        let bs: Vec<Mat<f64>> = (0..5).map(|_| rand_mat(&mut rng, 2)).collect();
        let xs: Vec<SelfAdjointMatrix<f64>> = (0..4).map(|_| gue(2, 1.0, &mut rng)).collect();
        let t = MatrixTuple::from_mats(xs.clone()).unwrap();
        let got = f.evaluate(&t, &Embedding::explicit(2, bs.clone()).unwrap()).unwrap();
        let x = |i: usize| xs[i].as_mat().clone();
        let want = &(&(&(&(&(&(&(&bs[0] * &x(0)) * &bs[1]) * &x(1)) * &bs[2]) * &x(0)) * &bs[3]) * &x(3)) * &bs[4];
        assert!(got.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn block_embedding_acts_blockwise() {
        let b = Mat::from_real_rows(&[vec![1.0, 2.0], vec![0.0, -1.0]]).unwrap();
        let alg = Arc::new(CoefficientAlgebra::matrices(vec!["b".into()], vec![b.clone()]).unwrap());
        assert!(!alg.is_self_adjoint(0));
        let f = parse_poly_in("b", 1, alg.clone()).unwrap();
        let t = MatrixTuple::from_mats(vec![SelfAdjointMatrix::zeros(6)]).unwrap();
        let v = f.evaluate(&t, &Embedding::block(&alg, 6).unwrap()).unwrap();
        assert_eq!(v, b.kron_identity(3));
        assert!(Embedding::block(&alg, 5).is_err());
    }

    #[test]
    fn self_adjoint_evaluation_is_hermitian() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let a = rand_mat(&mut rng, 3);
        let alg = Arc::new(CoefficientAlgebra::matrices(vec!["a".into()], vec![a]).unwrap());
        let f = parse_poly_in("a t1 a* + t2 t1 t2 + 1i t1 t2 - 1i t2 t1", 2, alg.clone()).unwrap();
        assert!(f.is_selfadjoint());
        let t = MatrixTuple::from_mats(vec![gue(3, 1.0, &mut rng), gue(3, 1.0, &mut rng)]).unwrap();
        let v = f.evaluate_selfadjoint(&t, &Embedding::block(&alg, 3).unwrap());
        assert!(v.is_ok());
    }

    /// Random `B`-valued polynomial tuple of degree ≤ `deg` in `n` variables,
    /// made self-adjoint by adding its adjoint.
    pub(crate) fn random_map(
        rng: &mut ChaCha20Rng,
        n: usize,
        deg: usize,
        alg: &Arc<CoefficientAlgebra<f64>>,
    ) -> Vec<NcPoly<f64>> {
        let gens = alg.len();
        (0..n)
            .map(|_| {
                let terms = (0..rng.random_range(1..=4))
                    .map(|_| {
                        let d = rng.random_range(0..=deg);
                        let vars = (0..d).map(|_| rng.random_range(0..n)).collect();
                        let slots = (0..=d)
                            .map(|_| {
                                if gens > 0 && rng.random_bool(0.5) {
                                    vec![Gen {
                                        id: rng.random_range(0..gens),
                                        star: rng.random_bool(0.5),
                                    }]
                                } else {
                                    vec![]
                                }
                            })
                            .collect();
                        (
                            Monomial { vars, slots },
                            Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                        )
                    })
                    .collect();
                let f = NcPoly::from_terms(n, alg.clone(), terms);
                f.add(&f.adjoint()).unwrap()
            })
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn jacobian_matches_central_difference(seed in any::<u64>(), n in 1usize..=3, k in 1usize..=4) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let alg = Arc::new(CoefficientAlgebra::matrices(
                vec!["b".into(), "c".into()],
                vec![rand_mat(&mut rng, k), rand_mat(&mut rng, k)],
            ).unwrap());
            let f = random_map(&mut rng, n, 3, &alg);
            let e = Embedding::block(&alg, k).unwrap();
            let x = MatrixTuple::from_mats((0..n).map(|_| gue(k, 1.0, &mut rng)).collect()).unwrap();
            let h: Vec<SelfAdjointMatrix<f64>> = (0..n).map(|_| gue(k, 1.0, &mut rng)).collect();
            let j = jacobian(&f, &x, &e).unwrap();
            let hm: Vec<Mat<f64>> = h.iter().map(|m| m.as_mat().clone()).collect();
            let lin = j.apply(&hm).unwrap();
            let step = 1e-5;
            let shift = |s: f64| MatrixTuple::from_mats(
                x.mats().iter().zip(&h).map(|(a, b)| a.add(&b.scale(s))).collect()).unwrap();
            let (xp, xm) = (shift(step), shift(-step));
            for (fj, lj) in f.iter().zip(&lin) {
                let d = &fj.evaluate(&xp, &e).unwrap() - &fj.evaluate(&xm, &e).unwrap();
                let fd = d.scale_real(0.5 / step);
                let scale = lj.frobenius_norm().max(1.0);
                prop_assert!((&fd - lj).frobenius_norm() / scale < 1e-6);
            }
        }

        #[test]
        fn logabs_chain_rule(seed in any::<u64>(), n in 1usize..=2, k in 1usize..=3) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let alg = Arc::new(CoefficientAlgebra::<f64>::scalars());
            // Near-identity maps keep the Jacobians invertible.
            let perturb = |rng: &mut ChaCha20Rng| -> Vec<NcPoly<f64>> {
                random_map(rng, n, 2, &alg).into_iter().enumerate()
                    .map(|(i, p)| NcPoly::var(n, alg.clone(), i).add(&p.scale_real(0.1)).unwrap())
                    .collect()
            };
            let f = perturb(&mut rng);
            let g = perturb(&mut rng);
            let e = Embedding::scalars(k);
            let x = MatrixTuple::from_mats((0..n).map(|_| gue(k, 0.5, &mut rng)).collect()).unwrap();
            let fg = compose(&f, &g).unwrap();
            let gx = MatrixTuple::from_mats(g.iter().map(|p| p.evaluate_selfadjoint(&x, &e).unwrap()).collect()).unwrap();
            let lhs = logabs_functional(&jacobian(&fg, &x, &e).unwrap()).unwrap();
            let rhs = logabs_functional(&jacobian(&f, &gx, &e).unwrap()).unwrap()
                + logabs_functional(&jacobian(&g, &x, &e).unwrap()).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-8, "{} vs {}", lhs, rhs);
        }

        #[test]
        fn normal_form_equal_polys_evaluate_equal(seed in any::<u64>(), k in 1usize..=4) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let p = parse_poly::<f64>("(t1 + t2)(t1 - t2)").unwrap();
            let q = parse_poly_in("t1^2 - t1 t2 + t2 t1 - t2^2", 2, p.algebra().clone()).unwrap();
            prop_assert_eq!(&p, &q);
            let x = MatrixTuple::from_mats(vec![gue(k, 1.0, &mut rng), gue(k, 1.0, &mut rng)]).unwrap();
            let e = Embedding::scalars(k);
            prop_assert!(p.evaluate(&x, &e).unwrap().max_abs_diff(&q.evaluate(&x, &e).unwrap()) < 1e-12);
        }
    }
}
