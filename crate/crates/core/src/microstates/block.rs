//! Block maps between an `n`-tuple in `M_{Nk'}` and `n·N²` tuples in `M_{k'}`.
//!
//! Outputs of [`block_split`] are ordered by `(i, j, r)` lexicographically:
//! block row `i`, block column `j`, variable `r`. For `N = 2, k' = 1` and
//! `Z = [[a, b + ic], [b - ic, d]]` the outputs are `(a, c, b, d)`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::matcore::{Mat, MatrixTuple, SelfAdjointMatrix};

fn block(z: &Mat<f64>, i: usize, j: usize, kp: usize) -> Mat<f64> {
    Mat::from_fn(kp, |a, b| z.get(i * kp + a, j * kp + b))
}

fn check_order(dim: usize, order: usize) -> Result<usize> {
    if order == 0 || dim % order != 0 {
        return Err(Error::InvalidParameter(format!(
            "dimension {dim} is not divisible by block order {order}"
        )));
    }
    Ok(dim / order)
}

/// `Y_ij = ½(X_ij + X_ij*)` for `i ≥ j` and `(1/2i)(X_ij − X_ij*)` for
/// `i < j`, with `X_ij` the `(i, j)` block.
pub fn block_split(z: &MatrixTuple<f64>, order: usize) -> Result<MatrixTuple<f64>> {
    let kp = check_order(z.dim(), order)?;
    let half_i = Complex::new(0.0, -0.5);
    let mut out = Vec::with_capacity(z.arity() * order * order);
    for i in 0..order {
        for j in 0..order {
            for x in z.mats() {
                let b = block(x.as_mat(), i, j, kp);
                let y = if i >= j {
                    SelfAdjointMatrix::hermitian_part(&b)
                } else {
                    let diff = &b - &b.adjoint();
                    SelfAdjointMatrix::hermitian_part(&diff.scale(half_i))
                };
                out.push(y);
            }
        }
    }
    MatrixTuple::new(kp, out)
}

/// Inverse of [`block_split`]: `X_ij = Y_ij − i·Y_ji` for `i > j`,
/// `X_ii = Y_ii`, `X_ji = X_ij*`.
pub fn block_assemble(entries: &MatrixTuple<f64>, order: usize) -> Result<MatrixTuple<f64>> {
    let sq = order * order;
    if order == 0 || entries.arity() % sq != 0 {
        return Err(Error::InvalidParameter(format!(
            "{} entries do not split into {order}×{order} blocks",
            entries.arity()
        )));
    }
    let n = entries.arity() / sq;
    let kp = entries.dim();
    let at = |i: usize, j: usize, r: usize| entries.get((i * order + j) * n + r).as_mat();
    let mats = (0..n)
        .map(|r| {
            let mut z = Mat::zeros(kp * order);
            for i in 0..order {
                for j in 0..=i {
                    let x = if i == j {
                        at(i, i, r).clone()
                    } else {
                        let mut x = at(i, j, r).clone();
                        x.add_scaled(at(j, i, r), Complex::new(0.0, -1.0));
                        x
                    };
                    for a in 0..kp {
                        for b in 0..kp {
                            z.set(i * kp + a, j * kp + b, x.get(a, b));
                            z.set(j * kp + b, i * kp + a, x.get(a, b).conj());
                        }
                    }
                }
            }
            SelfAdjointMatrix::new(z)
        })
        .collect::<Result<Vec<_>>>()?;
    MatrixTuple::new(kp * order, mats)
}

/// Weight of output `(i, j)` in `‖Z‖²_HS = Σ w_ij ‖Y_ij‖²_HS`: 1 on the
/// diagonal, 2 off it.
pub fn block_weight(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        2.0
    }
}

/// [`block_split`] with the off-diagonal outputs scaled by `√2`, which makes
/// the map an isometry for the λ inner product.
pub fn block_split_orthonormal(z: &MatrixTuple<f64>, order: usize) -> Result<MatrixTuple<f64>> {
    let raw = block_split(z, order)?;
    let n = z.arity();
    let mats = raw
        .mats()
        .iter()
        .enumerate()
        .map(|(idx, y)| {
            let (i, j) = (idx / n / order, idx / n % order);
            y.scale(block_weight(i, j).sqrt())
        })
        .collect();
    MatrixTuple::new(raw.dim(), mats)
}

/// `(1/k'²)·log` of the Jacobian of [`block_split`] with respect to λ:
/// `−n·N(N−1)/2·log 2`.
pub fn block_log_jacobian(n: usize, order: usize) -> f64 {
    -(n as f64) * (order * (order - 1)) as f64 / 2.0 * std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::gue;
    use crate::rng::stream;
    use proptest::prelude::*;

    fn random(n: usize, dim: usize, seed: u64) -> MatrixTuple<f64> {
        let mut r = stream(seed, 0);
        MatrixTuple::new(dim, (0..n).map(|_| gue(dim, 1.0, &mut r)).collect()).unwrap()
    }

    #[test]
    fn two_by_two_by_hand() {
        let (a, b, c, d) = (0.7, -1.1, 0.4, 2.5);
        let z = Mat::from_fn(2, |i, j| match (i, j) {
            (0, 0) => Complex::new(a, 0.0),
            (0, 1) => Complex::new(b, c),
            (1, 0) => Complex::new(b, -c),
            _ => Complex::new(d, 0.0),
        });
        let t = MatrixTuple::from_mats(vec![SelfAdjointMatrix::new(z).unwrap()]).unwrap();
        let y = block_split(&t, 2).unwrap();
        let got: Vec<Complex<f64>> = y.mats().iter().map(|m| m.get(0, 0)).collect();
        for (g, w) in got.iter().zip([a, c, b, d]) {
            assert!((g - Complex::new(w, 0.0)).norm() < 1e-15, "{got:?}");
        }
    }

    #[test]
    fn order_one_is_identity() {
        let z = random(2, 3, 1);
        assert_eq!(block_split(&z, 1).unwrap(), z);
        assert_eq!(block_assemble(&z, 1).unwrap(), z);
    }

    #[test]
    fn indivisible_dimension() {
        assert!(block_split(&random(1, 5, 2), 2).is_err());
        assert!(block_assemble(&random(3, 2, 2), 2).is_err());
    }

    fn log_abs_det(mut a: Vec<Vec<f64>>) -> f64 {
        let n = a.len();
        let mut acc = 0.0;
        for c in 0..n {
            let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
            a.swap(c, piv);
            acc += a[c][c].abs().ln();
            for r in c + 1..n {
                let f = a[r][c] / a[c][c];
                for j in c..n {
                    a[r][j] -= f * a[c][j];
                }
            }
        }
        acc
    }

    #[test]
    fn jacobian_by_elimination() {
        for (n, order, kp) in [(1usize, 2usize, 1usize), (1, 2, 2), (2, 3, 1)] {
            let dim = order * kp;
            let coords = n * dim * dim;
            let columns: Vec<Vec<f64>> = (0..coords)
                .map(|c| {
                    let mats = (0..n)
                        .map(|r| {
                            let mut v = vec![0.0; dim * dim];
                            if c / (dim * dim) == r {
                                v[c % (dim * dim)] = 1.0;
                            }
                            SelfAdjointMatrix::from_coords(dim, &v).unwrap()
                        })
                        .collect();
                    let y = block_split(&MatrixTuple::new(dim, mats).unwrap(), order).unwrap();
                    y.mats().iter().flat_map(|m| m.to_coords()).collect()
                })
                .collect();
            let got = log_abs_det(columns) / (kp * kp) as f64;
            assert!((got - block_log_jacobian(n, order)).abs() < 1e-12, "{got}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn round_trip_and_norms(seed in any::<u64>(), n in 1usize..3, order in 2usize..4, kp in 1usize..4) {
            let z = random(n, order * kp, seed);
            let y = block_split(&z, order).unwrap();
            prop_assert_eq!(y.arity(), n * order * order);
            let back = block_assemble(&y, order).unwrap();
            for (a, b) in z.mats().iter().zip(back.mats()) {
                prop_assert!(a.as_mat().max_abs_diff(b.as_mat()) < 1e-14);
            }
            for r in 0..n {
                let weighted: f64 = (0..order * order)
                    .map(|b| block_weight(b / order, b % order) * y.get(b * n + r).hs_norm_sqr())
                    .sum();
                let direct = z.get(r).hs_norm_sqr();
                prop_assert!((weighted - direct).abs() < 1e-12 * (1.0 + direct));
            }
        }

        #[test]
        fn orthonormal_variant_is_an_isometry(seed in any::<u64>(), order in 2usize..4, kp in 1usize..3) {
            let a = random(1, order * kp, seed);
            let b = random(1, order * kp, seed ^ 1);
            let ip = |s: &MatrixTuple<f64>, t: &MatrixTuple<f64>| -> f64 {
                s.mats().iter().zip(t.mats()).map(|(x, y)| x.as_mat().trace_of_product(y.as_mat()).re).sum()
            };
            let (ya, yb) = (block_split_orthonormal(&a, order).unwrap(), block_split_orthonormal(&b, order).unwrap());
            prop_assert!((ip(&a, &b) - ip(&ya, &yb)).abs() < 1e-12 * (1.0 + ip(&a, &a)));
        }
    }
}
