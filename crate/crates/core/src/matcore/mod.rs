//! Hermitian matrix arithmetic, traces, eigenvalues and random samplers.

mod eigen;
mod matrix;
mod sample;

pub use eigen::{eigenvalues, MAX_SWEEPS};
pub use matrix::{eval_word_trace, eval_word_trace_complex, normalized_trace, Mat, MatrixTuple, SelfAdjointMatrix};
pub use sample::{
    conjugated_diag, gue, haar_unitary, hs_ball_point, op_ball_point, sample_ball, sample_gue, STALL_RATE, STALL_WINDOW,
};

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn word_trace_is_cyclic(
            k in 1usize..=8,
            n in 1usize..=3,
            seed in any::<u64>(),
            word in proptest::collection::vec(0usize..3, 1..=6),
            shift in 0usize..6,
        ) {
            let mats = (0..n).map(|i| sample_gue::<f64>(k, 1.0, seed.wrapping_add(i as u64))).collect();
            let t = MatrixTuple::from_mats(mats).unwrap();
            let word: Vec<usize> = word.into_iter().map(|i| i % n).collect();
            let mut rot = word.clone();
            rot.rotate_left(shift % word.len());
            let a = eval_word_trace(&t, &word).unwrap();
            let b = eval_word_trace(&t, &rot).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
