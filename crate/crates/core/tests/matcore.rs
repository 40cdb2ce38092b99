use microchi::matcore::{
    eigenvalues, eval_word_trace, gue, normalized_trace, sample_gue, MatrixTuple, SelfAdjointMatrix,
};
use microchi::rng::stream;
use proptest::prelude::*;

fn pauli_x() -> SelfAdjointMatrix<f64> {
    SelfAdjointMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
}

#[test]
fn trace_and_word_examples() {
    assert_eq!(normalized_trace(&SelfAdjointMatrix::<f64>::identity(5)), 1.0);
    assert_eq!(normalized_trace(&SelfAdjointMatrix::diag(&[1.0, -1.0])), 0.0);
    assert_eq!(normalized_trace(&SelfAdjointMatrix::diag(&[1.0, 0.0])), 0.5);

    let z = MatrixTuple::from_mats(vec![SelfAdjointMatrix::diag(&[1.0, -1.0])]).unwrap();
    assert_eq!(eval_word_trace(&z, &[]).unwrap(), 1.0);
    assert_eq!(eval_word_trace(&z, &[0, 0]).unwrap(), 1.0);
    let t = MatrixTuple::from_mats(vec![pauli_x(), SelfAdjointMatrix::diag(&[1.0, -1.0])]).unwrap();
    assert!((eval_word_trace(&t, &[0, 1, 0, 1]).unwrap() + 1.0).abs() < 1e-15);
}

#[test]
fn spectra_and_determinism() {
    assert_eq!(
        eigenvalues(&SelfAdjointMatrix::diag(&[3.0, 1.0, 2.0])).unwrap(),
        vec![1.0, 2.0, 3.0]
    );
    let e = eigenvalues(&pauli_x()).unwrap();
    assert!((e[0] + 1.0).abs() < 1e-14 && (e[1] - 1.0).abs() < 1e-14);
    assert_eq!(sample_gue::<f64>(6, 1.0, 42), sample_gue::<f64>(6, 1.0, 42));
    assert_ne!(sample_gue::<f64>(6, 1.0, 42), sample_gue::<f64>(6, 1.0, 43));
}

#[test]
fn single_precision_path() {
    let x = sample_gue::<f32>(8, 1.0, 3);
    let e = eigenvalues(&x).unwrap();
    let tr: f32 = e.iter().sum::<f32>() / 8.0;
    assert!((tr - normalized_trace(&x)).abs() < 1e-4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn word_trace_is_cyclic(seed in any::<u64>(), k in 1usize..=8, word in prop::collection::vec(0usize..3, 1..=6), r in 0usize..6) {
        let mut rng = stream(seed, 0);
        let t = MatrixTuple::from_mats((0..3).map(|_| gue(k, 1.0, &mut rng)).collect()).unwrap();
        let mut rot = word.clone();
        rot.rotate_left(r % word.len());
        let a: f64 = eval_word_trace(&t, &word).unwrap();
        let b: f64 = eval_word_trace(&t, &rot).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn shift_moves_spectrum(seed in any::<u64>(), k in 1usize..=6, c in -5.0f64..5.0) {
        let a = sample_gue::<f64>(k, 1.0, seed);
        let e = eigenvalues(&a).unwrap();
        let f = eigenvalues(&a.shift(c)).unwrap();
        for (x, y) in e.iter().zip(&f) {
            prop_assert!((x + c - y).abs() < 1e-10);
        }
    }

    #[test]
    fn gue_is_hermitian(seed in any::<u64>(), k in 1usize..=10) {
        let a = sample_gue::<f64>(k, 2.0, seed);
        prop_assert_eq!(a.as_mat().hermitian_defect(), 0.0);
    }
}
