use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use proptest::prelude::*;
use wielandt_core::random::{random_hermitian, random_unitary};
use wielandt_core::{
    eigh, frame_compression, invariant_residual, ky_fan_sum, HermitianMatrix, OrthonormalFrame,
};

fn oracle_spectrum(a: &HermitianMatrix) -> Vec<f64> {
    let n = a.dim();
    let m = DMatrix::<Complex64>::from_fn(n, n, |i, j| a.entry(i, j));
    let mut vals: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    vals.sort_by(|x, y| y.total_cmp(x));
    vals
}

fn random_frame(n: usize, k: usize, seed: u64) -> OrthonormalFrame {
    let q = random_unitary(n, seed);
    let cols: Vec<Vec<Complex64>> = (0..k).map(|j| q.column(j)).collect();
    OrthonormalFrame::from_columns(n, &cols, 1e-10).unwrap()
}

#[test]
fn spectrum_matches_nalgebra() {
    for seed in 0..40u64 {
        let n = 2 + (seed as usize % 9);
        let a = random_hermitian(n, seed, None).unwrap();
        let ours = eigh(&a).unwrap();
        let theirs = oracle_spectrum(&a);
        for (x, y) in ours.spectrum.values().iter().zip(&theirs) {
            assert!((x - y).abs() < 1e-12 * (1.0 + a.frobenius_norm()), "seed {seed}: {x} vs {y}");
        }
        assert!(ours.max_residual(&a) < 1e-12 * (1.0 + a.frobenius_norm()));
        let (_, _, defect) = ours.frame.matrix().orthonormality_defect();
        assert!(defect < 1e-13);
    }
}

#[test]
fn planted_degenerate_spectrum_recovered() {
    let spec = [4.0, 4.0, 4.0, -1.0, -1.0, 2.5];
    let a = random_hermitian(6, 77, Some(&spec)).unwrap();
    let e = eigh(&a).unwrap();
    let want = [4.0, 4.0, 4.0, 2.5, -1.0, -1.0];
    for (x, y) in e.spectrum.values().iter().zip(want) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn decomposition_is_deterministic() {
    let a = random_hermitian(7, 5, Some(&[3.0, 3.0, 1.0, 0.0, 0.0, 0.0, -2.0])).unwrap();
    let x = eigh(&a).unwrap();
    let y = eigh(&a.clone()).unwrap();
    assert_eq!(x, y);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ky_fan_bounds_every_frame(n in 2usize..8, seed in any::<u64>(), fseed in any::<u64>()) {
        let a = random_hermitian(n, seed, None).unwrap();
        for k in 1..=n {
            let f = random_frame(n, k, fseed.wrapping_add(k as u64));
            let tr = frame_compression(&a, &f).unwrap().trace();
            prop_assert!(tr <= ky_fan_sum(&a, k).unwrap() + 1e-10);
        }
        prop_assert!((ky_fan_sum(&a, n).unwrap() - a.trace()).abs() < 1e-10);
    }

    #[test]
    fn ky_fan_attained_by_top_eigenvectors(n in 2usize..8, seed in any::<u64>()) {
        let a = random_hermitian(n, seed, None).unwrap();
        let e = eigh(&a).unwrap();
        for k in 1..n {
            let top = e.frame.range(0..k);
            let tr = frame_compression(&a, &top).unwrap().trace();
            prop_assert!((tr - ky_fan_sum(&a, k).unwrap()).abs() < 1e-10);
            prop_assert!(invariant_residual(&a, &top).unwrap() < 1e-10);
        }
    }

    #[test]
    fn unitary_conjugation_preserves_spectrum(n in 2usize..7, seed in any::<u64>(), qseed in any::<u64>()) {
        let a = random_hermitian(n, seed, None).unwrap();
        let b = a.conjugate_by(&random_unitary(n, qseed));
        let x = eigh(&a).unwrap();
        let y = eigh(&b).unwrap();
        for (p, q) in x.spectrum.values().iter().zip(y.spectrum.values()) {
            prop_assert!((p - q).abs() < 1e-11);
        }
    }
}
