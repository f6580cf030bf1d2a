use proptest::prelude::*;
use wielandt_core::eigh;
use wielandt_core::inequalities::{lidskii_check, majorizes, wielandt_scan, DEFAULT_SCAN_CAP};
use wielandt_core::pencil::{derivative_at, integrate_phi_prime, phi_curve, trace_pencil, Side, TraceOptions};
use wielandt_core::perturbation::{first_order_rates, rate_consistency_check};
use wielandt_core::random::random_pair;
use wielandt_core::HermitianMatrix;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn wielandt_and_lidskii_hold(n in 2usize..8, seed in any::<u64>()) {
        let (a, b) = random_pair(n, seed).unwrap();
        let reports = wielandt_scan(&a, &b, None, 1e-8, DEFAULT_SCAN_CAP).unwrap();
        prop_assert_eq!(reports.len(), (1usize << n) - 2);
        prop_assert!(reports[0].slack >= -1e-8);
        let l = lidskii_check(&a, &b, 1e-8).unwrap();
        prop_assert!(l.majorization.holds);
    }

    #[test]
    fn rates_are_majorized_by_spectrum_of_b(n in 2usize..7, seed in any::<u64>()) {
        let (a, b) = random_pair(n, seed).unwrap();
        let r = first_order_rates(&a, &b, 1e-8).unwrap();
        let eb = eigh(&b).unwrap();
        let m = majorizes(&r.sorted_nu(), eb.spectrum.values(), 1e-8).unwrap();
        prop_assert!(m.holds);
        prop_assert!(m.total_difference.abs() < 1e-10);
        prop_assert!(rate_consistency_check(&a, &b, 1e-5, 1e-8).unwrap() < 1e-3);
    }

    #[test]
    fn traced_curves_are_lipschitz_and_sorted(n in 2usize..6, seed in any::<u64>()) {
        let (a, b) = random_pair(n, seed).unwrap();
        let norm_b = eigh(&b).unwrap().spectrum.max_abs();
        let tr = trace_pencil(&a, &b, 0.0, 1.0, &TraceOptions { grid_size: 17, ..Default::default() }).unwrap();
        prop_assert!(tr.crossings.len() <= n * (n - 1));
        for w in tr.grid.windows(2) {
            prop_assert!(w[0] < w[1]);
        }
        for g in 1..tr.grid.len() {
            let h = tr.grid[g] - tr.grid[g - 1];
            for i in 0..n {
                prop_assert!((tr.curves[g][i] - tr.curves[g - 1][i]).abs() <= norm_b * h + 1e-12);
            }
            for i in 1..n {
                prop_assert!(tr.curves[g][i - 1] >= tr.curves[g][i]);
            }
        }
        let phi = phi_curve(&tr, &(1..=n).collect::<Vec<_>>()).unwrap();
        for (t, v) in tr.grid.iter().zip(&phi) {
            prop_assert!((v - (a.trace() + t * b.trace())).abs() < 1e-10);
        }
    }
}

#[test]
fn phi_prime_integral_matches_difference() {
    for seed in 0..6u64 {
        let (a, b) = random_pair(4, 300 + seed).unwrap();
        let opts = TraceOptions::default();
        let tr = trace_pencil(&a, &b, 0.0, 1.0, &opts).unwrap();
        for s in [vec![1], vec![2, 3], vec![1, 4]] {
            let phi = phi_curve(&tr, &s).unwrap();
            let lhs = integrate_phi_prime(&a, &b, &s, 0.0, 1.0, &opts).unwrap();
            let rhs = phi.last().unwrap() - phi[0];
            assert!((lhs - rhs).abs() < 1e-6, "seed {seed} {s:?}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn phi_prime_respects_ky_fan_ceiling() {
    let (a, b) = random_pair(5, 41).unwrap();
    let eb = eigh(&b).unwrap();
    let tr = trace_pencil(&a, &b, 0.0, 1.0, &TraceOptions::default()).unwrap();
    for &t in &tr.grid {
        let d = derivative_at(&a, &b, t, Side::Right, 1e-8).unwrap();
        let mut sorted = d.clone();
        sorted.sort_by(|x, y| y.total_cmp(x));
        for k in 1..=5 {
            let best: f64 = sorted[..k].iter().sum();
            assert!(best <= eb.spectrum.top_k_sum(k) + 1e-9);
        }
    }
}

#[test]
fn one_sided_derivatives_match_difference_quotients() {
    // Curves 2 − t, 1 + t and 1 meet at t = 0, 0.5 and 1.
    let a = HermitianMatrix::from_real_diagonal(&[2.0, 1.0, 1.0]);
    let b = HermitianMatrix::from_real_diagonal(&[-1.0, 1.0, 0.0]);
    let h = 1e-6;
    for t in [0.0, 0.5, 1.0, 0.25] {
        let right = derivative_at(&a, &b, t, Side::Right, 1e-8).unwrap();
        let left = derivative_at(&a, &b, t, Side::Left, 1e-8).unwrap();
        let at = |s: f64| eigh(&a.pencil_at(&b, s)).unwrap().spectrum.values().to_vec();
        let (l0, lp, lm) = (at(t), at(t + h), at(t - h));
        for i in 0..3 {
            assert!(((lp[i] - l0[i]) / h - right[i]).abs() < 1e-6, "t={t} i={i}");
            assert!(((l0[i] - lm[i]) / h - left[i]).abs() < 1e-6, "t={t} i={i}");
        }
    }
}

#[test]
fn crossings_of_diagonal_pencil_are_exact() {
    // λ-curves α_i + tβ_i meet at (α_i − α_j)/(β_j − β_i).
    let alpha = [4.0, 2.0, 0.0, -1.0];
    let beta = [-3.0, 1.0, 2.0, -0.5];
    let a = HermitianMatrix::from_real_diagonal(&alpha);
    let b = HermitianMatrix::from_real_diagonal(&beta);
    let mut expected: Vec<f64> = Vec::new();
    for i in 0..4 {
        for j in i + 1..4 {
            if beta[i] != beta[j] {
                let t = (alpha[i] - alpha[j]) / (beta[j] - beta[i]);
                if (0.0..=2.0).contains(&t) {
                    expected.push(t);
                }
            }
        }
    }
    expected.sort_by(|x, y| x.total_cmp(y));
    expected.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    let tr = trace_pencil(&a, &b, 0.0, 2.0, &TraceOptions::default()).unwrap();
    let found: Vec<f64> = tr.crossings.iter().map(|c| c.t).collect();
    assert_eq!(found.len(), expected.len(), "{found:?} vs {expected:?}");
    for (x, y) in found.iter().zip(&expected) {
        assert!((x - y).abs() < 1e-7, "{x} vs {y}");
    }
}
