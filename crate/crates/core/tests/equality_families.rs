use itertools::Itertools;
use wielandt_core::equality::{
    best_rate_selection, certify, check_equality, condition1_search, condition2_check, condition3_check,
    equivalence_report, maximal_t1, CertifyOptions, MaximalT1,
};
use wielandt_core::random::{planted_equality, random_hermitian, random_pair};
use wielandt_core::{eigh, HermitianMatrix, IndexSet, Tolerances, Verdict};

fn tol() -> Tolerances {
    Tolerances::default()
}

/// Max of `Σ ν_{p_j}` over all k-subsets `p` of positions whose A-eigenvalue
/// equals that of `i_j`, by exhaustive enumeration.
fn brute_force_rate_max(a: &HermitianMatrix, b: &HermitianMatrix, s: &IndexSet) -> f64 {
    let r = wielandt_core::perturbation::first_order_rates(a, b, 1e-8).unwrap();
    let lam = r.spectrum.values();
    let scale = 1.0 + lam.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    (0..a.dim())
        .combinations(s.k())
        .filter(|p| {
            p.iter()
                .zip(s.indices())
                .all(|(&pj, &ij)| (lam[pj] - lam[ij - 1]).abs() <= 1e-8 * scale)
        })
        .map(|p| p.iter().map(|&j| r.nu[j]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn greedy_rate_selection_is_optimal() {
    for seed in 0..60u64 {
        let n = 2 + (seed as usize % 4);
        let spec: Vec<f64> = (0..n).map(|i| ((i + seed as usize) % 3) as f64).collect();
        let a = random_hermitian(n, seed, Some(&spec)).unwrap();
        let b = random_hermitian(n, seed + 1000, None).unwrap();
        for k in 1..n {
            for s in (1..=n).combinations(k) {
                let s = IndexSet::new(n, s).unwrap();
                let greedy = best_rate_selection(&a, &b, &s, 1e-8).unwrap();
                let brute = brute_force_rate_max(&a, &b, &s);
                assert!((greedy.achieved - brute).abs() <= 1e-10, "seed {seed} {s}");
                assert!(greedy.achieved <= greedy.target + 1e-8);
            }
        }
    }
}

#[test]
fn planted_instances_certify_soundly() {
    for seed in 0..30u64 {
        let n = 3 + (seed as usize % 6);
        let k = 1 + (seed as usize % 3).min(n - 2);
        let inst = planted_equality(n, k, seed).unwrap();
        let s = IndexSet::new(n, inst.indices.clone()).unwrap();
        let report = check_equality(&inst.a, &inst.b, &s, &tol()).unwrap();
        assert_eq!(report.verdict, Verdict::Equality, "seed {seed}");
        let cert = certify(&inst.a, &inst.b, &s, &tol(), &CertifyOptions::default()).unwrap();
        assert!(cert.max_residual() <= 10.0 * tol().certification, "seed {seed}");
        for u in &cert.subspaces {
            assert!(u.subspace_distance(&inst.subspace) < 1e-8);
        }
        let cond = equivalence_report(&inst.a, &inst.b, &s, &tol()).unwrap();
        assert!(cond.holds() && cond.consistent, "seed {seed}: {cond:?}");
    }
}

#[test]
fn generic_pairs_are_refused_and_conditions_absent() {
    let mut refused = 0;
    for seed in 0..30u64 {
        let n = 3 + (seed as usize % 4);
        let (a, b) = random_pair(n, 500 + seed).unwrap();
        let s = IndexSet::new(n, vec![1 + (seed as usize % (n - 1))]).unwrap();
        let report = check_equality(&a, &b, &s, &tol()).unwrap();
        if report.slack <= 1e-4 {
            continue;
        }
        assert!(certify(&a, &b, &s, &tol(), &CertifyOptions::default()).is_err());
        let cond = equivalence_report(&a, &b, &s, &tol()).unwrap();
        assert!(cond.consistent && cond.condition3.is_none());
        refused += 1;
    }
    assert!(refused >= 25);
}

#[test]
fn maximal_t1_is_a_threshold() {
    for (alpha, beta) in [([3.0, 1.0, 1.0], [2.0, 1.0, 0.0]), ([5.0, 2.0, 2.0], [1.5, -0.5, -1.0])] {
        let a = HermitianMatrix::from_real_diagonal(&alpha);
        let b = HermitianMatrix::from_real_diagonal(&[beta[2], beta[0], beta[1]]);
        let s = IndexSet::new(3, vec![3]).unwrap();
        let expected = (alpha[0] - alpha[1]) / (beta[0] - beta[2]);
        let MaximalT1::Finite(t1) = maximal_t1(&a, &b, &s, &tol(), 20.0).unwrap() else {
            panic!("expected a finite threshold");
        };
        assert!((t1 - expected).abs() <= 1e-6 * expected, "{t1} vs {expected}");
        for f in [0.25, 0.5, 0.99] {
            assert!(condition2_check(&a, &b, &s, f * t1, &tol()).unwrap().is_some());
        }
        assert!(condition2_check(&a, &b, &s, t1 * (1.0 + 1e-6), &tol()).unwrap().is_none());
    }
}

#[test]
fn scalar_b_satisfies_every_condition() {
    let a = random_hermitian(5, 8, None).unwrap();
    let b = HermitianMatrix::identity(5).scale(-1.5);
    for s in [vec![1], vec![2, 5], vec![1, 3, 4]] {
        let s = IndexSet::new(5, s).unwrap();
        assert!(condition3_check(&a, &b, &s, &tol()).unwrap().is_some());
        assert!(condition1_search(&a, &b, &s, &tol()).unwrap().is_some());
        let r = equivalence_report(&a, &b, &s, &tol()).unwrap();
        assert!(r.holds() && r.consistent);
    }
}

#[test]
fn condition1_frame_satisfies_its_contract() {
    let a = HermitianMatrix::from_real_diagonal(&[3.0, 1.0, 1.0]);
    let b = HermitianMatrix::from_real_diagonal(&[0.0, 2.0, 1.0]);
    let s = IndexSet::new(3, vec![3]).unwrap();
    let u = condition1_search(&a, &b, &s, &tol()).unwrap().unwrap();
    let eb = eigh(&b).unwrap();
    let comp = wielandt_core::frame_compression(&b, &u).unwrap();
    assert!((comp.trace() - eb.spectrum.lambda(1)).abs() < 1e-14);
    assert!(wielandt_core::invariant_residual(&a, &u).unwrap() < 1e-14);
}
