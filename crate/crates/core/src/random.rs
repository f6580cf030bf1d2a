//! Reproducible test-instance generation.
//!
//! All generators are pure functions of their arguments: the seed fully
//! determines the output.

use crate::dense::{gram_schmidt, CMatrix};
use crate::error::{Error, Result};
use crate::hermitian::{HermitianMatrix, OrthonormalFrame};
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn complex_gaussian(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-like random unitary: Gram–Schmidt applied to a complex Gaussian
/// matrix.
pub(crate) fn random_unitary_with(n: usize, rng: &mut impl Rng) -> CMatrix {
    loop {
        let cols: Vec<Vec<Complex64>> = (0..n)
            .map(|_| (0..n).map(|_| complex_gaussian(rng)).collect())
            .collect();
        let q = gram_schmidt(&cols, 1e-6);
        if q.len() == n {
            return CMatrix::from_columns(n, &q);
        }
    }
}

pub fn random_unitary(n: usize, seed: u64) -> CMatrix {
    random_unitary_with(n, &mut rng(seed))
}

fn hermitian_with(n: usize, spec: Option<&[f64]>, rng: &mut impl Rng) -> HermitianMatrix {
    match spec {
        Some(values) => {
            let q = random_unitary_with(n, rng);
            HermitianMatrix::from_real_diagonal(values).conjugate_by(&q)
        }
        None => {
            let g = CMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
            HermitianMatrix::symmetrized(g.add(&g.adjoint()).scale(Complex64::new(0.5, 0.0)))
        }
    }
}

/// Random Hermitian matrix. With `spec`, returns `Q diag(spec) Q^*` for a
/// random unitary `Q`; otherwise `(G + G^*) / 2` for complex Gaussian `G`.
pub fn random_hermitian(n: usize, seed: u64, spec: Option<&[f64]>) -> Result<HermitianMatrix> {
    if n == 0 {
        return Err(Error::Empty);
    }
    if let Some(s) = spec {
        if s.len() != n {
            return Err(Error::BadSpec {
                expected: n,
                found: s.len(),
            });
        }
    }
    Ok(hermitian_with(n, spec, &mut rng(seed)))
}

/// An independent pair `(A, B)` of random Hermitian matrices.
pub fn random_pair(n: usize, seed: u64) -> Result<(HermitianMatrix, HermitianMatrix)> {
    if n == 0 {
        return Err(Error::Empty);
    }
    let mut r = rng(seed);
    let a = hermitian_with(n, None, &mut r);
    let b = hermitian_with(n, None, &mut r);
    Ok((a, b))
}

/// Features of a planted instance, recorded for manifests and tests.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PlantedFeatures {
    /// 1-based position `i ∈ S` with `λ_i(A) = λ_{i+1}(A)`, `i+1 ∉ S`.
    pub tie_at_zero: Option<usize>,
    /// Adjacent positions outside S whose curves cross inside (0, 1).
    pub crossing_outside: Option<(usize, usize, f64)>,
    /// Adjacent positions inside S whose curves cross inside (0, 1).
    pub crossing_inside: Option<(usize, usize, f64)>,
}

/// A pair for which Wielandt's inequality is an equality at `indices`,
/// built as `Q blockdiag(A1, A2) Q^*`, `Q blockdiag(B1, B2) Q^*` with
/// `λ(B1)` the top-k eigenvalues of B and the A1-branches occupying the
/// sorted positions `indices` throughout `[0, 1]`.
#[derive(Debug, Clone)]
pub struct PlantedEquality {
    pub a: HermitianMatrix,
    pub b: HermitianMatrix,
    /// 1-based, strictly increasing.
    pub indices: Vec<usize>,
    /// The planted common invariant subspace (first k columns of `Q`).
    pub subspace: OrthonormalFrame,
    pub features: PlantedFeatures,
}

const POSITION_SPACING: f64 = 3.0;
const CLOSE_SPACING: f64 = 0.3;

/// Planted equality instance of size `n` with `k` indices.
///
/// Eigenvalues of A are spaced about 3 apart while `‖B‖₂ ≤ 1`, so sorted
/// positions can only change at deliberately planted features: a tie at
/// t = 0 between a block-1 and a block-2 eigenvalue, and crossings inside
/// (0, 1) between two decoupled eigenvalues of the same block.
pub fn planted_equality(n: usize, k: usize, seed: u64) -> Result<PlantedEquality> {
    if n < 2 || k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "planted equality needs n ≥ 2 and 1 ≤ k ≤ n−1 (got n = {n}, k = {k})"
        )));
    }
    let mut r = rng(seed);
    let mut in_s = vec![false; n];
    for i in sample(&mut r, n, k).into_iter() {
        in_s[i] = true;
    }

    // Pick non-overlapping features (0-based positions).
    let mut used = vec![false; n];
    let mut features = PlantedFeatures::default();
    let pick_pair = |pred: &dyn Fn(usize) -> bool, r: &mut ChaCha8Rng, used: &mut Vec<bool>| {
        let candidates: Vec<usize> = (0..n - 1)
            .filter(|&i| pred(i) && !used[i] && !used[i + 1])
            .collect();
        if candidates.is_empty() || !r.random_bool(0.5) {
            return None;
        }
        let i = candidates[r.random_range(0..candidates.len())];
        used[i] = true;
        used[i + 1] = true;
        Some(i)
    };
    let tie = pick_pair(&|i| in_s[i] && !in_s[i + 1], &mut r, &mut used);
    let cross_out = pick_pair(&|i| !in_s[i] && !in_s[i + 1], &mut r, &mut used);
    let cross_in = pick_pair(&|i| in_s[i] && in_s[i + 1], &mut r, &mut used);

    // Eigenvalues of A by sorted position.
    let mut alpha = vec![0.0; n];
    alpha[0] = POSITION_SPACING * n as f64;
    for i in 1..n {
        let step = if Some(i - 1) == tie {
            0.0
        } else if Some(i - 1) == cross_out || Some(i - 1) == cross_in {
            CLOSE_SPACING
        } else {
            POSITION_SPACING + r.random_range(-0.3..0.3)
        };
        alpha[i] = alpha[i - 1] - step;
    }

    // Decoupled positions carry a fixed B value; the rest share a random
    // block per side.
    let mut fixed_beta: Vec<Option<f64>> = vec![None; n];
    if let Some(i) = cross_out {
        fixed_beta[i] = Some(-0.8);
        fixed_beta[i + 1] = Some(0.2);
        features.crossing_outside = Some((i + 1, i + 2, CLOSE_SPACING / 1.0));
    }
    if let Some(i) = cross_in {
        fixed_beta[i] = Some(0.55);
        fixed_beta[i + 1] = Some(0.95);
        features.crossing_inside = Some((i + 1, i + 2, CLOSE_SPACING / 0.4));
    }
    features.tie_at_zero = tie.map(|i| i + 1);

    let block = |inside: bool, r: &mut ChaCha8Rng| -> (CMatrix, CMatrix) {
        let (lo, hi) = if inside { (0.5, 1.0) } else { (-1.0, 0.4) };
        let members: Vec<usize> = (0..n).filter(|&i| in_s[i] == inside).collect();
        let general: Vec<usize> = members.iter().copied().filter(|&i| fixed_beta[i].is_none()).collect();
        let m = members.len();
        let mut a_blk = CMatrix::zeros(m, m);
        let mut b_blk = CMatrix::zeros(m, m);
        let g = general.len();
        if g > 0 {
            let a_vals: Vec<f64> = general.iter().map(|&i| alpha[i]).collect();
            let b_vals: Vec<f64> = (0..g).map(|_| r.random_range(lo..hi)).collect();
            let qa = random_unitary_with(g, r);
            let qb = random_unitary_with(g, r);
            let ag = HermitianMatrix::from_real_diagonal(&a_vals).conjugate_by(&qa);
            let bg = HermitianMatrix::from_real_diagonal(&b_vals).conjugate_by(&qb);
            for x in 0..g {
                for y in 0..g {
                    a_blk[(x, y)] = ag.entry(x, y);
                    b_blk[(x, y)] = bg.entry(x, y);
                }
            }
        }
        let mut slot = g;
        for &i in &members {
            if let Some(beta) = fixed_beta[i] {
                a_blk[(slot, slot)] = Complex64::new(alpha[i], 0.0);
                b_blk[(slot, slot)] = Complex64::new(beta, 0.0);
                slot += 1;
            }
        }
        (a_blk, b_blk)
    };
    let (a1, b1) = block(true, &mut r);
    let (a2, b2) = block(false, &mut r);

    let embed = |x1: &CMatrix, x2: &CMatrix| {
        CMatrix::from_fn(n, n, |i, j| {
            if i < k && j < k {
                x1[(i, j)]
            } else if i >= k && j >= k {
                x2[(i - k, j - k)]
            } else {
                crate::dense::ZERO
            }
        })
    };
    let q = random_unitary_with(n, &mut r);
    let a = HermitianMatrix::symmetrized(embed(&a1, &a2)).conjugate_by(&q);
    let b = HermitianMatrix::symmetrized(embed(&b1, &b2)).conjugate_by(&q);
    let subspace = OrthonormalFrame::from_matrix_unchecked(q.column_range(0, k));
    let indices = (0..n).filter(|&i| in_s[i]).map(|i| i + 1).collect();
    Ok(PlantedEquality {
        a,
        b,
        indices,
        subspace,
        features,
    })
}
