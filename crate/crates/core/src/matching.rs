//! Aligning eigenvector frames between neighbouring pencil samples.
//!
//! Within a degenerate cluster individual eigenvectors are meaningless, so
//! the next frame's cluster basis is first rotated (orthogonal Procrustes)
//! onto the previous vectors it overlaps most. A maximum-weight assignment
//! on `|⟨prev_i, next_j⟩|²` then pairs vectors, and each matched next vector
//! gets the phase that makes its overlap real and non-negative.

use crate::dense::{complete_basis, dot, CMatrix};
use crate::hermitian::{ClusterStructure, OrthonormalFrame};
use crate::jacobi::jacobi_eigen;
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct FrameAlignment {
    /// `permutation[i]` is the index in `next` matched to `prev` index `i`.
    pub permutation: Vec<usize>,
    /// `Σ_i |⟨prev_i, next_{π(i)}⟩|²`; equals `n` for identical spans.
    pub score: f64,
    /// `next`, in its own order, with degenerate clusters re-based and
    /// phases aligned to the matched `prev` vectors.
    pub aligned_next: OrthonormalFrame,
}

/// Matches `next` against `prev`. When `max_shift` is given, `i ↦ j` is
/// allowed only if the cluster values differ by at most `max_shift`
/// (unless no such assignment exists).
pub fn match_frames(
    prev: &OrthonormalFrame,
    next: &OrthonormalFrame,
    prev_clusters: &ClusterStructure,
    next_clusters: &ClusterStructure,
    max_shift: Option<f64>,
) -> FrameAlignment {
    let n = prev.len();
    debug_assert_eq!(n, next.len());
    let pm = prev.matrix();
    let mut aligned = next.matrix().clone();

    for c in 0..next_clusters.len() {
        let r = next_clusters.range(c);
        if r.len() < 2 {
            continue;
        }
        let w = next.matrix().column_range(r.start, r.end);
        let overlap = w.adjoint_mul(pm); // m × n
        let mut weights: Vec<(usize, f64)> = (0..n)
            .map(|i| (i, (0..r.len()).map(|a| overlap[(a, i)].norm_sqr()).sum()))
            .collect();
        weights.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
        let mut sel: Vec<usize> = weights[..r.len()].iter().map(|x| x.0).collect();
        sel.sort_unstable();
        let target = overlap.select_columns(&sel); // W^* V_sel
        let q = polar_unitary(&target);
        let rotated = w.matmul(&q);
        for (offset, slot) in r.enumerate() {
            aligned.set_column(slot, &rotated.column(offset));
        }
    }

    let gram = pm.adjoint_mul(&aligned);
    let mut weight = vec![vec![0.0; n]; n];
    for (i, row) in weight.iter_mut().enumerate() {
        for (j, w) in row.iter_mut().enumerate() {
            *w = gram[(i, j)].norm_sqr();
        }
    }
    let allowed = |i: usize, j: usize| match max_shift {
        Some(s) => {
            let vi = prev_clusters.values()[prev_clusters.cluster_of(i)];
            let vj = next_clusters.values()[next_clusters.cluster_of(j)];
            (vi - vj).abs() <= s
        }
        None => true,
    };
    let constrained: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if allowed(i, j) { weight[i][j] } else { -1e6 }).collect())
        .collect();
    let mut permutation = max_weight_assignment(&constrained);
    if permutation.iter().enumerate().any(|(i, &j)| !allowed(i, j)) {
        permutation = max_weight_assignment(&weight);
    }

    for (i, &j) in permutation.iter().enumerate() {
        let z = gram[(i, j)];
        if z.norm() > 1e-12 {
            let phase = z.conj() / z.norm();
            let col: Vec<Complex64> = aligned.column(j).into_iter().map(|x| x * phase).collect();
            aligned.set_column(j, &col);
        }
    }
    let score = permutation.iter().enumerate().map(|(i, &j)| weight[i][j]).sum();
    FrameAlignment {
        permutation,
        score,
        aligned_next: OrthonormalFrame::from_matrix_unchecked(aligned),
    }
}

/// Unitary factor of the polar decomposition `M = Q H`, i.e. the unitary
/// closest to `M`. Rank deficiency is resolved by completing the basis.
pub(crate) fn polar_unitary(m: &CMatrix) -> CMatrix {
    let k = m.cols();
    let (vals, v) = jacobi_eigen(&m.adjoint_mul(m)).expect("small gram matrix");
    let scale = vals.iter().cloned().fold(0.0, f64::max).max(1e-300);
    let mut left: Vec<Vec<Complex64>> = Vec::new();
    let mut right: Vec<Vec<Complex64>> = Vec::new();
    let mut rest: Vec<Vec<Complex64>> = Vec::new();
    for (j, &s2) in vals.iter().enumerate() {
        let vj = v.column(j);
        if s2 > 1e-20 * scale {
            let s = s2.sqrt();
            let mv = CMatrix::from_columns(k, std::slice::from_ref(&vj));
            let u: Vec<Complex64> = m.matmul(&mv).column(0).into_iter().map(|x| x / s).collect();
            left.push(u);
            right.push(vj);
        } else {
            rest.push(vj);
        }
    }
    let mut left = crate::dense::gram_schmidt(&left, 1e-8);
    if left.len() < right.len() {
        right.truncate(left.len());
    }
    let missing = k - left.len();
    if missing > 0 {
        left = complete_basis(left, k, k);
        let mut r = right.clone();
        r.extend(rest);
        right = complete_basis(crate::dense::gram_schmidt(&r, 1e-8), k, k);
    }
    let u = CMatrix::from_columns(k, &left);
    let vmat = CMatrix::from_columns(k, &right);
    u.matmul(&vmat.adjoint())
}

/// Hungarian algorithm on `-weight` (square matrix); returns
/// `assignment[row] = col`.
pub(crate) fn max_weight_assignment(weight: &[Vec<f64>]) -> Vec<usize> {
    let n = weight.len();
    if n == 0 {
        return Vec::new();
    }
    let cost = |i: usize, j: usize| -weight[i][j];
    // 1-based potentials as in the classical formulation.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// `|⟨u, v⟩|` helper used by tests and diagnostics.
pub fn overlap(u: &[Complex64], v: &[Complex64]) -> f64 {
    dot(u, v).norm()
}
