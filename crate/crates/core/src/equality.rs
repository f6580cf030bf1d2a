//! The equality case of Wielandt's inequality.
//!
//! Equality at `S = {i_1 < … < i_k}` holds iff `[0, 1]` splits into
//! segments `[b_{l−1}, b_l]`, each carrying a k-dimensional common
//! invariant subspace `U_l` of A and B on which B acts with the top-k
//! spectrum of B and whose restricted pencil reproduces the curves
//! `λ_{i_1}(t), …, λ_{i_k}(t)`. Such certificates are built from the traced
//! pencil and verified independently of how they were found.
//!
//! The local question (does a single such subspace exist at `t = 0⁺`) has
//! three equivalent formulations, checked by `condition1_search`,
//! `condition2_check` and `condition3_check`.

use crate::dense::CMatrix;
use crate::error::{Error, Result};
use crate::hermitian::{
    cluster_spectrum, eigh, frame_compression, invariant_residual, top_k_spectral_structure, ClusterStructure,
    HermitianMatrix, OrthonormalFrame,
};
use crate::inequalities::{wielandt_check, IndexSet, InequalityReport, Verdict};
use crate::io::{frame_from_pairs, frame_to_pairs, MatrixJson};
use crate::pencil::{trace_pencil, TraceOptions};
use crate::perturbation::first_order_rates;
use crate::random::planted_equality;
use crate::tolerance::{pair_scale, Tolerances};
use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::ops::Range;

/// Default cap on boundary-eigenspace completions tried by
/// `condition1_search`.
pub const COMPLETION_CAP: usize = 64;
/// Cap on enumerated cluster-admissible index tuples.
pub const ADMISSIBLE_CAP: usize = 100_000;

fn spectrum_values(m: &HermitianMatrix) -> Result<Vec<f64>> {
    Ok(eigh(m)?.spectrum.values().to_vec())
}

fn max_deviation(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

fn check_set(a: &HermitianMatrix, s: &IndexSet) -> Result<()> {
    if s.n() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: s.n(),
        });
    }
    Ok(())
}

/// Wielandt check with the equality band `tol.equality · (1 + ‖A‖_F + ‖B‖_F)`.
pub fn check_equality(a: &HermitianMatrix, b: &HermitianMatrix, s: &IndexSet, tol: &Tolerances) -> Result<InequalityReport> {
    wielandt_check(a, b, s, tol.equality_band(a, b))
}

/// Groups of `S` sharing a cluster of A: `(cluster range, count)` with
/// 0-based positions, in increasing order.
pub fn admissible_groups(clusters: &ClusterStructure, s: &IndexSet) -> Vec<(Range<usize>, usize)> {
    let mut groups: Vec<(Range<usize>, usize)> = Vec::new();
    for pos in s.positions() {
        let r = clusters.range(clusters.cluster_of(pos));
        match groups.last_mut() {
            Some((last, count)) if *last == r => *count += 1,
            _ => groups.push((r, 1)),
        }
    }
    groups
}

/// All strictly increasing 1-based `p` with `p_j` in the A-cluster of
/// `i_j`, in lexicographic order.
pub fn admissible_sets(clusters: &ClusterStructure, s: &IndexSet, cap: usize) -> Result<Vec<Vec<usize>>> {
    let groups = admissible_groups(clusters, s);
    let mut needed: usize = 1;
    for (r, c) in &groups {
        needed = needed.saturating_mul(binomial(r.len(), *c));
    }
    if needed > cap {
        return Err(Error::CombinatorialCap { needed, cap });
    }
    Ok(groups
        .iter()
        .map(|(r, c)| r.clone().map(|p| p + 1).combinations(*c).collect::<Vec<_>>())
        .multi_cartesian_product()
        .map(|parts| parts.concat())
        .collect())
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Cluster-admissible `p` maximizing `Σ ν_{p_j}(A, B)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSelection {
    pub p: Vec<usize>,
    pub achieved: f64,
    /// `Σ_{j ≤ k} λ_j(B)`
    pub target: f64,
}

impl RateSelection {
    pub fn gap(&self) -> f64 {
        self.target - self.achieved
    }
}

/// The maximum over admissible `p` of `Σ ν_{p_j}`: within each A-cluster
/// the rates are non-increasing, so the leading positions of the cluster
/// are optimal.
pub fn best_rate_selection(a: &HermitianMatrix, b: &HermitianMatrix, s: &IndexSet, tol_cluster: f64) -> Result<RateSelection> {
    check_set(a, s)?;
    let rates = first_order_rates(a, b, tol_cluster)?;
    let target = eigh(b)?.spectrum.top_k_sum(s.k());
    let p: Vec<usize> = admissible_groups(&rates.clusters, s)
        .into_iter()
        .flat_map(|(r, c)| r.start + 1..r.start + 1 + c)
        .collect();
    let achieved = p.iter().map(|&i| rates.nu[i - 1]).sum();
    Ok(RateSelection { p, achieved, target })
}

pub fn condition3_check(
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    s: &IndexSet,
    tol: &Tolerances,
) -> Result<Option<RateSelection>> {
    let sel = best_rate_selection(a, b, s, tol.cluster)?;
    Ok((sel.gap().abs() <= tol.equality_band(a, b)).then_some(sel))
}

/// Residuals of a candidate common invariant subspace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubspaceResiduals {
    pub a_invariance: f64,
    pub b_invariance: f64,
    /// Max deviation of the spectrum of `U^* B U` from `λ_1(B), …, λ_k(B)`.
    pub top_k_b_match: f64,
}

impl SubspaceResiduals {
    pub fn measure(a: &HermitianMatrix, b: &HermitianMatrix, u: &OrthonormalFrame, top_b: &[f64]) -> Result<Self> {
        Ok(Self {
            a_invariance: invariant_residual(a, u)?,
            b_invariance: invariant_residual(b, u)?,
            top_k_b_match: max_deviation(&spectrum_values(&frame_compression(b, u)?)?, top_b),
        })
    }

    pub fn max(&self) -> f64 {
        self.a_invariance.max(self.b_invariance).max(self.top_k_b_match)
    }
}

/// Searches for a k-dimensional common invariant subspace `U` spanned by
/// eigenvectors of A for `λ_{i_1}(A), …, λ_{i_k}(A)` and by eigenvectors of
/// B for `λ_1(B), …, λ_k(B)`.
///
/// Every top-k invariant subspace of B is `F ⊕ G` with `F` forced and `G`
/// inside the eigenspace `E` of the boundary cluster. If `F ⊕ G` is also
/// A-invariant then `G` is invariant under `C₁ = E^* A E` and annihilated by
/// `W = (I − P_F − P_E) A E`; such `G` are spanned by eigenvectors of
/// `C₁ + ρ W^*W` lying in `ker W`, and the search enumerates those spans.
pub fn condition1_search(
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    s: &IndexSet,
    tol: &Tolerances,
) -> Result<Option<OrthonormalFrame>> {
    condition1_search_capped(a, b, s, tol, COMPLETION_CAP)
}

pub fn condition1_search_capped(
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    s: &IndexSet,
    tol: &Tolerances,
    cap: usize,
) -> Result<Option<OrthonormalFrame>> {
    check_set(a, s)?;
    a.check_same_dim(b)?;
    let k = s.k();
    let band = tol.equality_band(a, b);
    let top = top_k_spectral_structure(b, k, tol.cluster)?;
    let top_b = top.spectrum.values()[..k].to_vec();
    let spec_a = eigh(a)?.spectrum;
    let target_a: Vec<f64> = s.indices().iter().map(|&i| spec_a.lambda(i)).collect();
    let accept = |u: &OrthonormalFrame| -> Result<bool> {
        let r = SubspaceResiduals::measure(a, b, u, &top_b)?;
        if r.max() > band {
            return Ok(false);
        }
        let mu = spectrum_values(&frame_compression(a, u)?)?;
        Ok(max_deviation(&mu, &target_a) <= band)
    };

    let Some(free) = top.free else {
        let forced = top.forced.expect("a top-k structure without free part has a forced part");
        return Ok(accept(&forced)?.then_some(forced));
    };
    let d = top.deficiency;
    let e = free.matrix();
    let basis = match &top.forced {
        Some(f) => f.join(&free),
        None => free.clone(),
    };
    let ae = a.as_matrix().matmul(e);
    let w = ae.sub(&basis.matrix().matmul(&basis.matrix().adjoint_mul(&ae)));
    let c1 = frame_compression(a, &free)?;
    let c2 = HermitianMatrix::symmetrized(w.adjoint_mul(&w));
    let rho = 0.618_033_988_749_895 / (1.0 + a.frobenius_norm());
    let h = c1.add(&c2.scale(rho));
    let eh = eigh(&h)?;
    let h_clusters = cluster_spectrum(&eh.spectrum, tol.cluster);

    // Within each H-cluster, rotate onto eigenvectors of W^*W so vectors in
    // ker W separate from the rest.
    let mut candidates: Vec<Vec<num_complex::Complex64>> = Vec::new();
    for c in 0..h_clusters.len() {
        let block = eh.frame.range(h_clusters.range(c));
        let ec = eigh(&frame_compression(&c2, &block)?)?;
        let rotated = block.matrix().matmul(ec.frame.matrix());
        for (j, &v) in ec.spectrum.values().iter().enumerate() {
            if v.max(0.0).sqrt() <= band {
                candidates.push(e.matmul(&CMatrix::from_columns(e.cols(), &[rotated.column(j)])).column(0));
            }
        }
    }
    if candidates.len() < d {
        return Ok(None);
    }
    let needed = binomial(candidates.len(), d);
    if needed > cap {
        return Err(Error::CombinatorialCap { needed, cap });
    }
    for combo in (0..candidates.len()).combinations(d) {
        let cols: Vec<_> = combo.iter().map(|&j| candidates[j].clone()).collect();
        let g = OrthonormalFrame::from_matrix_unchecked(CMatrix::from_columns(a.dim(), &cols));
        let u = match &top.forced {
            Some(f) => f.join(&g),
            None => g,
        };
        if accept(&u)? {
            return Ok(Some(u));
        }
    }
    Ok(None)
}

/// First admissible `p` (lexicographic) with
/// `Σ λ_{p_j}(A + t₁B) = Σ λ_{p_j}(A) + t₁ Σ_{j ≤ k} λ_j(B)` within the
/// equality band of the pair `(A, t₁B)`.
pub fn condition2_check(
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    s: &IndexSet,
    t1: f64,
    tol: &Tolerances,
) -> Result<Option<Vec<usize>>> {
    check_set(a, s)?;
    if !(t1 > 0.0 && t1.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_1 must be positive and finite, got {t1}")));
    }
    let ea = eigh(a)?;
    let clusters = cluster_spectrum(&ea.spectrum, tol.cluster);
    let moved = spectrum_values(&a.pencil_at(b, t1))?;
    let target = eigh(b)?.spectrum.top_k_sum(s.k());
    let band = tol.equality * pair_scale(a, &b.scale(t1));
    Ok(admissible_sets(&clusters, s, ADMISSIBLE_CAP)?.into_iter().find(|p| {
        let lhs: f64 = p.iter().map(|&i| moved[i - 1]).sum();
        let rhs: f64 = p.iter().map(|&i| ea.spectrum.lambda(i)).sum::<f64>() + t1 * target;
        (lhs - rhs).abs() <= band
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub indices: Vec<usize>,
    pub condition1: Option<OrthonormalFrame>,
    /// The `t₁` condition 2 was evaluated at.
    pub t1: f64,
    pub condition2: Option<Vec<usize>>,
    pub condition3: Option<RateSelection>,
    /// Best rate selection, reported even when condition 3 is absent.
    pub rates: RateSelection,
    pub consistent: bool,
}

impl ConditionReport {
    /// All three conditions present.
    pub fn holds(&self) -> bool {
        self.condition1.is_some() && self.condition2.is_some() && self.condition3.is_some()
    }
}

/// Half of the first crossing in `(0, 1]` of the traced pencil, or 0.5 when
/// `(0, 1]` is crossing-free.
pub fn first_interval_t1(a: &HermitianMatrix, b: &HermitianMatrix, tol: &Tolerances) -> Result<f64> {
    let opts = TraceOptions {
        grid_size: 33,
        tol_cluster: tol.cluster,
        ..TraceOptions::default()
    };
    let trace = trace_pencil(a, b, 0.0, 1.0, &opts)?;
    let margin = 100.0 * opts.width_rel;
    Ok(trace
        .crossings
        .iter()
        .map(|c| c.t)
        .find(|&t| t > margin)
        .map_or(0.5, |t| 0.5 * t))
}

pub fn equivalence_report(a: &HermitianMatrix, b: &HermitianMatrix, s: &IndexSet, tol: &Tolerances) -> Result<ConditionReport> {
    let rates = best_rate_selection(a, b, s, tol.cluster)?;
    let condition3 = (rates.gap().abs() <= tol.equality_band(a, b)).then(|| rates.clone());
    let condition1 = condition1_search(a, b, s, tol)?;
    let t1 = first_interval_t1(a, b, tol)?;
    let condition2 = condition2_check(a, b, s, t1, tol)?;
    let present = [condition1.is_some(), condition2.is_some(), condition3.is_some()];
    Ok(ConditionReport {
        indices: s.indices().to_vec(),
        condition1,
        t1,
        condition2,
        condition3,
        rates,
        consistent: present.iter().all(|&x| x) || present.iter().all(|&x| !x),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum MaximalT1 {
    Finite(f64),
    /// Condition 2 still holds at the cap.
    Infinite,
}

/// `sup { t ≤ t_cap : condition 2 holds on (0, t] }`, located by a scan and
/// bisection to relative width `1e−8`. Returns `Finite(0)` when condition 3
/// fails at `t = 0⁺`.
pub fn maximal_t1(a: &HermitianMatrix, b: &HermitianMatrix, s: &IndexSet, tol: &Tolerances, t_cap: f64) -> Result<MaximalT1> {
    if !(t_cap > 0.0 && t_cap.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_cap must be positive and finite, got {t_cap}")));
    }
    if condition3_check(a, b, s, tol)?.is_none() {
        return Ok(MaximalT1::Finite(0.0));
    }
    let present = |t: f64| condition2_check(a, b, s, t, tol).map(|p| p.is_some());
    let mut points: Vec<f64> = (1..=30).map(|j| t_cap * 0.5f64.powi(j)).collect();
    points.extend((1..=256).map(|m| t_cap * m as f64 / 256.0));
    points.sort_by(|x, y| x.total_cmp(y));
    points.dedup();
    let flags: Vec<bool> = points.par_iter().map(|&t| present(t)).collect::<Result<_>>()?;
    let Some(f) = flags.iter().position(|&ok| !ok) else {
        return Ok(MaximalT1::Infinite);
    };
    let mut lo = if f == 0 { 0.0 } else { points[f - 1] };
    let mut hi = points[f];
    while hi - lo > 1e-8 * hi {
        let mid = 0.5 * (lo + hi);
        if present(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(MaximalT1::Finite(lo))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    /// Verification samples per segment, endpoints included.
    pub samples_per_segment: usize,
    pub trace: TraceOptions,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            samples_per_segment: 9,
            trace: TraceOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EqualityCertificate {
    pub indices: Vec<usize>,
    /// `0 = b_0 < b_1 < … < b_r = 1`.
    pub breakpoints: Vec<f64>,
    pub subspaces: Vec<OrthonormalFrame>,
    /// Per segment: max over samples of `|μ_{j,l}(t) − λ_{i_j}(t)|`.
    pub residuals: Vec<f64>,
    pub subspace_residuals: Vec<SubspaceResiduals>,
    /// Per segment: largest distance between `U_l` and the subspace built
    /// the same way at the other interior samples.
    pub tau_drift: Vec<f64>,
    pub band: f64,
    pub samples_per_segment: usize,
}

impl EqualityCertificate {
    pub fn r(&self) -> usize {
        self.subspaces.len()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals
            .iter()
            .copied()
            .chain(self.subspace_residuals.iter().map(SubspaceResiduals::max))
            .fold(0.0, f64::max)
    }

    /// Smallest pairwise distance between the certificate's subspaces.
    pub fn min_separation(&self) -> f64 {
        (0..self.r())
            .tuple_combinations()
            .map(|(x, y)| self.subspaces[x].subspace_distance(&self.subspaces[y]))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_json(&self, a: &HermitianMatrix, b: &HermitianMatrix) -> CertificateJson {
        CertificateJson {
            indices: self.indices.clone(),
            breakpoints: self.breakpoints.clone(),
            subspaces: self.subspaces.iter().map(frame_to_pairs).collect(),
            residuals: ResidualsJson {
                curve_match: self.residuals.clone(),
                a_invariance: self.subspace_residuals.iter().map(|r| r.a_invariance).collect(),
                b_invariance: self.subspace_residuals.iter().map(|r| r.b_invariance).collect(),
                top_k_b_match: self.subspace_residuals.iter().map(|r| r.top_k_b_match).collect(),
                tau_drift: self.tau_drift.clone(),
            },
            r: self.r(),
            band: self.band,
            samples_per_segment: self.samples_per_segment,
            a: MatrixJson::from_matrix(a),
            b: MatrixJson::from_matrix(b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualsJson {
    pub curve_match: Vec<f64>,
    pub a_invariance: Vec<f64>,
    pub b_invariance: Vec<f64>,
    pub top_k_b_match: Vec<f64>,
    #[serde(default)]
    pub tau_drift: Vec<f64>,
}

/// Self-contained certificate: the pair is embedded so the certificate can
/// be re-verified from the file alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateJson {
    pub indices: Vec<usize>,
    pub breakpoints: Vec<f64>,
    pub subspaces: Vec<Vec<Vec<[f64; 2]>>>,
    pub residuals: ResidualsJson,
    pub r: usize,
    pub band: f64,
    pub samples_per_segment: usize,
    pub a: MatrixJson,
    pub b: MatrixJson,
}

fn failure(invariant: &str, segment: usize, t: f64, deviation: f64, tol: f64) -> Error {
    Error::CertificationFailure {
        invariant: invariant.to_string(),
        segment,
        t,
        deviation,
        tol,
    }
}

fn segment_samples(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let count = count.max(2);
    (0..count)
        .map(|m| {
            if m + 1 == count {
                hi
            } else {
                lo + (hi - lo) * m as f64 / (count - 1) as f64
            }
        })
        .collect()
}

struct Segment {
    lo: f64,
    hi: f64,
    u: OrthonormalFrame,
    samples: Vec<f64>,
}

/// Verifies one segment, returning `(curve residual, subspace residuals)`
/// or the first violated invariant. `segment` is 1-based.
fn verify_segment(
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    indices: &[usize],
    seg: &Segment,
    segment: usize,
    top_b: &[f64],
    band: f64,
) -> Result<(f64, SubspaceResiduals)> {
    let res = SubspaceResiduals::measure(a, b, &seg.u, top_b)?;
    for (name, v) in [
        ("A-invariance", res.a_invariance),
        ("B-invariance", res.b_invariance),
        ("top-k spectrum of B", res.top_k_b_match),
    ] {
        if !(v <= band) {
            return Err(failure(name, segment, seg.lo, v, band));
        }
    }
    let mut worst = 0.0f64;
    for &t in &seg.samples {
        let at = a.pencil_at(b, t);
        let lambda = spectrum_values(&at)?;
        let mu = spectrum_values(&frame_compression(&at, &seg.u)?)?;
        let want: Vec<f64> = indices.iter().map(|&i| lambda[i - 1]).collect();
        let dev = max_deviation(&mu, &want);
        if !(dev <= band) {
            return Err(failure("curve match", segment, t, dev, band));
        }
        worst = worst.max(dev);
    }
    Ok((worst, res))
}

fn verify_all(
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    indices: &[usize],
    segments: &[Segment],
    band: f64,
) -> Result<Vec<(f64, SubspaceResiduals)>> {
    let top_b = eigh(b)?.spectrum.values()[..indices.len()].to_vec();
    let results: Vec<Result<_>> = segments
        .par_iter()
        .enumerate()
        .map(|(l, seg)| verify_segment(a, b, indices, seg, l + 1, &top_b, band))
        .collect();
    results.into_iter().collect()
}

fn adapted_subspace(a: &HermitianMatrix, b: &HermitianMatrix, indices: &[usize], t: f64, tol_cluster: f64) -> Result<OrthonormalFrame> {
    let rates = first_order_rates(&a.pencil_at(b, t), b, tol_cluster)?;
    let cols: Vec<usize> = indices.iter().map(|&i| i - 1).collect();
    Ok(rates.adapted_frame.select(&cols))
}

/// Builds and verifies an equality certificate on `[0, 1]`.
///
/// Segment boundaries are the pencil crossings inside `(0, 1)`; each
/// segment's subspace is spanned by the adapted eigenvectors
/// `u_{i_1}(τ), …, u_{i_k}(τ)` at its midpoint τ. Consecutive segments with
/// the same subspace (distance within the band) are merged.
pub fn certify(
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    s: &IndexSet,
    tol: &Tolerances,
    opts: &CertifyOptions,
) -> Result<EqualityCertificate> {
    let report = check_equality(a, b, s, tol)?;
    if report.verdict != Verdict::Equality {
        return Err(failure("equality", 0, 1.0, report.slack.abs(), tol.equality_band(a, b)));
    }
    let band = tol.certification_band(a, b);
    let indices = s.indices();
    let trace_opts = TraceOptions {
        tol_cluster: tol.cluster,
        ..opts.trace
    };
    let trace = trace_pencil(a, b, 0.0, 1.0, &trace_opts)?;
    let mut cuts = vec![0.0];
    cuts.extend(trace.interior_crossings(0.0, 1.0, 100.0 * trace_opts.width_rel));
    cuts.push(1.0);

    let taus: Vec<f64> = cuts.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let frames: Vec<OrthonormalFrame> = taus
        .par_iter()
        .map(|&tau| adapted_subspace(a, b, indices, tau, tol.cluster))
        .collect::<Result<_>>()?;

    // Merge consecutive segments carrying the same subspace.
    let mut segments: Vec<Segment> = Vec::new();
    let mut drift_points: Vec<Vec<f64>> = Vec::new();
    for (l, u) in frames.into_iter().enumerate() {
        let (lo, hi) = (cuts[l], cuts[l + 1]);
        let pts = segment_samples(lo, hi, opts.samples_per_segment);
        let interior: Vec<f64> = pts[1..pts.len() - 1].to_vec();
        match segments.last_mut() {
            Some(prev) if prev.u.subspace_distance(&u) <= band => {
                prev.hi = hi;
                prev.samples.extend_from_slice(&pts[1..]);
                drift_points.last_mut().expect("parallel to segments").extend(interior);
            }
            _ => {
                segments.push(Segment { lo, hi, u, samples: pts });
                drift_points.push(interior);
            }
        }
    }

    let verified = verify_all(a, b, indices, &segments, band)?;
    let tau_drift: Vec<f64> = segments
        .par_iter()
        .zip(drift_points.par_iter())
        .map(|(seg, pts)| -> Result<f64> {
            let mut worst = 0.0f64;
            for &t in pts {
                let v = adapted_subspace(a, b, indices, t, tol.cluster)?;
                worst = worst.max(seg.u.subspace_distance(&v));
            }
            Ok(worst)
        })
        .collect::<Result<_>>()?;

    let mut breakpoints: Vec<f64> = segments.iter().map(|s| s.lo).collect();
    breakpoints.push(1.0);
    Ok(EqualityCertificate {
        indices: indices.to_vec(),
        breakpoints,
        subspaces: segments.into_iter().map(|s| s.u).collect(),
        residuals: verified.iter().map(|v| v.0).collect(),
        subspace_residuals: verified.into_iter().map(|v| v.1).collect(),
        tau_drift,
        band,
        samples_per_segment: opts.samples_per_segment,
    })
}

/// Re-verifies a certificate from its JSON form. The band is recomputed
/// from `tol`, not taken from the file.
pub fn verify_certificate(cert: &CertificateJson, tol: &Tolerances) -> Result<EqualityCertificate> {
    let a = cert.a.to_hermitian(tol.hermiticity)?;
    let b = cert.b.to_hermitian(tol.hermiticity)?;
    a.check_same_dim(&b)?;
    let s = IndexSet::new(a.dim(), cert.indices.clone())?;
    let bp = &cert.breakpoints;
    if bp.len() != cert.subspaces.len() + 1 {
        return Err(Error::LengthMismatch {
            left: bp.len(),
            right: cert.subspaces.len() + 1,
        });
    }
    if bp.first() != Some(&0.0) || bp.last() != Some(&1.0) || bp.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument(
            "breakpoints must increase strictly from 0 to 1".into(),
        ));
    }
    let band = tol.certification_band(&a, &b);
    let segments: Vec<Segment> = cert
        .subspaces
        .iter()
        .enumerate()
        .map(|(l, vecs)| {
            let u = frame_from_pairs(vecs, 1e-8)?;
            if u.ambient_dim() != a.dim() || u.len() != s.k() {
                return Err(Error::DimensionMismatch {
                    expected: s.k(),
                    found: u.len(),
                });
            }
            Ok(Segment {
                lo: bp[l],
                hi: bp[l + 1],
                u,
                samples: segment_samples(bp[l], bp[l + 1], cert.samples_per_segment),
            })
        })
        .collect::<Result<_>>()?;
    let verified = verify_all(&a, &b, s.indices(), &segments, band)?;
    Ok(EqualityCertificate {
        indices: s.indices().to_vec(),
        breakpoints: bp.clone(),
        subspaces: segments.into_iter().map(|s| s.u).collect(),
        residuals: verified.iter().map(|v| v.0).collect(),
        subspace_residuals: verified.into_iter().map(|v| v.1).collect(),
        tau_drift: Vec::new(),
        band,
        samples_per_segment: cert.samples_per_segment,
    })
}

/// A planted instance whose certificate needed several genuinely different
/// subspaces and for which no single subspace covered `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RCandidate {
    pub seed: u64,
    pub indices: Vec<usize>,
    pub r: usize,
    pub breakpoints: Vec<f64>,
    pub min_separation: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RSearchSummary {
    pub trials: usize,
    pub certified: usize,
    /// `(seed, message)` for instances that failed to certify.
    pub failures: Vec<(u64, String)>,
    pub candidates: Vec<RCandidate>,
}

/// Certifies `trials` planted equality instances (seeds `seed, seed + 1,
/// …`) and collects those that seem to need `r ≥ 2`.
pub fn search_r_greater_1(seed: u64, n: usize, k: usize, trials: usize, tol: &Tolerances) -> Result<RSearchSummary> {
    if k < 2 {
        return Err(Error::InvalidArgument(
            "k = 1 always admits r = 1: on each subspace the single curve is λ_i(A) + tλ_1(B), \
             so curves from two subspaces either coincide or never meet"
                .into(),
        ));
    }
    let outcomes: Vec<(u64, Result<Option<RCandidate>>)> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let trial_seed = seed.wrapping_add(i);
            (trial_seed, r_trial(trial_seed, n, k, tol))
        })
        .collect();
    let mut summary = RSearchSummary {
        trials,
        ..Default::default()
    };
    for (trial_seed, outcome) in outcomes {
        match outcome {
            Ok(candidate) => {
                summary.certified += 1;
                summary.candidates.extend(candidate);
            }
            Err(e) => summary.failures.push((trial_seed, e.to_string())),
        }
    }
    Ok(summary)
}

fn r_trial(seed: u64, n: usize, k: usize, tol: &Tolerances) -> Result<Option<RCandidate>> {
    let inst = planted_equality(n, k, seed)?;
    let s = IndexSet::new(n, inst.indices.clone())?;
    let cert = certify(&inst.a, &inst.b, &s, tol, &CertifyOptions::default())?;
    if cert.r() < 2 || cert.min_separation() <= cert.band {
        return Ok(None);
    }
    if let Some(u) = condition1_search(&inst.a, &inst.b, &s, tol)? {
        let samples: Vec<f64> = cert
            .breakpoints
            .windows(2)
            .flat_map(|w| segment_samples(w[0], w[1], cert.samples_per_segment))
            .collect();
        let whole = [Segment {
            lo: 0.0,
            hi: 1.0,
            u,
            samples,
        }];
        if verify_all(&inst.a, &inst.b, s.indices(), &whole, cert.band).is_ok() {
            return Ok(None);
        }
    }
    Ok(Some(RCandidate {
        seed,
        indices: inst.indices,
        r: cert.r(),
        breakpoints: cert.breakpoints.clone(),
        min_separation: cert.min_separation(),
    }))
}
