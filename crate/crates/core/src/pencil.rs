//! Ordered eigenvalue curves `λ_1(t) ≥ … ≥ λ_n(t)` of `A(t) = A + tB`.
//!
//! Crossing detection relies on the Weyl bound: every ordered curve is
//! `‖B‖₂`-Lipschitz, so the gap between adjacent curves can only reach zero
//! inside `[t_a, t_b]` if `gap(t_a) + gap(t_b) ≤ 2‖B‖₂ (t_b − t_a)`.
//! Intervals failing that test are pruned; the survivors are bisected and
//! the crossing is then pinned down by minimizing the spread of the
//! involved block of curves.

use crate::error::{Error, Result};
use crate::hermitian::{eigh, HermitianMatrix, OrthonormalFrame};
use crate::inequalities::validate_selection;
use crate::matching::match_frames;
use crate::perturbation::first_order_rates;
use crate::tolerance::pair_scale;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    /// Number of uniform base samples, including both endpoints.
    pub grid_size: usize,
    /// Localize crossings between samples.
    pub refine: bool,
    /// Adjacent curves closer than `gap_rel · (1 + ‖A‖_F + ‖B‖_F)` meet.
    pub gap_rel: f64,
    /// Crossings are localized to `width_rel · (t_hi − t_lo)`.
    pub width_rel: f64,
    pub tol_cluster: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            grid_size: 65,
            refine: true,
            gap_rel: 1e-6,
            width_rel: 1e-8,
            tol_cluster: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub t: f64,
    /// 1-based indices of the ordered curves that meet at `t`.
    pub curves: Vec<usize>,
    /// `λ_first(t) − λ_last(t)` over `curves` at `t`.
    pub spread: f64,
}

/// A localized dip between two curves that stayed above the gap threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearMiss {
    pub t: f64,
    pub curves: Vec<usize>,
    pub min_gap: f64,
}

#[derive(Debug, Clone)]
pub struct PencilTrace {
    pub t_lo: f64,
    pub t_hi: f64,
    /// Base grid merged with the crossing locations.
    pub grid: Vec<f64>,
    /// `curves[g][i] = λ_{i+1}(grid[g])`.
    pub curves: Vec<Vec<f64>>,
    /// Adapted eigenvector frames (`u_i^* B u_i = λ_i'(t^+)`), phase-aligned
    /// to the previous sample.
    pub frames: Vec<OrthonormalFrame>,
    /// `branch_maps[g][i]`: index at sample `g` continuing index `i` of
    /// sample `g − 1` (identity at `g = 0`).
    pub branch_maps: Vec<Vec<usize>>,
    pub match_scores: Vec<f64>,
    pub crossings: Vec<Crossing>,
    pub near_misses: Vec<NearMiss>,
    /// Smallest observed gap per adjacent pair `(i, i+1)`.
    pub min_gaps: Vec<f64>,
    pub gap_tol: f64,
}

impl PencilTrace {
    pub fn dim(&self) -> usize {
        self.curves.first().map_or(0, Vec::len)
    }

    /// Crossings strictly inside `(lo, hi)`, with a margin of `margin`.
    pub fn interior_crossings(&self, lo: f64, hi: f64, margin: f64) -> Vec<f64> {
        self.crossings
            .iter()
            .map(|c| c.t)
            .filter(|&t| t > lo + margin && t < hi - margin)
            .collect()
    }

    /// CSV with header `t,lambda_1,...,lambda_n`.
    pub fn to_csv(&self) -> String {
        let n = self.dim();
        let mut out = String::from("t");
        for i in 1..=n {
            let _ = write!(out, ",lambda_{i}");
        }
        out.push('\n');
        for (t, row) in self.grid.iter().zip(&self.curves) {
            let _ = write!(out, "{t}");
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    /// Sidecar JSON: `[{"t": ..., "curves": [i, j]}, ...]`.
    pub fn crossings_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.crossings
                .iter()
                .map(|c| serde_json::json!({ "t": c.t, "curves": c.curves }))
                .collect(),
        )
    }
}

struct Sample {
    t: f64,
    vals: Vec<f64>,
}

struct Tracer<'a> {
    a: &'a HermitianMatrix,
    b: &'a HermitianMatrix,
    norm_b: f64,
    gap_tol: f64,
    tight: f64,
    width: f64,
    coarse: f64,
}

impl Tracer<'_> {
    fn sample(&self, t: f64) -> Result<Sample> {
        Ok(Sample {
            t,
            vals: eigh(&self.a.pencil_at(self.b, t))?.spectrum.values().to_vec(),
        })
    }

    /// Adjacent pairs whose gap could vanish inside `[sa.t, sb.t]`.
    fn suspicious(&self, sa: &Sample, sb: &Sample) -> Vec<usize> {
        let h = sb.t - sa.t;
        let n = sa.vals.len();
        (0..n.saturating_sub(1))
            .filter(|&p| {
                let ga = sa.vals[p] - sa.vals[p + 1];
                let gb = sb.vals[p] - sb.vals[p + 1];
                if ga < self.tight && gb < self.tight {
                    return false; // degenerate throughout, not a crossing
                }
                ga + gb <= 2.0 * self.norm_b * h + 2.0 * self.gap_tol
            })
            .collect()
    }

    /// Bisects `[sa, sb]` down to the coarse width, keeping only intervals
    /// that can contain a crossing.
    fn bisect(&self, sa: Sample, sb: Sample, events: &mut Vec<Event>) -> Result<()> {
        let mut stack = vec![(sa, sb)];
        while let Some((sa, sb)) = stack.pop() {
            let pairs = self.suspicious(&sa, &sb);
            if pairs.is_empty() {
                continue;
            }
            if sb.t - sa.t <= self.coarse {
                for p in pairs {
                    events.push(Event {
                        lo: sa.t,
                        hi: sb.t,
                        pair: p,
                        joined_lo: joined_pairs(&sa.vals, self.gap_tol),
                        joined_hi: joined_pairs(&sb.vals, self.gap_tol),
                    });
                }
                continue;
            }
            let mid = self.sample(0.5 * (sa.t + sb.t))?;
            let mid2 = Sample {
                t: mid.t,
                vals: mid.vals.clone(),
            };
            stack.push((mid, sb));
            stack.push((sa, mid2));
        }
        Ok(())
    }

    fn spread(&self, t: f64, lo: usize, hi: usize) -> Result<f64> {
        let s = self.sample(t)?;
        Ok(s.vals[lo] - s.vals[hi])
    }

    /// Golden-section minimization of the block spread on `[lo, hi]`.
    fn localize(&self, lo: f64, hi: f64, c_lo: usize, c_hi: usize) -> Result<(f64, f64)> {
        const INV_PHI: f64 = 0.618_033_988_749_894_8;
        let (mut a, mut b) = (lo, hi);
        let mut x1 = b - INV_PHI * (b - a);
        let mut x2 = a + INV_PHI * (b - a);
        let mut f1 = self.spread(x1, c_lo, c_hi)?;
        let mut f2 = self.spread(x2, c_lo, c_hi)?;
        while b - a > self.width {
            if f1 <= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - INV_PHI * (b - a);
                f1 = self.spread(x1, c_lo, c_hi)?;
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + INV_PHI * (b - a);
                f2 = self.spread(x2, c_lo, c_hi)?;
            }
        }
        let mut best = (0.5 * (a + b), self.spread(0.5 * (a + b), c_lo, c_hi)?);
        // The minimum may sit exactly on the search boundary (for example a
        // degenerate A at t = t_lo).
        for t in [lo, hi] {
            if (t - best.0).abs() <= self.width {
                let f = self.spread(t, c_lo, c_hi)?;
                if f <= best.1 {
                    best = (t, f);
                }
            }
        }
        Ok(best)
    }
}

fn joined_pairs(vals: &[f64], tol: f64) -> Vec<bool> {
    vals.windows(2).map(|w| w[0] - w[1] < tol).collect()
}

struct Event {
    lo: f64,
    hi: f64,
    pair: usize,
    joined_lo: Vec<bool>,
    joined_hi: Vec<bool>,
}

/// Groups events that touch in `t` and involve the same or neighbouring
/// pairs.
fn group_events(events: &[Event], eps: f64) -> Vec<Vec<usize>> {
    let m = events.len();
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        let mut y = x;
        while parent[y] != r {
            let next = parent[y];
            parent[y] = r;
            y = next;
        }
        r
    }
    for i in 0..m {
        for j in i + 1..m {
            let (ei, ej) = (&events[i], &events[j]);
            let touch = ei.lo <= ej.hi + eps && ej.lo <= ei.hi + eps;
            if touch && ei.pair.abs_diff(ej.pair) <= 1 {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..m {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Samples the ordered eigenvalue curves of `A + tB` on `[t_lo, t_hi]`,
/// finds the points where adjacent curves meet, and aligns eigenvector
/// frames from sample to sample.
pub fn trace_pencil(
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    t_lo: f64,
    t_hi: f64,
    opts: &TraceOptions,
) -> Result<PencilTrace> {
    a.check_same_dim(b)?;
    if !(t_lo < t_hi) || !t_lo.is_finite() || !t_hi.is_finite() {
        return Err(Error::InvalidArgument(format!("need t_lo < t_hi, got [{t_lo}, {t_hi}]")));
    }
    if opts.grid_size < 2 {
        return Err(Error::InvalidArgument("grid_size must be at least 2".into()));
    }
    let n = a.dim();
    let len = t_hi - t_lo;
    let scale = pair_scale(a, b);
    let norm_b = eigh(b)?.spectrum.max_abs();
    let tracer = Tracer {
        a,
        b,
        norm_b,
        gap_tol: opts.gap_rel * scale,
        tight: 1e-11 * scale,
        width: opts.width_rel * len,
        coarse: (len / 16384.0).max(opts.width_rel * len),
    };

    let base: Vec<f64> = (0..opts.grid_size)
        .map(|g| {
            if g + 1 == opts.grid_size {
                t_hi
            } else {
                t_lo + len * g as f64 / (opts.grid_size - 1) as f64
            }
        })
        .collect();
    let samples: Vec<Sample> = base.par_iter().map(|&t| tracer.sample(t)).collect::<Result<_>>()?;

    let mut min_gaps = vec![f64::INFINITY; n.saturating_sub(1)];
    for s in &samples {
        for (p, w) in s.vals.windows(2).enumerate() {
            min_gaps[p] = min_gaps[p].min(w[0] - w[1]);
        }
    }

    let mut crossings: Vec<Crossing> = Vec::new();
    let mut near_misses: Vec<NearMiss> = Vec::new();
    if opts.refine && n > 1 {
        let events: Vec<Event> = samples
            .par_windows(2)
            .map(|w| {
                let mut ev = Vec::new();
                let sa = Sample { t: w[0].t, vals: w[0].vals.clone() };
                let sb = Sample { t: w[1].t, vals: w[1].vals.clone() };
                tracer.bisect(sa, sb, &mut ev).map(|_| ev)
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        for group in group_events(&events, tracer.width) {
            let lo = group.iter().map(|&i| events[i].lo).fold(f64::INFINITY, f64::min);
            let hi = group.iter().map(|&i| events[i].hi).fold(f64::NEG_INFINITY, f64::max);
            let mut p_lo = group.iter().map(|&i| events[i].pair).min().unwrap();
            let mut p_hi = group.iter().map(|&i| events[i].pair).max().unwrap();
            // Extend the block through pairs that are joined at either end
            // of the window (a curve meeting an already degenerate group).
            let joined = |p: usize| {
                group
                    .iter()
                    .any(|&i| events[i].joined_lo[p] || events[i].joined_hi[p])
            };
            while p_lo > 0 && joined(p_lo - 1) {
                p_lo -= 1;
            }
            while p_hi + 2 < n && joined(p_hi + 1) {
                p_hi += 1;
            }
            let (c_lo, c_hi) = (p_lo, p_hi + 1);
            let search_lo = (lo - tracer.coarse).max(t_lo);
            let search_hi = (hi + tracer.coarse).min(t_hi);
            let (t, spread) = tracer.localize(search_lo, search_hi, c_lo, c_hi)?;
            let curves: Vec<usize> = (c_lo + 1..=c_hi + 1).collect();
            if spread < tracer.gap_tol {
                crossings.push(Crossing { t, curves, spread });
            } else {
                near_misses.push(NearMiss {
                    t,
                    curves,
                    min_gap: spread,
                });
            }
            for g in &mut min_gaps[c_lo..c_hi] {
                *g = g.min(spread);
            }
        }
    } else if n > 1 {
        for g in 0..samples.len() {
            let gaps: Vec<f64> = samples[g].vals.windows(2).map(|w| w[0] - w[1]).collect();
            let meeting: Vec<usize> = (0..n - 1)
                .filter(|&p| {
                    let isolated = |h: Option<&Sample>| h.is_none_or(|s| s.vals[p] - s.vals[p + 1] >= tracer.gap_tol);
                    gaps[p] < tracer.gap_tol
                        && (isolated(g.checked_sub(1).map(|i| &samples[i])) || isolated(samples.get(g + 1)))
                })
                .collect();
            if let (Some(&first), Some(&last)) = (meeting.first(), meeting.last()) {
                crossings.push(Crossing {
                    t: samples[g].t,
                    curves: (first + 1..=last + 2).collect(),
                    spread: samples[g].vals[first] - samples[g].vals[last + 1],
                });
            }
        }
    }
    crossings.sort_by(|x, y| x.t.total_cmp(&y.t));
    let mut merged: Vec<Crossing> = Vec::new();
    for c in crossings {
        match merged.last_mut() {
            Some(prev) if (c.t - prev.t).abs() <= 10.0 * tracer.width => {
                for i in c.curves {
                    if !prev.curves.contains(&i) {
                        prev.curves.push(i);
                    }
                }
                prev.curves.sort_unstable();
            }
            _ => merged.push(c),
        }
    }
    near_misses.sort_by(|x, y| x.t.total_cmp(&y.t));

    // Final grid: base samples plus crossing locations.
    let mut grid: Vec<f64> = base.clone();
    for c in &merged {
        if grid.iter().all(|&t| (t - c.t).abs() > tracer.width) {
            grid.push(c.t);
        }
    }
    grid.sort_by(|x, y| x.total_cmp(y));

    let rates: Vec<_> = grid
        .par_iter()
        .map(|&t| first_order_rates(&a.pencil_at(b, t), b, opts.tol_cluster))
        .collect::<Result<_>>()?;
    let curves: Vec<Vec<f64>> = rates.iter().map(|r| r.spectrum.values().to_vec()).collect();
    let mut frames: Vec<OrthonormalFrame> = Vec::with_capacity(grid.len());
    let mut branch_maps = Vec::with_capacity(grid.len());
    let mut match_scores = Vec::with_capacity(grid.len());
    for g in 0..grid.len() {
        if g == 0 {
            frames.push(rates[0].adapted_frame.clone());
            branch_maps.push((0..n).collect());
            match_scores.push(n as f64);
            continue;
        }
        let shift = norm_b * (grid[g] - grid[g - 1]) + tracer.gap_tol;
        let m = match_frames(
            &frames[g - 1],
            &rates[g].adapted_frame,
            &rates[g - 1].clusters,
            &rates[g].clusters,
            Some(shift),
        );
        frames.push(m.aligned_next);
        branch_maps.push(m.permutation);
        match_scores.push(m.score);
    }

    Ok(PencilTrace {
        t_lo,
        t_hi,
        grid,
        curves,
        frames,
        branch_maps,
        match_scores,
        crossings: merged,
        near_misses,
        min_gaps,
        gap_tol: tracer.gap_tol,
    })
}

/// One-sided derivatives `λ_i'(t^±)` of the ordered curves.
///
/// The right derivatives are the rates `ν(A + tB, B)`, non-increasing
/// within each cluster; coming from the left the fastest-growing branch is
/// the lowest one, so each cluster's rates are reversed.
pub fn derivative_at(
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    t: f64,
    side: Side,
    tol_cluster: f64,
) -> Result<Vec<f64>> {
    let rates = first_order_rates(&a.pencil_at(b, t), b, tol_cluster)?;
    let mut d = rates.nu;
    if side == Side::Left {
        for c in 0..rates.clusters.len() {
            d[rates.clusters.range(c)].reverse();
        }
    }
    Ok(d)
}

/// `φ(t_g) = Σ_j λ_{i_j}(t_g)` along the trace; `indices` are 1-based and
/// may be the full set `[n]`.
pub fn phi_curve(trace: &PencilTrace, indices: &[usize]) -> Result<Vec<f64>> {
    validate_selection(trace.dim(), indices)?;
    Ok(trace
        .curves
        .iter()
        .map(|row| indices.iter().map(|&i| row[i - 1]).sum())
        .collect())
}

const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

fn gauss_legendre5(f: &impl Fn(f64) -> Result<f64>, lo: f64, hi: f64) -> Result<f64> {
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let mut s = 0.0;
    for (x, w) in GL5_NODES.iter().zip(GL5_WEIGHTS) {
        s += w * f(mid + half * x)?;
    }
    Ok(s * half)
}

fn adaptive_gl5(f: &impl Fn(f64) -> Result<f64>, lo: f64, hi: f64, whole: f64, tol: f64, depth: u32) -> Result<f64> {
    let mid = 0.5 * (lo + hi);
    let left = gauss_legendre5(f, lo, mid)?;
    let right = gauss_legendre5(f, mid, hi)?;
    if depth == 0 || (left + right - whole).abs() <= tol {
        return Ok(left + right);
    }
    Ok(adaptive_gl5(f, lo, mid, left, 0.5 * tol, depth - 1)? + adaptive_gl5(f, mid, hi, right, 0.5 * tol, depth - 1)?)
}

/// `∫_{t0}^{t1} φ'(t) dt`, with `φ'` evaluated from the one-sided
/// derivative formula and composite 5-point Gauss–Legendre quadrature on
/// each crossing-free piece. Equals `φ(t1) − φ(t0)` up to quadrature error.
pub fn integrate_phi_prime(
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    indices: &[usize],
    t0: f64,
    t1: f64,
    opts: &TraceOptions,
) -> Result<f64> {
    validate_selection(a.dim(), indices)?;
    if !(t0 < t1) {
        return Err(Error::InvalidArgument(format!("need t0 < t1, got [{t0}, {t1}]")));
    }
    let trace = trace_pencil(a, b, t0, t1, opts)?;
    let width = opts.width_rel * (t1 - t0);
    let mut breaks = vec![t0];
    breaks.extend(trace.interior_crossings(t0, t1, width));
    breaks.push(t1);
    let phi_prime = |t: f64| -> Result<f64> {
        let d = derivative_at(a, b, t, Side::Right, opts.tol_cluster)?;
        Ok(indices.iter().map(|&i| d[i - 1]).sum())
    };
    let tol = 1e-10 * pair_scale(a, b);
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let piece_tol = tol * (w[1] - w[0]) / (t1 - t0);
        let whole = gauss_legendre5(&phi_prime, w[0], w[1])?;
        total += adaptive_gl5(&phi_prime, w[0], w[1], whole, piece_tol, 24)?;
    }
    Ok(total)
}
