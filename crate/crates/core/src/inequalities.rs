//! Wielandt's inequality
//!
//! `Σ_j λ_{i_j}(A + B) ≤ Σ_j λ_{i_j}(A) + Σ_{j ≤ k} λ_j(B)`
//!
//! for index sets of size `k ∈ [n − 1]`, and the equivalent Lidskii
//! majorization `λ(A + B) − λ(A) ≺ λ(B)`.

use crate::error::{Error, Result};
use crate::hermitian::{eigh, HermitianMatrix, Spectrum};
use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::RangeInclusive;

pub const DEFAULT_SCAN_CAP: usize = 14;

/// Strictly increasing 1-based indices `1 ≤ i_1 < … < i_k ≤ n`, with
/// `1 ≤ k ≤ n − 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct IndexSet {
    n: usize,
    indices: Vec<usize>,
}

impl IndexSet {
    pub fn new(n: usize, indices: Vec<usize>) -> Result<Self> {
        validate_selection(n, &indices)?;
        if indices.len() >= n {
            return Err(Error::InvalidIndexSet(format!(
                "k = {} must be at most n − 1 = {}",
                indices.len(),
                n.saturating_sub(1)
            )));
        }
        Ok(Self { n, indices })
    }

    /// Parses a comma separated list such as `"1,3"`.
    pub fn parse(n: usize, text: &str) -> Result<Self> {
        let indices = text
            .split(',')
            .map(|t| t.trim())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| Error::InvalidIndexSet(format!("not an index: {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, indices)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// 0-based positions.
    pub fn positions(&self) -> Vec<usize> {
        self.indices.iter().map(|i| i - 1).collect()
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.indices.iter().join(","))
    }
}

/// Checks a strictly increasing 1-based selection of curves, allowing the
/// full set `[n]`.
pub fn validate_selection(n: usize, indices: &[usize]) -> Result<()> {
    if indices.is_empty() {
        return Err(Error::InvalidIndexSet("empty index set".into()));
    }
    for &i in indices {
        if i == 0 || i > n {
            return Err(Error::IndexOutOfRange { index: i, max: n });
        }
    }
    if indices.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidIndexSet(format!(
            "indices must be strictly increasing: {indices:?}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Equality,
    Violated,
}

impl Verdict {
    pub fn from_slack(slack: f64, tol: f64) -> Self {
        if slack.abs() <= tol {
            Verdict::Equality
        } else if slack < -tol {
            Verdict::Violated
        } else {
            Verdict::Holds
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Equality => "equality",
            Verdict::Violated => "violated",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub indices: Vec<usize>,
    /// `Σ_j λ_{i_j}(A + B)`
    pub lhs: f64,
    /// `Σ_j λ_{i_j}(A) + Σ_{j ≤ k} λ_j(B)`
    pub rhs: f64,
    pub slack: f64,
    pub verdict: Verdict,
}

/// The three spectra every Wielandt check needs.
#[derive(Debug, Clone)]
pub struct PairSpectra {
    pub a: Spectrum,
    pub b: Spectrum,
    pub sum: Spectrum,
}

impl PairSpectra {
    pub fn new(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<Self> {
        a.check_same_dim(b)?;
        Ok(Self {
            a: eigh(a)?.spectrum,
            b: eigh(b)?.spectrum,
            sum: eigh(&a.add(b))?.spectrum,
        })
    }

    pub fn report(&self, indices: &[usize], tol: f64) -> InequalityReport {
        let k = indices.len();
        let lhs: f64 = indices.iter().map(|&i| self.sum.lambda(i)).sum();
        let rhs: f64 = indices.iter().map(|&i| self.a.lambda(i)).sum::<f64>() + self.b.top_k_sum(k);
        let slack = rhs - lhs;
        InequalityReport {
            indices: indices.to_vec(),
            lhs,
            rhs,
            slack,
            verdict: Verdict::from_slack(slack, tol),
        }
    }
}

pub fn wielandt_check(a: &HermitianMatrix, b: &HermitianMatrix, s: &IndexSet, tol: f64) -> Result<InequalityReport> {
    if s.n() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: s.n(),
        });
    }
    Ok(PairSpectra::new(a, b)?.report(s.indices(), tol))
}

/// One report per index set with `k` in `k_range` (default `1..=n−1`),
/// sorted by slack ascending; ties keep lexicographic order.
pub fn wielandt_scan(
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    k_range: Option<RangeInclusive<usize>>,
    tol: f64,
    cap: usize,
) -> Result<Vec<InequalityReport>> {
    let n = a.dim();
    if n > cap {
        return Err(Error::ScanTooLarge { n, cap });
    }
    let spectra = PairSpectra::new(a, b)?;
    let range = k_range.unwrap_or(1..=n.saturating_sub(1));
    let lo = (*range.start()).max(1);
    let hi = (*range.end()).min(n.saturating_sub(1));
    let sets: Vec<Vec<usize>> = (lo..=hi).flat_map(|k| (1..=n).combinations(k)).collect();
    let mut reports: Vec<InequalityReport> = sets.par_iter().map(|s| spectra.report(s, tol)).collect();
    reports.sort_by(|x, y| x.slack.total_cmp(&y.slack));
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorizationReport {
    pub holds: bool,
    /// `Σ_{i ≤ k} y↓_i − Σ_{i ≤ k} x↓_i` for `k = 1..n`.
    pub margins: Vec<f64>,
    /// `Σ y − Σ x`.
    pub total_difference: f64,
}

impl MajorizationReport {
    pub fn min_margin(&self) -> f64 {
        self.margins.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Whether `x ≺ y`: descending prefix sums of `x` never exceed those of `y`
/// (by more than `tol`) and the totals agree within `tol`.
pub fn majorizes(x: &[f64], y: &[f64], tol: f64) -> Result<MajorizationReport> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let desc = |v: &[f64]| {
        let mut v = v.to_vec();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    };
    let (xs, ys) = (desc(x), desc(y));
    let mut px = 0.0;
    let mut py = 0.0;
    let mut margins = Vec::with_capacity(xs.len());
    for (a, b) in xs.iter().zip(&ys) {
        px += a;
        py += b;
        margins.push(py - px);
    }
    let total_difference = ys.iter().sum::<f64>() - xs.iter().sum::<f64>();
    let holds = margins.iter().all(|&m| m >= -tol) && total_difference.abs() <= tol;
    Ok(MajorizationReport {
        holds,
        margins,
        total_difference,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LidskiiReport {
    /// `λ(A + B) − λ(A)`, componentwise on the sorted spectra.
    pub difference: Vec<f64>,
    pub spectrum_b: Vec<f64>,
    pub majorization: MajorizationReport,
}

pub fn lidskii_check(a: &HermitianMatrix, b: &HermitianMatrix, tol: f64) -> Result<LidskiiReport> {
    lidskii_from_spectra(&PairSpectra::new(a, b)?, tol)
}

pub fn lidskii_from_spectra(s: &PairSpectra, tol: f64) -> Result<LidskiiReport> {
    let difference: Vec<f64> = s.sum.values().iter().zip(s.a.values()).map(|(x, y)| x - y).collect();
    let majorization = majorizes(&difference, s.b.values(), tol)?;
    Ok(LidskiiReport {
        difference,
        spectrum_b: s.b.values().to_vec(),
        majorization,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn section4() -> (HermitianMatrix, HermitianMatrix) {
        (
            HermitianMatrix::from_real_diagonal(&[3.0, 1.0, 1.0]),
            HermitianMatrix::from_real_diagonal(&[0.0, 2.0, 1.0]),
        )
    }

    #[test]
    fn index_set_validation() {
        assert!(IndexSet::new(3, vec![1, 3]).is_ok());
        assert!(IndexSet::new(3, vec![1, 2, 3]).is_err());
        assert!(IndexSet::new(3, vec![2, 1]).is_err());
        assert!(IndexSet::new(3, vec![0]).is_err());
        assert!(IndexSet::new(3, vec![4]).is_err());
        assert!(IndexSet::new(3, vec![]).is_err());
        assert_eq!(IndexSet::parse(4, " 1, 3 ").unwrap().indices(), &[1, 3]);
        assert!(IndexSet::parse(4, "1,x").is_err());
    }

    #[test]
    fn section4_strict() {
        let (a, b) = section4();
        let r = wielandt_check(&a, &b, &IndexSet::new(3, vec![3]).unwrap(), 1e-10).unwrap();
        assert_eq!(r.lhs, 2.0);
        assert_eq!(r.rhs, 3.0);
        assert_eq!(r.slack, 1.0);
        assert_eq!(r.verdict, Verdict::Holds);
    }

    #[test]
    fn zero_perturbation_is_equality() {
        let a = crate::random::random_hermitian(4, 2, None).unwrap();
        let z = HermitianMatrix::zeros(4);
        for s in [vec![1], vec![2, 4], vec![1, 2, 3]] {
            let r = wielandt_check(&a, &z, &IndexSet::new(4, s).unwrap(), 1e-10).unwrap();
            assert!(r.slack.abs() < 1e-12);
            assert_eq!(r.verdict, Verdict::Equality);
        }
    }

    #[test]
    fn scan_counts_and_aligned_equalities() {
        let a = HermitianMatrix::from_real_diagonal(&[3.0, 2.0, 1.0]);
        let reports = wielandt_scan(&a, &a, None, 1e-10, DEFAULT_SCAN_CAP).unwrap();
        assert_eq!(reports.len(), 6);
        let zero: Vec<_> = reports.iter().filter(|r| r.slack.abs() < 1e-12).map(|r| r.indices.clone()).collect();
        assert!(zero.contains(&vec![1]));
        assert!(zero.contains(&vec![1, 2]));
        assert!(reports.windows(2).all(|w| w[0].slack <= w[1].slack));
    }

    #[test]
    fn scan_cap() {
        let a = HermitianMatrix::identity(20);
        assert_eq!(
            wielandt_scan(&a, &a, None, 1e-10, DEFAULT_SCAN_CAP).unwrap_err(),
            Error::ScanTooLarge { n: 20, cap: 14 }
        );
    }

    #[test]
    fn majorization_examples() {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        assert!(majorizes(&[g, -g], &[1.0, -1.0], 1e-12).unwrap().holds);
        assert!(majorizes(&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0], 0.0).unwrap().holds);
        let r = majorizes(&[2.0, -2.0], &[1.0, -1.0], 1e-12).unwrap();
        assert!(!r.holds);
        assert_eq!(r.margins[0], -1.0);
        assert!(!majorizes(&[1.0, 0.0], &[1.0, 1.0], 1e-12).unwrap().holds);
        assert!(majorizes(&[1.0], &[1.0, 2.0], 0.0).is_err());
    }

    #[test]
    fn lidskii_golden_ratio() {
        let a = HermitianMatrix::from_real_diagonal(&[1.0, 0.0]);
        let b = HermitianMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let r = lidskii_check(&a, &b, 1e-12).unwrap();
        let g = (5f64.sqrt() - 1.0) / 2.0;
        assert!((r.difference[0] - g).abs() < 1e-14);
        assert!((r.difference[1] + g).abs() < 1e-14);
        assert!(r.majorization.holds);
    }

    #[test]
    fn lidskii_scalar_shift_is_tight() {
        let a = crate::random::random_hermitian(5, 4, None).unwrap();
        let b = HermitianMatrix::identity(5).scale(0.7);
        let r = lidskii_check(&a, &b, 1e-10).unwrap();
        assert!(r.majorization.holds);
        assert!(r.difference.iter().all(|d| (d - 0.7).abs() < 1e-12));
        assert!(r.majorization.margins.iter().all(|m| m.abs() < 1e-12));
    }
}
