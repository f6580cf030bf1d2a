//! Hermitian matrices, ordered spectra, eigenvalue clusters and
//! orthonormal frames.
//!
//! Eigenvalues are always reported in non-increasing order
//! `λ_1 ≥ … ≥ λ_n`, and indices in the public API are 1-based where they
//! name eigenvalue positions (`λ_{i_j}`), 0-based where they index Rust
//! slices.

use crate::dense::{self, CMatrix, ZERO};
use crate::error::{Error, Result};
use crate::jacobi::jacobi_eigen;
use num_complex::Complex64;
use std::ops::Range;

/// Relative eigenvalue separation below which `eigh` treats eigenvectors
/// as spanning one degenerate subspace and canonicalizes its basis.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Dense `n × n` complex matrix equal to its conjugate transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    inner: CMatrix,
}

impl HermitianMatrix {
    /// Checks `raw` for hermiticity and returns its symmetrization
    /// `(M + M^*) / 2`. Deviation is measured entrywise (max-abs).
    pub fn validate(raw: &[Vec<Complex64>], tol: f64) -> Result<Self> {
        let n = raw.len();
        if n == 0 {
            return Err(Error::Empty);
        }
        for (row, r) in raw.iter().enumerate() {
            if r.len() != n {
                return Err(Error::NotSquare {
                    row,
                    len: r.len(),
                    expected: n,
                });
            }
        }
        Self::from_matrix(CMatrix::from_fn(n, n, |i, j| raw[i][j]), tol)
    }

    pub fn from_matrix(m: CMatrix, tol: f64) -> Result<Self> {
        let n = m.rows();
        if n == 0 {
            return Err(Error::Empty);
        }
        if m.cols() != n {
            return Err(Error::NotSquare {
                row: 0,
                len: m.cols(),
                expected: n,
            });
        }
        let mut worst = (0, 0, 0.0f64);
        for i in 0..n {
            for j in i..n {
                let dev = (m[(i, j)] - m[(j, i)].conj()).norm();
                if dev > worst.2 || dev.is_nan() {
                    worst = (i, j, dev);
                }
            }
        }
        if !(worst.2 <= tol) {
            return Err(Error::NotHermitian {
                row: worst.0,
                col: worst.1,
                deviation: worst.2,
                tol,
            });
        }
        Ok(Self::symmetrized(m))
    }

    /// `(M + M^*) / 2` without checking how far `M` was from hermitian.
    pub(crate) fn symmetrized(m: CMatrix) -> Self {
        let n = m.rows();
        let inner = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(m[(i, i)].re, 0.0)
            } else {
                (m[(i, j)] + m[(j, i)].conj()) * 0.5
            }
        });
        Self { inner }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        assert!(!diag.is_empty(), "empty diagonal");
        Self {
            inner: CMatrix::from_real_diagonal(diag),
        }
    }

    /// Real symmetric matrix from rows; panics if not symmetric. Test helper.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Self {
        let raw: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::validate(&raw, 0.0).expect("real rows must be symmetric")
    }

    pub fn identity(n: usize) -> Self {
        Self::from_real_diagonal(&vec![1.0; n])
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_real_diagonal(&vec![0.0; n])
    }

    pub fn dim(&self) -> usize {
        self.inner.rows()
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.inner[(i, j)]
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.inner
    }

    pub fn to_rows(&self) -> Vec<Vec<Complex64>> {
        let n = self.dim();
        (0..n).map(|i| (0..n).map(|j| self.inner[(i, j)]).collect()).collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::symmetrized(self.inner.add(&other.inner))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::symmetrized(self.inner.scale(Complex64::new(s, 0.0)))
    }

    /// `self + t * direction`, the pencil `A(t) = A + tB` at a real `t`.
    pub fn pencil_at(&self, direction: &Self, t: f64) -> Self {
        Self::symmetrized(self.inner.add_scaled(t, &direction.inner))
    }

    /// `self + c I`.
    pub fn shift(&self, c: f64) -> Self {
        let mut m = self.inner.clone();
        for i in 0..self.dim() {
            m[(i, i)] += Complex64::new(c, 0.0);
        }
        Self::symmetrized(m)
    }

    /// `Q M Q^*` for a square `Q` of matching size.
    pub fn conjugate_by(&self, q: &CMatrix) -> Self {
        Self::symmetrized(q.matmul(&self.inner).matmul(&q.adjoint()))
    }

    pub fn trace(&self) -> f64 {
        self.inner.trace().re
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.frobenius_norm()
    }

    pub(crate) fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

/// Eigenvalues in non-increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
}

impl Spectrum {
    /// Sorts `values` into non-increasing order.
    pub fn from_unsorted(mut values: Vec<f64>) -> Self {
        values.sort_by(|a, b| b.total_cmp(a));
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `λ_i`, 1-based.
    pub fn lambda(&self, i: usize) -> f64 {
        self.values[i - 1]
    }

    pub fn top_k_sum(&self, k: usize) -> f64 {
        self.values[..k].iter().sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Partition of the ordered spectrum into runs of (numerically) equal
/// eigenvalues: `boundaries = (m_0 = 0, m_1, …, m_l = n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterStructure {
    boundaries: Vec<usize>,
    values: Vec<f64>,
}

impl ClusterStructure {
    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.boundaries.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Representative (mean) eigenvalue per cluster.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        *self.boundaries.last().unwrap_or(&0)
    }

    /// 0-based positions covered by cluster `c`.
    pub fn range(&self, c: usize) -> Range<usize> {
        self.boundaries[c]..self.boundaries[c + 1]
    }

    /// Cluster containing the 0-based position `pos`.
    pub fn cluster_of(&self, pos: usize) -> usize {
        debug_assert!(pos < self.dim());
        self.boundaries.partition_point(|&b| b <= pos) - 1
    }

    pub fn same_cluster(&self, a: usize, b: usize) -> bool {
        self.cluster_of(a) == self.cluster_of(b)
    }
}

/// Merges adjacent eigenvalues whose gap is at most
/// `tol_cluster · (1 + max|λ|)`.
pub fn cluster_spectrum(s: &Spectrum, tol_cluster: f64) -> ClusterStructure {
    let vals = s.values();
    let threshold = tol_cluster * (1.0 + s.max_abs());
    let mut boundaries = vec![0];
    for i in 1..vals.len() {
        if vals[i - 1] - vals[i] > threshold {
            boundaries.push(i);
        }
    }
    boundaries.push(vals.len());
    let values = boundaries
        .windows(2)
        .map(|w| vals[w[0]..w[1]].iter().sum::<f64>() / (w[1] - w[0]) as f64)
        .collect();
    ClusterStructure { boundaries, values }
}

/// `k` orthonormal vectors in `C^n`, stored as the columns of an `n × k`
/// matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalFrame {
    vectors: CMatrix,
}

impl OrthonormalFrame {
    pub const DEFAULT_TOL: f64 = 1e-10;

    pub fn new(vectors: CMatrix, tol: f64) -> Result<Self> {
        if vectors.cols() == 0 || vectors.cols() > vectors.rows() {
            return Err(Error::InvalidArgument(format!(
                "frame of {} vectors in dimension {}",
                vectors.cols(),
                vectors.rows()
            )));
        }
        let (i, j, deviation) = vectors.orthonormality_defect();
        if !(deviation <= tol) {
            return Err(Error::NotOrthonormal { i, j, deviation });
        }
        Ok(Self { vectors })
    }

    pub fn from_columns(n: usize, columns: &[Vec<Complex64>], tol: f64) -> Result<Self> {
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: columns.iter().map(Vec::len).find(|&l| l != n).unwrap_or(n),
            });
        }
        Self::new(CMatrix::from_columns(n, columns), tol)
    }

    pub(crate) fn from_matrix_unchecked(vectors: CMatrix) -> Self {
        debug_assert!(vectors.orthonormality_defect().2 < 1e-8);
        Self { vectors }
    }

    /// Standard basis vectors `e_i` for the given 1-based indices.
    pub fn coordinate(n: usize, indices: &[usize]) -> Self {
        let m = CMatrix::from_fn(n, indices.len(), |i, j| {
            if i + 1 == indices[j] {
                dense::ONE
            } else {
                ZERO
            }
        });
        Self { vectors: m }
    }

    pub fn ambient_dim(&self) -> usize {
        self.vectors.rows()
    }

    pub fn len(&self) -> usize {
        self.vectors.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.cols() == 0
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.vectors
    }

    pub fn vector(&self, j: usize) -> Vec<Complex64> {
        self.vectors.column(j)
    }

    /// Sub-frame of the given 0-based columns.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            vectors: self.vectors.select_columns(idx),
        }
    }

    pub fn range(&self, r: Range<usize>) -> Self {
        Self {
            vectors: self.vectors.column_range(r.start, r.end),
        }
    }

    /// Concatenation of two mutually orthogonal frames.
    pub fn join(&self, other: &Self) -> Self {
        Self {
            vectors: self.vectors.hcat(&other.vectors),
        }
    }

    /// Cosines of the principal angles with `other`, in non-increasing
    /// order (the singular values of `U^* V`).
    pub fn principal_cosines(&self, other: &Self) -> Vec<f64> {
        let m = self.vectors.adjoint_mul(&other.vectors);
        let gram = if m.rows() <= m.cols() {
            m.matmul(&m.adjoint())
        } else {
            m.adjoint().matmul(&m)
        };
        let (vals, _) = jacobi_eigen(&gram).expect("small gram matrix");
        let mut cos: Vec<f64> = vals.into_iter().map(|v| v.max(0.0).sqrt().min(1.0)).collect();
        cos.sort_by(|a, b| b.total_cmp(a));
        cos
    }

    /// Sine of the largest principal angle between the two spans; 1 when
    /// the dimensions differ.
    pub fn subspace_distance(&self, other: &Self) -> f64 {
        if self.len() != other.len() || self.ambient_dim() != other.ambient_dim() {
            return 1.0;
        }
        // Largest singular value of (I − P_U) V, computed directly so small
        // angles keep full precision.
        let u = &self.vectors;
        let v = &other.vectors;
        let r = v.sub(&u.matmul(&u.adjoint_mul(v)));
        let (vals, _) = jacobi_eigen(&r.adjoint_mul(&r)).expect("small gram matrix");
        vals.into_iter().fold(0.0f64, f64::max).max(0.0).sqrt().min(1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub spectrum: Spectrum,
    /// `frame.vector(i)` is the eigenvector for `spectrum.values()[i]`.
    pub frame: OrthonormalFrame,
}

impl EigenDecomposition {
    pub fn max_residual(&self, a: &HermitianMatrix) -> f64 {
        let av = a.as_matrix().matmul(self.frame.matrix());
        let v = self.frame.matrix();
        let mut worst: f64 = 0.0;
        for (j, &lam) in self.spectrum.values().iter().enumerate() {
            let r: f64 = (0..v.rows())
                .map(|i| (av[(i, j)] - v[(i, j)] * lam).norm_sqr())
                .sum::<f64>()
                .sqrt();
            worst = worst.max(r);
        }
        worst
    }
}

/// Eigen-decomposition with deterministic post-processing: values sorted
/// non-increasing; bases of numerically degenerate eigenspaces replaced by
/// a canonical basis (pivoted projection of the standard basis), ordered by
/// the position of each vector's largest entry; every vector rotated so
/// its largest entry is real and non-negative.
pub fn eigh(a: &HermitianMatrix) -> Result<EigenDecomposition> {
    let n = a.dim();
    let (vals, vecs) = jacobi_eigen(a.as_matrix())?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[j].total_cmp(&vals[i]).then(i.cmp(&j)));
    let spectrum = Spectrum {
        values: order.iter().map(|&i| vals[i]).collect(),
    };
    let mut columns: Vec<Vec<Complex64>> = order.iter().map(|&i| vecs.column(i)).collect();

    let clusters = cluster_spectrum(&spectrum, DEGENERACY_TOL);
    for c in 0..clusters.len() {
        let r = clusters.range(c);
        if r.len() > 1 {
            let canon = canonical_basis(&columns[r.clone()], n);
            for (slot, v) in r.zip(canon) {
                columns[slot] = v;
            }
        }
    }
    for v in &mut columns {
        apply_phase_convention(v);
    }
    Ok(EigenDecomposition {
        spectrum,
        frame: OrthonormalFrame {
            vectors: CMatrix::from_columns(n, &columns),
        },
    })
}

/// Index of the largest-magnitude entry; near-ties go to the lowest index.
pub(crate) fn dominant_index(v: &[Complex64]) -> usize {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let cutoff = max * (1.0 - 1e-9);
    v.iter().position(|z| z.norm() >= cutoff).unwrap_or(0)
}

/// Rotates `v` so that its dominant entry is real and non-negative.
pub(crate) fn apply_phase_convention(v: &mut [Complex64]) {
    let idx = dominant_index(v);
    let z = v[idx];
    let r = z.norm();
    if r > 0.0 {
        let phase = z.conj() / r;
        v.iter_mut().for_each(|x| *x *= phase);
        v[idx] = Complex64::new(v[idx].norm(), 0.0);
    }
}

/// Basis of span(`basis`) that depends only on the subspace: repeatedly
/// take the standard basis vector with the largest remaining projection.
pub(crate) fn canonical_basis(basis: &[Vec<Complex64>], n: usize) -> Vec<Vec<Complex64>> {
    let m = basis.len();
    let v = CMatrix::from_columns(n, basis);
    // Columns of P = V V^*.
    let p = v.matmul(&v.adjoint());
    let mut cols: Vec<Vec<Complex64>> = (0..n).map(|j| p.column(j)).collect();
    let mut out: Vec<Vec<Complex64>> = Vec::with_capacity(m);
    for _ in 0..m {
        let norms: Vec<f64> = cols.iter().map(|c| dense::norm(c)).collect();
        let max = norms.iter().cloned().fold(0.0, f64::max);
        if max <= 1e-12 {
            break;
        }
        let pick = norms.iter().position(|&x| x >= max * (1.0 - 1e-9)).unwrap();
        let mut q = cols[pick].clone();
        let r = dense::norm(&q);
        q.iter_mut().for_each(|x| *x /= r);
        for c in cols.iter_mut() {
            let coef = dense::dot(&q, c);
            for (x, y) in c.iter_mut().zip(&q) {
                *x -= coef * y;
            }
        }
        out.push(q);
    }
    // Guard against losing rank to round-off.
    let mut out = dense::gram_schmidt(&out, 1e-6);
    if out.len() < m {
        out = dense::gram_schmidt(basis, 1e-12);
    }
    out.sort_by_key(|v| dominant_index(v));
    out
}

/// `Σ_{i ≤ k} λ_i(A)`.
pub fn ky_fan_sum(a: &HermitianMatrix, k: usize) -> Result<f64> {
    let n = a.dim();
    if k == 0 || k > n {
        return Err(Error::IndexOutOfRange { index: k, max: n });
    }
    Ok(eigh(a)?.spectrum.top_k_sum(k))
}

fn check_frame_dim(m: &HermitianMatrix, f: &OrthonormalFrame) -> Result<()> {
    if f.ambient_dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            found: f.ambient_dim(),
        });
    }
    Ok(())
}

/// The `k × k` matrix `F^* M F`.
pub fn frame_compression(m: &HermitianMatrix, f: &OrthonormalFrame) -> Result<HermitianMatrix> {
    check_frame_dim(m, f)?;
    let c = f.matrix().adjoint_mul(&m.as_matrix().matmul(f.matrix()));
    Ok(HermitianMatrix::symmetrized(c))
}

/// `‖(I − P_F) M P_F‖_F`, zero exactly when span(F) is M-invariant.
pub fn invariant_residual(m: &HermitianMatrix, f: &OrthonormalFrame) -> Result<f64> {
    check_frame_dim(m, f)?;
    let mf = m.as_matrix().matmul(f.matrix());
    let c = f.matrix().adjoint_mul(&mf);
    Ok(mf.sub(&f.matrix().matmul(&c)).frobenius_norm())
}

/// Decomposition of the "top-k invariant subspaces" of B: any such
/// subspace is `forced ⊕ G` with `G` a `deficiency`-dimensional subspace
/// of span(`free`).
#[derive(Debug, Clone, PartialEq)]
pub struct TopKStructure {
    pub k: usize,
    /// Eigenvectors of clusters strictly above the cluster of `λ_k(B)`, or
    /// of everything through position k when the cluster ends at k.
    pub forced: Option<OrthonormalFrame>,
    /// Eigenspace of the cluster containing `λ_k(B)` when it straddles k.
    pub free: Option<OrthonormalFrame>,
    pub deficiency: usize,
    pub clusters: ClusterStructure,
    pub spectrum: Spectrum,
}

pub fn top_k_spectral_structure(b: &HermitianMatrix, k: usize, tol_cluster: f64) -> Result<TopKStructure> {
    let n = b.dim();
    if k == 0 || k >= n {
        return Err(Error::IndexOutOfRange { index: k, max: n.saturating_sub(1) });
    }
    let eig = eigh(b)?;
    let clusters = cluster_spectrum(&eig.spectrum, tol_cluster);
    let c = clusters.cluster_of(k - 1);
    let r = clusters.range(c);
    let (forced_end, free) = if r.end == k {
        (k, None)
    } else {
        (r.start, Some(eig.frame.range(r.clone())))
    };
    let forced = (forced_end > 0).then(|| eig.frame.range(0..forced_end));
    Ok(TopKStructure {
        k,
        forced,
        free,
        deficiency: k - forced_end,
        clusters,
        spectrum: eig.spectrum,
    })
}
