//! First-order eigenvalue rates of the pencil `A + zB` at `z = 0`.
//!
//! For each cluster of equal eigenvalues of A with eigenvectors
//! `u_{m+1}, …, u_{m+s}`, the rates on that index range are the eigenvalues
//! (non-increasing) of the compression `[u_j^* B u_l]`. Rotating the
//! cluster's eigenvectors by the compression's eigenvectors yields an
//! adapted eigenbasis of A with `ν_j = u_j^* B u_j`.

use crate::dense::CMatrix;
use crate::error::Result;
use crate::hermitian::{
    apply_phase_convention, cluster_spectrum, eigh, frame_compression, ClusterStructure, HermitianMatrix,
    OrthonormalFrame, Spectrum,
};

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationRates {
    /// `ν_j(A, B)`, non-increasing within each cluster of A.
    pub nu: Vec<f64>,
    pub spectrum: Spectrum,
    pub clusters: ClusterStructure,
    /// Eigenvectors of A with `ν_j = u_j^* B u_j`.
    pub adapted_frame: OrthonormalFrame,
}

impl PerturbationRates {
    /// `ν` sorted non-increasing across all clusters.
    pub fn sorted_nu(&self) -> Vec<f64> {
        let mut v = self.nu.clone();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }
}

pub fn first_order_rates(a: &HermitianMatrix, b: &HermitianMatrix, tol_cluster: f64) -> Result<PerturbationRates> {
    a.check_same_dim(b)?;
    let n = a.dim();
    let eig = eigh(a)?;
    let clusters = cluster_spectrum(&eig.spectrum, tol_cluster);
    let mut nu = vec![0.0; n];
    let mut adapted = CMatrix::zeros(n, n);
    for c in 0..clusters.len() {
        let r = clusters.range(c);
        let block = eig.frame.range(r.clone());
        let comp = eigh(&frame_compression(b, &block)?)?;
        let rotated = block.matrix().matmul(comp.frame.matrix());
        for (offset, slot) in r.enumerate() {
            nu[slot] = comp.spectrum.values()[offset];
            let mut v = rotated.column(offset);
            apply_phase_convention(&mut v);
            adapted.set_column(slot, &v);
        }
    }
    Ok(PerturbationRates {
        nu,
        spectrum: eig.spectrum,
        clusters,
        adapted_frame: OrthonormalFrame::from_matrix_unchecked(adapted),
    })
}

/// Largest deviation between the rates and one-sided difference quotients
/// `(λ_j(A + hB) − λ_j(A)) / h`, the quotients sorted non-increasing
/// within each cluster of A.
pub fn rate_consistency_check(a: &HermitianMatrix, b: &HermitianMatrix, h: f64, tol_cluster: f64) -> Result<f64> {
    let rates = first_order_rates(a, b, tol_cluster)?;
    let shifted = eigh(&a.pencil_at(b, h))?;
    let base = rates.spectrum.values();
    let mut quotients: Vec<f64> = shifted
        .spectrum
        .values()
        .iter()
        .zip(base)
        .map(|(x, y)| (x - y) / h)
        .collect();
    for c in 0..rates.clusters.len() {
        quotients[rates.clusters.range(c)].sort_by(|x, y| y.total_cmp(x));
    }
    Ok(quotients
        .iter()
        .zip(&rates.nu)
        .map(|(q, nu)| (q - nu).abs())
        .fold(0.0, f64::max))
}
