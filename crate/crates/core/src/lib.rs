//! Numerical toolkit for Wielandt's eigenvalue inequality on Hermitian
//! matrices.
//!
//! - [`hermitian`]: Hermitian matrices, deterministic eigen-decomposition,
//!   spectral clusters, frames, compressions and Ky Fan sums.
//! - [`perturbation`]: first-order rates `ν_j(A, B)` of the pencil `A + zB`.
//! - [`pencil`]: ordered eigenvalue curves of `A + tB`, crossings, one-sided
//!   derivatives and the integral of `φ'`.
//! - [`inequalities`]: Wielandt and Lidskii checks.
//! - [`equality`]: the equality case, condition checks and certificates.

pub mod dense;
pub mod equality;
pub mod error;
pub mod hermitian;
pub mod inequalities;
pub mod io;
mod jacobi;
pub mod matching;
pub mod pencil;
pub mod perturbation;
pub mod random;
pub mod tolerance;

pub use error::{Error, Result};
pub use hermitian::{
    cluster_spectrum, eigh, frame_compression, invariant_residual, ky_fan_sum, top_k_spectral_structure,
    ClusterStructure, EigenDecomposition, HermitianMatrix, OrthonormalFrame, Spectrum,
};
pub use inequalities::{IndexSet, InequalityReport, Verdict};
pub use tolerance::Tolerances;
