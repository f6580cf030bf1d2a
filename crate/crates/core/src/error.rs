use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare {
        row: usize,
        len: usize,
        expected: usize,
    },

    #[error("matrix is empty")]
    Empty,

    #[error("matrix is not hermitian: |M[{row}][{col}] - conj(M[{col}][{row}])| = {deviation:e} exceeds {tol:e}")]
    NotHermitian {
        row: usize,
        col: usize,
        deviation: f64,
        tol: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("invalid index set: {0}")]
    InvalidIndexSet(String),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    ConvergenceFailure { sweeps: usize, off_norm: f64 },

    #[error("eigenvalue list has length {found}, expected {expected}")]
    BadSpec { expected: usize, found: usize },

    #[error("vectors are not orthonormal: |<v{i}, v{j}> - delta| = {deviation:e}")]
    NotOrthonormal { i: usize, j: usize, deviation: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("scan over n = {n} exceeds the configured cap {cap}")]
    ScanTooLarge { n: usize, cap: usize },

    #[error("combinatorial cap exceeded: {needed} candidate completions, cap {cap}")]
    CombinatorialCap { needed: usize, cap: usize },

    #[error("certification failed: {invariant} on segment {segment} at t = {t}: deviation {deviation:e} exceeds {tol:e}")]
    CertificationFailure {
        invariant: String,
        segment: usize,
        t: f64,
        deviation: f64,
        tol: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
