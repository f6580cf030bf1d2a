//! Matrix JSON format shared by every command:
//!
//! ```json
//! { "n": 2, "entries": [[2, [0, 1]], [[0, -1], 3]] }
//! ```
//!
//! An entry is either a bare real or a `[re, im]` pair.

use crate::error::{Error, Result};
use crate::hermitian::{HermitianMatrix, OrthonormalFrame};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Real(f64),
    Complex([f64; 2]),
}

impl From<Scalar> for Complex64 {
    fn from(s: Scalar) -> Self {
        match s {
            Scalar::Real(x) => Complex64::new(x, 0.0),
            Scalar::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

impl From<Complex64> for Scalar {
    fn from(z: Complex64) -> Self {
        if z.im == 0.0 {
            Scalar::Real(z.re)
        } else {
            Scalar::Complex([z.re, z.im])
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub n: usize,
    pub entries: Vec<Vec<Scalar>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &HermitianMatrix) -> Self {
        Self {
            n: m.dim(),
            entries: m
                .to_rows()
                .into_iter()
                .map(|r| r.into_iter().map(Scalar::from).collect())
                .collect(),
        }
    }

    pub fn to_hermitian(&self, tol: f64) -> Result<HermitianMatrix> {
        if self.entries.len() != self.n {
            return Err(Error::Parse(format!(
                "\"n\" is {} but {} rows were given",
                self.n,
                self.entries.len()
            )));
        }
        let raw: Vec<Vec<Complex64>> = self
            .entries
            .iter()
            .map(|r| r.iter().map(|&s| s.into()).collect())
            .collect();
        HermitianMatrix::validate(&raw, tol)
    }
}

pub fn parse_matrix(text: &str, tol: f64) -> Result<HermitianMatrix> {
    let m: MatrixJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    m.to_hermitian(tol)
}

pub fn matrix_to_json(m: &HermitianMatrix) -> String {
    serde_json::to_string_pretty(&MatrixJson::from_matrix(m)).expect("matrix serializes")
}

/// Complex vectors as lists of `[re, im]` pairs.
pub fn vector_to_pairs(v: &[Complex64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn pairs_to_vector(p: &[[f64; 2]]) -> Vec<Complex64> {
    p.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
}

/// A frame as a list of vectors, each a list of `[re, im]` pairs.
pub fn frame_to_pairs(f: &OrthonormalFrame) -> Vec<Vec<[f64; 2]>> {
    (0..f.len()).map(|j| vector_to_pairs(&f.vector(j))).collect()
}

pub fn frame_from_pairs(vectors: &[Vec<[f64; 2]>], tol: f64) -> Result<OrthonormalFrame> {
    let n = vectors.first().map_or(0, Vec::len);
    let cols: Vec<Vec<Complex64>> = vectors.iter().map(|v| pairs_to_vector(v)).collect();
    OrthonormalFrame::from_columns(n, &cols, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_mixed_entries() {
        let m = parse_matrix(r#"{"n":2,"entries":[[2,[0,1]],[[0,-1],3]]}"#, 1e-12).unwrap();
        assert_eq!(m.entry(0, 1), Complex64::new(0.0, 1.0));
        assert_eq!(m.entry(1, 1), Complex64::new(3.0, 0.0));
    }

    #[test]
    fn rejects_malformed() {
        assert!(matches!(parse_matrix("{\"n\":2,", 1e-12), Err(Error::Parse(_))));
        assert!(matches!(
            parse_matrix(r#"{"n":3,"entries":[[1,0],[0,1]]}"#, 1e-12),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            parse_matrix(r#"{"n":2,"entries":[[0,1],[0,0]]}"#, 1e-12),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn round_trip() {
        let m = crate::random::random_hermitian(4, 11, None).unwrap();
        let back = parse_matrix(&matrix_to_json(&m), 0.0).unwrap();
        assert_eq!(m, back);
    }
}
