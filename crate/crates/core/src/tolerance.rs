use crate::hermitian::HermitianMatrix;
use serde::{Deserialize, Serialize};

/// The named tolerances every check runs against.
///
/// `equality` and `certification` are relative: the absolute band used
/// for a pair `(A, B)` is `tol · (1 + ‖A‖_F + ‖B‖_F)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Max-abs deviation from hermiticity accepted on input.
    pub hermiticity: f64,
    /// Relative gap below which eigenvalues are one cluster.
    pub cluster: f64,
    /// Equality detection band (slack and condition checks).
    pub equality: f64,
    /// Residual band for certificates.
    pub certification: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermiticity: 1e-10,
            cluster: 1e-8,
            equality: 1e-8,
            certification: 1e-8,
        }
    }
}

pub fn pair_scale(a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
    1.0 + a.frobenius_norm() + b.frobenius_norm()
}

impl Tolerances {
    pub fn equality_band(&self, a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
        self.equality * pair_scale(a, b)
    }

    pub fn certification_band(&self, a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
        self.certification * pair_scale(a, b)
    }

    /// Same tolerance for detection and certification.
    pub fn with_equality(mut self, tol: f64) -> Self {
        self.equality = tol;
        self.certification = tol;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("hermiticity", self.hermiticity),
            ("cluster", self.cluster),
            ("equality", self.equality),
            ("certification", self.certification),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} tolerance must be positive and finite, got {v}"));
            }
        }
        Ok(())
    }
}
