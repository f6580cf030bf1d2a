//! Cyclic complex Jacobi eigenvalue iteration for Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot `a_pq` with a
//! diagonal unitary, then applies a real Givens rotation that zeroes it.
//! Jacobi is slow for large n but accurate to high relative precision and
//! fully deterministic, which is what the golden tests rely on.

use crate::dense::{CMatrix, ZERO};
use crate::error::{Error, Result};
use num_complex::Complex64;

const MAX_SWEEPS: usize = 80;

/// Raw eigen-decomposition: eigenvalues in the solver's own order and the
/// matching eigenvectors as columns. Callers sort and canonicalize.
pub(crate) fn jacobi_eigen(input: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = input.rows();
    let mut a = input.clone();
    let mut v = CMatrix::identity(n);
    for i in 0..n {
        a[(i, i)] = Complex64::new(a[(i, i)].re, 0.0);
    }
    let scale = a.frobenius_norm();
    if n == 1 || scale == 0.0 {
        return Ok(((0..n).map(|i| a[(i, i)].re).collect(), v));
    }
    let target = f64::EPSILON * scale * 0.5;

    for sweep in 0..MAX_SWEEPS {
        let off = off_diagonal_norm(&a);
        if off <= target {
            return Ok(((0..n).map(|i| a[(i, i)].re).collect(), v));
        }
        // Skip negligible pivots after the first few sweeps, as in the
        // classical threshold Jacobi.
        let threshold = if sweep < 3 { 0.2 * off / (n * n) as f64 } else { 0.0 };
        for p in 0..n - 1 {
            for q in p + 1..n {
                let b = a[(p, q)];
                let g = b.norm();
                if g == 0.0 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                if sweep > 3 && g <= f64::EPSILON * 0.5 * (app.abs().min(aqq.abs())) {
                    a[(p, q)] = ZERO;
                    a[(q, p)] = ZERO;
                    continue;
                }
                if g <= threshold {
                    continue;
                }
                rotate(&mut a, &mut v, p, q, b, g, app, aqq);
            }
        }
    }
    Err(Error::ConvergenceFailure {
        sweeps: MAX_SWEEPS,
        off_norm: off_diagonal_norm(&a),
    })
}

fn off_diagonal_norm(a: &CMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

#[allow(clippy::too_many_arguments)]
fn rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize, b: Complex64, g: f64, app: f64, aqq: f64) {
    let n = a.rows();
    let phase = b / g; // e^{i phi}
    let theta = (aqq - app) / (2.0 * g);
    let t = if theta == 0.0 {
        1.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // G = diag(1, e^{-i phi}) * [[c, s], [-s, c]] acting on columns p, q.
    let gpp = Complex64::new(c, 0.0);
    let gpq = Complex64::new(s, 0.0);
    let gqp = -phase.conj() * s;
    let gqq = phase.conj() * c;

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * gpp + akq * gqp;
        a[(k, q)] = akp * gpq + akq * gqq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = gpp.conj() * apk + gqp.conj() * aqk;
        a[(q, k)] = gpq.conj() * apk + gqq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = Complex64::new(app - t * g, 0.0);
    a[(q, q)] = Complex64::new(aqq + t * g, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * gpp + vkq * gqp;
        v[(k, q)] = vkp * gpq + vkq * gqq;
    }
}
