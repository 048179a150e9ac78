use faer::{Mat, Side};

use super::{PcgReport, SolverError};

/// The symmetric tridiagonal Lanczos matrix implied by the CG coefficients,
/// as `(diagonal, off-diagonal)`.
pub fn lanczos_tridiagonal(alphas: &[f64], betas: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = alphas.len();
    let diag = (0..m)
        .map(|j| {
            let carry = if j == 0 { 0.0 } else { betas[j - 1] / alphas[j - 1] };
            1.0 / alphas[j] + carry
        })
        .collect();
    let off = (0..m.saturating_sub(1)).map(|j| betas[j].sqrt() / alphas[j]).collect();
    (diag, off)
}

/// `lambda_max / lambda_min` of the Lanczos matrix. A single iteration
/// means the preconditioned operator acted as a multiple of the identity on
/// the Krylov space, and the estimate is `1`.
pub fn condition_estimate(report: &PcgReport) -> Result<f64, SolverError> {
    let m = report.alphas.len();
    if m == 0 {
        return Err(SolverError::TooFewIterations);
    }
    let (diag, off) = lanczos_tridiagonal(&report.alphas, &report.betas[..m - 1]);
    let t = Mat::<f64>::from_fn(m, m, |i, j| {
        if i == j {
            diag[i]
        } else if i == j + 1 {
            off[j]
        } else if j == i + 1 {
            off[i]
        } else {
            0.0
        }
    });
    let eigs = t
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| SolverError::Factorization(format!("{e:?}")))?;
    let lo = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(hi / lo)
}
