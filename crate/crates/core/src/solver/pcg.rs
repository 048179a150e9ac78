use serde::Serialize;

use super::{Preconditioner, SolverError};
use crate::mesh::{dot, KernelBasis};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy)]
pub struct PcgOptions {
    /// Relative residual target `||r_k|| / ||r_0||`.
    pub tol: f64,
    pub maxit: usize,
    /// Largest accepted `|<f, d>| / ||f||` over the deflation vectors.
    pub compat_tol: f64,
}

impl Default for PcgOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            maxit: 2000,
            compat_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PcgReport {
    pub iterations: usize,
    /// `||r_j|| / ||r_0||`, starting with `1`.
    pub residuals: Vec<f64>,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    /// `<r_j, z_j>` for every preconditioned residual.
    pub rz: Vec<f64>,
    #[serde(skip)]
    pub x: Vec<f64>,
    pub converged: bool,
    /// `||f - A x|| / ||f - A x_0||` recomputed from the final iterate, both
    /// measured on the deflation complement.
    pub true_residual: f64,
    /// Largest `|<r_j, d>| / ||r_j||` over all residuals and deflation
    /// vectors.
    pub deflation_defect: f64,
    pub kappa: Option<f64>,
}

/// Preconditioned CG on the orthogonal complement of `deflation`.
///
/// The load, the initial guess and every residual and preconditioned
/// residual are projected, so the iteration runs with `Q A Q` where `Q` is
/// the Euclidean projector. When the recurrence residual meets `tol` the true
/// residual is recomputed and the run fails if it exceeds `10 tol`.
pub fn pcg(
    a: &CsrMatrix,
    b: &dyn Preconditioner,
    f: &[f64],
    x0: &[f64],
    opts: &PcgOptions,
    deflation: &KernelBasis,
) -> Result<PcgReport, SolverError> {
    let n = a.nrows();
    if a.ncols() != n || b.dim() != n || f.len() != n || x0.len() != n {
        return Err(SolverError::DimensionMismatch(format!(
            "A is {}x{}, B acts on {}, f has {}, x0 has {}",
            a.nrows(),
            a.ncols(),
            b.dim(),
            f.len(),
            x0.len()
        )));
    }
    if !(opts.tol > 0.0 && opts.tol < 1.0) {
        return Err(SolverError::InvalidTolerance(opts.tol));
    }
    let q = deflation.orthonormalized();
    let f_norm = dot(f, f).sqrt();
    if f_norm > 0.0 {
        let defect = q
            .vectors()
            .iter()
            .map(|d| dot(f, d).abs() / f_norm)
            .fold(0.0, f64::max);
        if defect > opts.compat_tol {
            return Err(SolverError::IncompatibleRhs { defect });
        }
    }
    let mut f = f.to_vec();
    q.project_out(&mut f);

    let mut x = x0.to_vec();
    q.project_out(&mut x);
    let residual_of = |x: &[f64]| {
        let ax = a.mul_vec(x);
        let mut r: Vec<f64> = f.iter().zip(&ax).map(|(fi, ai)| fi - ai).collect();
        q.project_out(&mut r);
        r
    };
    let mut r = residual_of(&x);
    let r0 = dot(&r, &r).sqrt();
    let mut report = PcgReport {
        iterations: 0,
        residuals: vec![1.0],
        alphas: Vec::new(),
        betas: Vec::new(),
        rz: Vec::new(),
        x: Vec::new(),
        converged: false,
        true_residual: 0.0,
        deflation_defect: 0.0,
        kappa: None,
    };
    if r0 == 0.0 {
        report.converged = true;
        report.x = x;
        return Ok(report);
    }

    let precondition = |r: &[f64], z: &mut Vec<f64>| {
        b.apply_into(r, z);
        q.project_out(z);
    };
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut rz = dot(&r, &z);
    report.rz.push(rz);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    for j in 0..opts.maxit {
        if rz <= 0.0 {
            return Err(SolverError::BrokenPreconditioner { iteration: j, value: rz });
        }
        a.mul_vec_into(&p, &mut ap);
        q.project_out(&mut ap);
        let pap = dot(&ap, &p);
        if pap <= 0.0 {
            return Err(SolverError::BrokenOperator { iteration: j, value: pap });
        }
        let alpha = rz / pap;
        report.alphas.push(alpha);
        report.iterations = j + 1;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        q.project_out(&mut r);
        let r_norm = dot(&r, &r).sqrt();
        if r_norm > 0.0 {
            for d in q.vectors() {
                report.deflation_defect = report.deflation_defect.max(dot(&r, d).abs() / r_norm);
            }
        }
        let rel = r_norm / r0;
        report.residuals.push(rel);
        if rel < opts.tol {
            report.converged = true;
            break;
        }
        precondition(&r, &mut z);
        let rz_next = dot(&r, &z);
        report.rz.push(rz_next);
        let beta = rz_next / rz;
        report.betas.push(beta);
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }

    let true_r = residual_of(&x);
    report.true_residual = dot(&true_r, &true_r).sqrt() / r0;
    report.x = x;
    if report.converged && report.true_residual > 10.0 * opts.tol {
        return Err(SolverError::ResidualDrift {
            true_residual: report.true_residual,
            limit: 10.0 * opts.tol,
        });
    }
    Ok(report)
}
