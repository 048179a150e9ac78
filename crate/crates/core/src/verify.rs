//! Dense reference computations for small problems: generalized spectra on
//! kernel complements, numerical ranks and local equivalence constants.

use faer::linalg::triangular_solve::solve_lower_triangular_in_place;
use faer::linalg::solvers::Solve;
use faer::{Mat, Par, Side};
use serde::Serialize;
use thiserror::Error;

use crate::assembly::{assemble, FormKind};
use crate::mesh::{rigid_mode_vectors, signed_area, KernelBasis, Mesh};
use crate::solver::Preconditioner;
use crate::sparse::CsrMatrix;
use crate::transfer::{gfem_gram, transfer_matrix};

/// Largest dimension the dense oracles accept.
pub const MAX_DENSE_DIM: usize = 4000;

#[derive(Debug, Error, PartialEq)]
pub enum VerifyError {
    #[error("dimension {0} exceeds the dense limit")]
    TooLarge(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("restricted pencil is not positive definite (smallest eigenvalue {0:e})")]
    Indefinite(f64),
    #[error("degenerate triangle")]
    DegenerateTriangle,
    #[error("dense eigensolver failed: {0}")]
    Eigen(String),
}

/// Extreme generalized eigenvalues on a kernel complement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenSummary {
    pub min: f64,
    pub max: f64,
    pub kappa: f64,
    /// Number of kernel directions removed.
    pub deflated: usize,
}

/// Right-hand operator of a pencil.
#[derive(Clone, Copy)]
pub enum Operator<'a> {
    /// Solve `A x = l M x`.
    Matrix(&'a CsrMatrix),
    /// Eigenvalues of `B A`.
    Preconditioner(&'a dyn Preconditioner),
}

pub fn dense(a: &CsrMatrix) -> Mat<f64> {
    let mut m = Mat::<f64>::zeros(a.nrows(), a.ncols());
    for i in 0..a.nrows() {
        for (j, v) in a.row(i) {
            m[(i, j)] = v;
        }
    }
    m
}

/// Orthonormal basis of the Euclidean complement of `kernel`, as columns.
pub fn complement_basis(kernel: &KernelBasis, dim: usize) -> Mat<f64> {
    let q = kernel.orthonormalized();
    let k = q.len();
    if k == 0 {
        return Mat::<f64>::identity(dim, dim);
    }
    let km = Mat::<f64>::from_fn(dim, k, |i, j| q.vectors()[j][i]);
    let full = km.qr().compute_Q();
    Mat::<f64>::from_fn(dim, dim - k, |i, j| full[(i, j + k)])
}

fn symmetric_eigenvalues(m: &Mat<f64>) -> Result<Vec<f64>, VerifyError> {
    let sym = Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    sym.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| VerifyError::Eigen(format!("{e:?}")))
}

fn summarize(eigs: &[f64], deflated: usize) -> Result<EigenSummary, VerifyError> {
    let min = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(min > 1e-13 * max.abs()) {
        return Err(VerifyError::Indefinite(min));
    }
    Ok(EigenSummary {
        min,
        max,
        kappa: max / min,
        deflated,
    })
}

/// Extreme eigenvalues of the pencil `(A, M)` restricted to the Euclidean
/// complement of `kernel`.
pub fn dense_generalized_eigs(
    a: &CsrMatrix,
    m: Operator<'_>,
    kernel: &KernelBasis,
) -> Result<EigenSummary, VerifyError> {
    let n = a.nrows();
    if n > MAX_DENSE_DIM {
        return Err(VerifyError::TooLarge(n));
    }
    let m_dim = match m {
        Operator::Matrix(mm) => mm.nrows(),
        Operator::Preconditioner(b) => b.dim(),
    };
    if a.ncols() != n || m_dim != n {
        return Err(VerifyError::DimensionMismatch(format!(
            "A is {}x{}, M acts on {m_dim}",
            a.nrows(),
            a.ncols()
        )));
    }
    let z = complement_basis(kernel, n);
    let deflated = n - z.ncols();
    let ar = z.transpose() * (dense(a) * &z);
    let reduced = match m {
        Operator::Matrix(mm) => {
            let mr = z.transpose() * (dense(mm) * &z);
            let llt = mr
                .llt(Side::Lower)
                .map_err(|_| VerifyError::Indefinite(f64::NAN))?;
            let l = llt.L();
            // L^{-1} A_r L^{-T}
            let mut x = ar.clone();
            solve_lower_triangular_in_place(l, x.as_mut(), Par::Seq);
            let mut y = x.transpose().to_owned();
            solve_lower_triangular_in_place(l, y.as_mut(), Par::Seq);
            y
        }
        Operator::Preconditioner(b) => {
            let mut bz = Mat::<f64>::zeros(n, z.ncols());
            let mut col = vec![0.0; n];
            let mut out = vec![0.0; n];
            for j in 0..z.ncols() {
                for i in 0..n {
                    col[i] = z[(i, j)];
                }
                b.apply_into(&col, &mut out);
                for i in 0..n {
                    bz[(i, j)] = out[i];
                }
            }
            let br = z.transpose() * &bz;
            let br = Mat::<f64>::from_fn(br.nrows(), br.ncols(), |i, j| 0.5 * (br[(i, j)] + br[(j, i)]));
            let llt = br
                .llt(Side::Lower)
                .map_err(|_| VerifyError::Indefinite(f64::NAN))?;
            let l = llt.L();
            l.transpose() * &ar * l
        }
    };
    summarize(&symmetric_eigenvalues(&reduced)?, deflated)
}

/// `sum_E <Z y_E, y_E>^2` for symmetric `z`, with `y_E` the edge vectors.
pub fn edge_frobenius_form(tri: &[[f64; 2]; 3], z: [[f64; 2]; 2]) -> f64 {
    edge_vectors(tri)
        .iter()
        .map(|y| {
            let zy = [z[0][0] * y[0] + z[0][1] * y[1], z[1][0] * y[0] + z[1][1] * y[1]];
            (zy[0] * y[0] + zy[1] * y[1]).powi(2)
        })
        .sum()
}

fn edge_vectors(tri: &[[f64; 2]; 3]) -> [[f64; 2]; 3] {
    std::array::from_fn(|k| {
        let (a, b) = (tri[k], tri[(k + 1) % 3]);
        [b[0] - a[0], b[1] - a[1]]
    })
}

/// Extremes `(c, C)` of `sum_E <Z y_E, y_E>^2` over symmetric `Z` with
/// `|Z|_F = 1`.
pub fn edge_frobenius_constants(tri: &[[f64; 2]; 3]) -> Result<(f64, f64), VerifyError> {
    let diam2 = edge_vectors(tri)
        .iter()
        .map(|y| y[0] * y[0] + y[1] * y[1])
        .fold(0.0, f64::max);
    if signed_area(tri).abs() <= 1e-14 * diam2 {
        return Err(VerifyError::DegenerateTriangle);
    }
    // coordinates of Z in the orthonormal basis diag(1,0), diag(0,1),
    // offdiag(1,1)/sqrt(2)
    let mut gram = Mat::<f64>::zeros(3, 3);
    for y in edge_vectors(tri) {
        let l = [y[0] * y[0], y[1] * y[1], std::f64::consts::SQRT_2 * y[0] * y[1]];
        for i in 0..3 {
            for j in 0..3 {
                gram[(i, j)] += l[i] * l[j];
            }
        }
    }
    let eigs = symmetric_eigenvalues(&gram)?;
    let c = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    let cc = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if c <= 0.0 {
        return Err(VerifyError::DegenerateTriangle);
    }
    Ok((c, cc))
}

/// Extremes of `(P^T A_q P, A_W)` off the rigid modes.
pub fn spectral_equivalence_constants(mesh: &Mesh) -> Result<EigenSummary, VerifyError> {
    let p = transfer_matrix(mesh);
    let aq = assemble(FormKind::P2Laplacian, mesh, None).expect("no parameters");
    let g = gfem_gram(&p, &aq).expect("matching mesh");
    let aw = assemble(FormKind::Epsilon, mesh, None).expect("no parameters");
    dense_generalized_eigs(&g, Operator::Matrix(&aw), &rigid_mode_vectors(mesh))
}

/// Extremes of `a_W(u,u) / inf_r ||u - r||_1^2` over rigid motions `r`: a
/// discrete Korn constant. The quotient norm is the H1 norm after
/// H1-orthogonal removal of the rigid modes, `H - H R (R^T H R)^-1 R^T H`.
pub fn korn_constants(mesh: &Mesh) -> Result<EigenSummary, VerifyError> {
    let aw = assemble(FormKind::Epsilon, mesh, None).expect("no parameters");
    let a1 = assemble(FormKind::VectorLaplacian, mesh, None).expect("no parameters");
    let mass = assemble(FormKind::P1VectorMass, mesh, None).expect("no parameters");
    let h1 = a1.add_scaled(1.0, &mass, 1.0).expect("same pattern size");
    let rm = rigid_mode_vectors(mesh);
    let n = h1.nrows();
    if n > MAX_DENSE_DIM {
        return Err(VerifyError::TooLarge(n));
    }
    let k = rm.len();
    let hr_cols: Vec<Vec<f64>> = rm.vectors().iter().map(|r| h1.mul_vec(r)).collect();
    let hr = Mat::<f64>::from_fn(n, k, |i, j| hr_cols[j][i]);
    let r = Mat::<f64>::from_fn(n, k, |i, j| rm.vectors()[j][i]);
    let small = r.transpose() * &hr;
    let llt = small.llt(Side::Lower).map_err(|_| VerifyError::Indefinite(f64::NAN))?;
    // (R^T H R)^-1 (HR)^T via two triangular solves
    let mut w = hr.transpose().to_owned();
    solve_lower_triangular_in_place(llt.L(), w.as_mut(), Par::Seq);
    let correction = w.transpose() * &w;
    let h = dense(&h1);
    let mut triplets = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            triplets.push((i, j, h[(i, j)] - correction[(i, j)]));
        }
    }
    let quotient = CsrMatrix::from_triplets(n, n, &triplets).expect("in range");
    dense_generalized_eigs(&aw, Operator::Matrix(&quotient), &rm)
}

/// `u - R (R^T M R)^-1 R^T M u` with `R` the rigid modes and `M` the P1
/// vector mass matrix: the representative of `u + RM` that is L2-orthogonal
/// to the rigid motions. The solver deflates Euclidean-orthogonally; this maps
/// its answer onto the other normalization for comparison.
pub fn mass_orthogonal_representative(mesh: &Mesh, u: &[f64]) -> Result<Vec<f64>, VerifyError> {
    let rm = rigid_mode_vectors(mesh);
    let n = 2 * mesh.num_vertices();
    if u.len() != n {
        return Err(VerifyError::DimensionMismatch(format!("{} vs {n}", u.len())));
    }
    let mass = assemble(FormKind::P1VectorMass, mesh, None).expect("no parameters");
    let mr: Vec<Vec<f64>> = rm.vectors().iter().map(|r| mass.mul_vec(r)).collect();
    let k = rm.len();
    let small = Mat::<f64>::from_fn(k, k, |i, j| crate::mesh::dot(&rm.vectors()[i], &mr[j]));
    let mut rhs = Mat::<f64>::from_fn(k, 1, |i, _| crate::mesh::dot(&mr[i], u));
    let llt = small.llt(Side::Lower).map_err(|_| VerifyError::Indefinite(f64::NAN))?;
    llt.solve_in_place(rhs.as_mut());
    let mut out = u.to_vec();
    for (j, r) in rm.vectors().iter().enumerate() {
        out.iter_mut().zip(r).for_each(|(o, ri)| *o -= rhs[(j, 0)] * ri);
    }
    Ok(out)
}

/// Dimension minus numerical rank, with singular values below
/// `1e-10 * sigma_max` treated as zero.
pub fn rank_defect(a: &CsrMatrix) -> usize {
    let sv = dense(a).singular_values().expect("SVD converges");
    let top = sv.iter().cloned().fold(0.0, f64::max);
    let rank = sv.iter().filter(|&&s| s > 1e-10 * top).count();
    a.nrows().min(a.ncols()) - rank
}
