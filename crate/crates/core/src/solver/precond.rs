use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Col, Side};

use super::SolverError;
use crate::mesh::KernelBasis;
use crate::sparse::CsrMatrix;
use crate::transfer::{gfem_gram, TransferMatrix};

/// A symmetric positive semidefinite linear operator.
pub trait Preconditioner: Send + Sync {
    fn dim(&self) -> usize;

    fn apply_into(&self, r: &[f64], z: &mut [f64]);

    fn apply(&self, r: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.dim()];
        self.apply_into(r, &mut z);
        z
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IdentityPreconditioner {
    dim: usize,
}

impl IdentityPreconditioner {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl Preconditioner for IdentityPreconditioner {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_into(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

/// Moore-Penrose action of a symmetric PSD matrix with a known kernel.
///
/// One dof per kernel vector is pinned to zero, which leaves a nonsingular
/// principal submatrix; it is factored once by sparse Cholesky. A solve
/// projects the input onto the kernel complement, solves on the free dofs
/// and projects the result, giving the minimum-norm solution.
#[derive(Debug, Clone)]
pub struct PseudoInverse {
    dim: usize,
    free: Vec<usize>,
    llt: Llt<usize, f64>,
    kernel: KernelBasis,
}

impl PseudoInverse {
    pub fn new(a: &CsrMatrix, kernel: &KernelBasis) -> Result<Self, SolverError> {
        if a.nrows() != a.ncols() {
            return Err(SolverError::DimensionMismatch(format!(
                "matrix is {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let dim = a.nrows();
        if kernel.vectors().iter().any(|v| v.len() != dim) {
            return Err(SolverError::DimensionMismatch("kernel vector length".into()));
        }
        let kernel = kernel.orthonormalized();
        let pinned = pivot_rows(&kernel, dim);
        let mut reduced = vec![usize::MAX; dim];
        let mut free = Vec::with_capacity(dim - pinned.len());
        for i in 0..dim {
            if !pinned.contains(&i) {
                reduced[i] = free.len();
                free.push(i);
            }
        }
        let mut triplets = Vec::with_capacity(a.nnz() / 2 + dim);
        for &i in &free {
            for (j, v) in a.row(i) {
                // lower triangle only; faer reads one side
                if reduced[j] != usize::MAX && j <= i {
                    triplets.push(Triplet::new(reduced[i], reduced[j], v));
                }
            }
        }
        let m = free.len();
        let sym = SparseColMat::<usize, f64>::try_new_from_triplets(m, m, &triplets)
            .map_err(|e| SolverError::Factorization(format!("{e:?}")))?;
        let llt = sym
            .sp_cholesky(Side::Lower)
            .map_err(|e| SolverError::Factorization(format!("{e:?}")))?;
        Ok(Self { dim, free, llt, kernel })
    }

    pub fn kernel(&self) -> &KernelBasis {
        &self.kernel
    }
}

/// Greedy choice of one row per kernel vector such that the kernel basis
/// restricted to those rows is nonsingular.
fn pivot_rows(kernel: &KernelBasis, dim: usize) -> Vec<usize> {
    let mut work: Vec<Vec<f64>> = kernel.vectors().to_vec();
    let mut rows = Vec::with_capacity(work.len());
    for s in 0..work.len() {
        let (row, _) = (0..dim).fold((0, 0.0), |best, i| {
            let v = work[s][i].abs();
            if v > best.1 {
                (i, v)
            } else {
                best
            }
        });
        let pivot = work[s].clone();
        for w in work.iter_mut().skip(s + 1) {
            let c = w[row] / pivot[row];
            w.iter_mut().zip(&pivot).for_each(|(wi, pi)| *wi -= c * pi);
        }
        rows.push(row);
    }
    rows
}

impl Preconditioner for PseudoInverse {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_into(&self, r: &[f64], z: &mut [f64]) {
        let mut rhs = r.to_vec();
        self.kernel.project_out(&mut rhs);
        let b = Col::<f64>::from_fn(self.free.len(), |k| rhs[self.free[k]]);
        let x = self.llt.solve(&b);
        z.iter_mut().for_each(|v| *v = 0.0);
        for (k, &i) in self.free.iter().enumerate() {
            z[i] = x[k];
        }
        self.kernel.project_out(z);
    }
}

/// Exact pseudo-inverse of the Neumann P2 Laplacian, whose kernel is the
/// constants.
pub fn bq_exact(aq: &CsrMatrix) -> Result<PseudoInverse, SolverError> {
    PseudoInverse::new(aq, &KernelBasis::constants(aq.nrows()))
}

/// `sweeps` symmetric Gauss-Seidel iterations from a zero initial guess.
#[derive(Debug, Clone)]
pub struct SymmetricGaussSeidel {
    matrix: CsrMatrix,
    diagonal: Vec<f64>,
    sweeps: usize,
}

pub fn bq_smoother(aq: &CsrMatrix, sweeps: usize) -> Result<SymmetricGaussSeidel, SolverError> {
    if sweeps == 0 {
        return Err(SolverError::ZeroSweeps);
    }
    if aq.nrows() != aq.ncols() {
        return Err(SolverError::DimensionMismatch(format!(
            "matrix is {}x{}",
            aq.nrows(),
            aq.ncols()
        )));
    }
    let diagonal = aq.diagonal();
    if let Some(i) = diagonal.iter().position(|&d| d == 0.0) {
        return Err(SolverError::ZeroDiagonal(i));
    }
    Ok(SymmetricGaussSeidel {
        matrix: aq.clone(),
        diagonal,
        sweeps,
    })
}

impl SymmetricGaussSeidel {
    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    fn relax(&self, r: &[f64], z: &mut [f64], i: usize) {
        let mut s = r[i];
        for (j, v) in self.matrix.row(i) {
            if j != i {
                s -= v * z[j];
            }
        }
        z[i] = s / self.diagonal[i];
    }
}

impl Preconditioner for SymmetricGaussSeidel {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply_into(&self, r: &[f64], z: &mut [f64]) {
        z.iter_mut().for_each(|v| *v = 0.0);
        for _ in 0..self.sweeps {
            for i in 0..self.dim() {
                self.relax(r, z, i);
            }
            for i in (0..self.dim()).rev() {
                self.relax(r, z, i);
            }
        }
    }
}

/// How the map from P2 back to P1 vector fields is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransferRealization {
    /// `G^+ P^T A_q`, with `G = P^T A_q P`: the adjoint of the inclusion
    /// taken in the energy inner products, followed by the inverse of the
    /// (bijective modulo rigid modes) GFEM map.
    #[default]
    GramAdjoint,
    /// Plain `P^T`. Kept as a diagnostic; its condition number grows like
    /// `h^-2`.
    Transpose,
}

/// Auxiliary space preconditioner `R B_q R^T` with `R` from
/// [`TransferRealization`].
pub struct AuxiliarySpace {
    p: CsrMatrix,
    pt: CsrMatrix,
    aq: CsrMatrix,
    bq: Box<dyn Preconditioner>,
    gram_inverse: Option<PseudoInverse>,
}

impl AuxiliarySpace {
    pub fn new(
        transfer: &TransferMatrix,
        aq: &CsrMatrix,
        bq: Box<dyn Preconditioner>,
        realization: TransferRealization,
        rigid_modes: &KernelBasis,
    ) -> Result<Self, SolverError> {
        let p = transfer.matrix().clone();
        if aq.nrows() != p.nrows() || aq.ncols() != p.nrows() || bq.dim() != p.nrows() {
            return Err(SolverError::DimensionMismatch(format!(
                "transfer has {} rows, A_q is {}x{}, B_q acts on {}",
                p.nrows(),
                aq.nrows(),
                aq.ncols(),
                bq.dim()
            )));
        }
        let gram_inverse = match realization {
            TransferRealization::GramAdjoint => {
                let g = gfem_gram(transfer, aq)
                    .map_err(|e| SolverError::DimensionMismatch(e.to_string()))?;
                Some(PseudoInverse::new(&g, rigid_modes)?)
            }
            TransferRealization::Transpose => None,
        };
        Ok(Self {
            pt: p.transpose(),
            p,
            aq: aq.clone(),
            bq,
            gram_inverse,
        })
    }

    pub fn realization(&self) -> TransferRealization {
        match self.gram_inverse {
            Some(_) => TransferRealization::GramAdjoint,
            None => TransferRealization::Transpose,
        }
    }
}

impl Preconditioner for AuxiliarySpace {
    fn dim(&self) -> usize {
        self.p.ncols()
    }

    fn apply_into(&self, r: &[f64], z: &mut [f64]) {
        match &self.gram_inverse {
            Some(ginv) => {
                let s = ginv.apply(r);
                let w = self.aq.mul_vec(&self.p.mul_vec(&s));
                let w = self.aq.mul_vec(&self.bq.apply(&w));
                ginv.apply_into(&self.pt.mul_vec(&w), z);
            }
            None => {
                let w = self.bq.apply(&self.p.mul_vec(r));
                self.pt.mul_vec_into(&w, z);
            }
        }
    }
}
