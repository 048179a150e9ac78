//! Preconditioners, deflated preconditioned conjugate gradients and the
//! condition estimate recovered from the CG coefficients.

mod lanczos;
mod pcg;
mod precond;

use thiserror::Error;

pub use lanczos::{condition_estimate, lanczos_tridiagonal};
pub use pcg::{pcg, PcgOptions, PcgReport};
pub use precond::{
    bq_exact, bq_smoother, AuxiliarySpace, IdentityPreconditioner, Preconditioner, PseudoInverse,
    SymmetricGaussSeidel, TransferRealization,
};

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("sparse Cholesky failed: {0}")]
    Factorization(String),
    #[error("zero diagonal entry in row {0}")]
    ZeroDiagonal(usize),
    #[error("a smoother needs at least one sweep")]
    ZeroSweeps,
    #[error("right-hand side is not orthogonal to the kernel (relative defect {defect:e})")]
    IncompatibleRhs { defect: f64 },
    #[error("<Ap, p> = {value:e} at iteration {iteration}: operator is not positive on the complement")]
    BrokenOperator { iteration: usize, value: f64 },
    #[error("<r, z> = {value:e} at iteration {iteration}: preconditioner is not positive")]
    BrokenPreconditioner { iteration: usize, value: f64 },
    #[error("true relative residual {true_residual:e} exceeds {limit:e}")]
    ResidualDrift { true_residual: f64, limit: f64 },
    #[error("condition estimate needs at least one CG iteration")]
    TooFewIterations,
    #[error("invalid tolerance {0}")]
    InvalidTolerance(f64),
}
