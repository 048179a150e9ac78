//! The map from P1 vector fields into continuous piecewise quadratics that
//! goes through the zero-linear-part GFEM space.
//!
//! For a P1 vector field `u` the GFEM function is
//!
//! ```text
//! u_G(x) = (<x, u(x)> - I_h <x, u>(x)) / h
//! ```
//!
//! which is quadratic on each triangle and vanishes at the vertices. Its P2
//! nodal values are zero at vertices and `<u(x_i) - u(x_j), x_j - x_i> / (4h)`
//! at the midpoint of edge `(i, j)`, so the inclusion into P2 is just a
//! sparse matrix.

use thiserror::Error;

use crate::mesh::{DofMap, Mesh, MeshError, Space};
use crate::sparse::{CsrMatrix, SparseError};

#[derive(Debug, Error, PartialEq)]
pub enum TransferError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Sparse(#[from] SparseError),
    #[error("coefficient vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Matrix of the composite map P1-vector -> GFEM -> P2, shaped
/// `(#vertices + #edges) x (2 #vertices)`.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    matrix: CsrMatrix,
}

impl TransferMatrix {
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CsrMatrix {
        self.matrix
    }

    /// P2 nodal values of `u_G`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(u)
    }

    pub fn apply_transposed(&self, v: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec_transposed(v)
    }
}

pub fn transfer_matrix(mesh: &Mesh) -> TransferMatrix {
    let p1 = DofMap::new(Space::P1Vector, mesh);
    let p2 = DofMap::new(Space::P2Scalar, mesh);
    let scale = 1.0 / (4.0 * mesh.h());
    let mut triplets = Vec::with_capacity(4 * mesh.num_edges());
    for (e, &[i, j]) in mesh.edges().iter().enumerate() {
        let row = p2.edge_dof(e).expect("P2 numbering");
        let (xi, xj) = (mesh.vertices()[i], mesh.vertices()[j]);
        for k in 0..2 {
            let d = (xj[k] - xi[k]) * scale;
            if d != 0.0 {
                triplets.push((row, p1.vertex_dof(i, k), d));
                triplets.push((row, p1.vertex_dof(j, k), -d));
            }
        }
    }
    let matrix = CsrMatrix::from_triplets(p2.len(), p1.len(), &triplets).expect("dofs are in range");
    TransferMatrix { matrix }
}

/// Evaluates `u_G` at `point` straight from its defining expression.
pub fn gfem_value(mesh: &Mesh, u: &[f64], point: [f64; 2]) -> Result<f64, TransferError> {
    let dofs = DofMap::new(Space::P1Vector, mesh);
    if u.len() != dofs.len() {
        return Err(TransferError::LengthMismatch {
            expected: dofs.len(),
            got: u.len(),
        });
    }
    let (t, bary) = mesh.locate(point)?;
    let verts = mesh.triangles()[t];
    let mut field = [0.0; 2];
    let mut interpolant = 0.0;
    for (a, &v) in verts.iter().enumerate() {
        let xv = mesh.vertices()[v];
        let uv = [u[dofs.vertex_dof(v, 0)], u[dofs.vertex_dof(v, 1)]];
        field[0] += bary[a] * uv[0];
        field[1] += bary[a] * uv[1];
        interpolant += bary[a] * (xv[0] * uv[0] + xv[1] * uv[1]);
    }
    let inner = point[0] * field[0] + point[1] * field[1];
    Ok((inner - interpolant) / mesh.h())
}

/// `P^T A_q P`: the Laplacian of the GFEM space expressed on P1-vector
/// coefficients. Its kernel is exactly the rigid modes.
pub fn gfem_gram(transfer: &TransferMatrix, aq: &CsrMatrix) -> Result<CsrMatrix, TransferError> {
    let p = transfer.matrix();
    if aq.nrows() != p.nrows() || aq.ncols() != p.nrows() {
        return Err(TransferError::Sparse(SparseError::DimensionMismatch(format!(
            "A_q is {}x{} but the transfer has {} rows",
            aq.nrows(),
            aq.ncols(),
            p.nrows()
        ))));
    }
    Ok(p.transpose().matmul(&aq.matmul(p)?)?)
}
