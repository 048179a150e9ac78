//! Global assembly of the bilinear forms on P1 vector fields and P2 scalar
//! functions.
//!
//! Vector forms act on the component-major P1-vector numbering of
//! [`DofMap`]; scalar P2 forms on the vertices-then-edges numbering.

mod load;
pub mod quadrature;

use std::str::FromStr;

use thiserror::Error;

use crate::mesh::{barycentric_gradients, DofMap, MaterialParams, Mesh, Space};
use crate::sparse::CsrMatrix;
pub use load::{
    assemble_load, discrete_h1_error, discrete_h1_norm, manufactured_forcing, nodal_interpolant,
    H1Parts, ManufacturedSolution,
};
pub use quadrature::QuadratureRule;

#[derive(Debug, Error, PartialEq)]
pub enum AssemblyError {
    #[error("the elasticity form requires material parameters")]
    MissingParams,
    #[error("material parameters are only accepted by the elasticity form, not {0:?}")]
    UnexpectedParams(FormKind),
    #[error("unknown form kind `{0}`")]
    UnknownKind(String),
    #[error("no quadrature rule of degree {0} (supported: 2..=7)")]
    InvalidDegree(usize),
    #[error("vector of length {got} does not match {expected} degrees of freedom")]
    LengthMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormKind {
    /// `2 mu <eps(u), eps(v)>_F + lambda div(u) div(v)`
    Elasticity,
    /// `<eps(u), eps(v)>_F`
    Epsilon,
    /// `div(u) div(v)`
    Divergence,
    /// componentwise `grad u_k . grad v_k`
    VectorLaplacian,
    /// `grad u . grad v` on continuous piecewise quadratics
    P2Laplacian,
    P1VectorMass,
    P2Mass,
}

impl FormKind {
    pub fn space(self) -> Space {
        match self {
            FormKind::P2Laplacian | FormKind::P2Mass => Space::P2Scalar,
            _ => Space::P1Vector,
        }
    }

    /// Rule that integrates this form exactly on affine triangles.
    pub fn default_rule(self) -> QuadratureRule {
        match self {
            FormKind::Elasticity
            | FormKind::Epsilon
            | FormKind::Divergence
            | FormKind::VectorLaplacian => QuadratureRule::centroid(),
            FormKind::P1VectorMass | FormKind::P2Laplacian => QuadratureRule::edge_midpoints(),
            FormKind::P2Mass => QuadratureRule::seven_point(),
        }
    }
}

impl FromStr for FormKind {
    type Err = AssemblyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "elasticity" => FormKind::Elasticity,
            "epsilon" => FormKind::Epsilon,
            "divergence" => FormKind::Divergence,
            "vector_laplacian" => FormKind::VectorLaplacian,
            "p2_laplacian" => FormKind::P2Laplacian,
            "p1_vector_mass" => FormKind::P1VectorMass,
            "p2_mass" => FormKind::P2Mass,
            other => return Err(AssemblyError::UnknownKind(other.to_string())),
        })
    }
}

pub fn assemble(
    kind: FormKind,
    mesh: &Mesh,
    params: Option<MaterialParams>,
) -> Result<CsrMatrix, AssemblyError> {
    assemble_with_rule(kind, mesh, params, &kind.default_rule())
}

pub fn assemble_with_rule(
    kind: FormKind,
    mesh: &Mesh,
    params: Option<MaterialParams>,
    rule: &QuadratureRule,
) -> Result<CsrMatrix, AssemblyError> {
    let params = match (kind, params) {
        (FormKind::Elasticity, None) => return Err(AssemblyError::MissingParams),
        (FormKind::Elasticity, Some(p)) => Some(p),
        (_, Some(_)) => return Err(AssemblyError::UnexpectedParams(kind)),
        (_, None) => None,
    };
    let dofs = DofMap::new(kind.space(), mesh);
    let mut triplets = Vec::with_capacity(mesh.num_triangles() * 36);
    for t in 0..mesh.num_triangles() {
        let tri = mesh.triangle_coords(t);
        let (local, global) = match kind.space() {
            Space::P2Scalar => {
                let k = p2_element_matrix(kind, &tri, rule);
                let [a, b, c] = mesh.triangles()[t];
                let e = mesh.triangle_edges()[t];
                let edge = |i: usize| dofs.edge_dof(e[i]).expect("P2 numbering");
                (k, [a, b, c, edge(0), edge(1), edge(2)])
            }
            _ => {
                let k = p1_vector_element_matrix(kind, params, &tri, rule);
                let v = mesh.triangles()[t];
                let g = |i: usize| dofs.vertex_dof(v[i % 3], i / 3);
                (k, [g(0), g(1), g(2), g(3), g(4), g(5)])
            }
        };
        for (i, &gi) in global.iter().enumerate() {
            for (j, &gj) in global.iter().enumerate() {
                triplets.push((gi, gj, local[i][j]));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(dofs.len(), dofs.len(), &triplets).expect("local dofs are in range"))
}

/// Local matrix on the six P1-vector dofs of a triangle, ordered
/// `(vertex a, component k) -> a + 3k`.
pub fn p1_vector_element_matrix(
    kind: FormKind,
    params: Option<MaterialParams>,
    tri: &[[f64; 2]; 3],
    rule: &QuadratureRule,
) -> [[f64; 6]; 6] {
    let (g, area) = barycentric_gradients(tri);
    let mut local = [[0.0; 6]; 6];
    for (bary, w) in rule.scaled_to(area) {
        for i in 0..6 {
            let (a, k) = (i % 3, i / 3);
            for j in 0..6 {
                let (b, l) = (j % 3, j / 3);
                let same = if k == l { 1.0 } else { 0.0 };
                let grad_dot = g[a][0] * g[b][0] + g[a][1] * g[b][1];
                let eps = 0.5 * (same * grad_dot + g[a][l] * g[b][k]);
                let div = g[a][k] * g[b][l];
                let value = match kind {
                    FormKind::Elasticity => {
                        let p = params.expect("checked by caller");
                        2.0 * p.mu * eps + p.lambda * div
                    }
                    FormKind::Epsilon => eps,
                    FormKind::Divergence => div,
                    FormKind::VectorLaplacian => same * grad_dot,
                    FormKind::P1VectorMass => same * bary[a] * bary[b],
                    FormKind::P2Laplacian | FormKind::P2Mass => unreachable!("scalar P2 form"),
                };
                local[i][j] += w * value;
            }
        }
    }
    local
}

/// Values and gradients of the six P2 basis functions at a barycentric
/// point. Vertex functions come first, then the edge bubbles `4 l_k l_{k+1}`.
pub fn p2_basis(bary: [f64; 3], g: &[[f64; 2]; 3]) -> ([f64; 6], [[f64; 2]; 6]) {
    let mut val = [0.0; 6];
    let mut grad = [[0.0; 2]; 6];
    for a in 0..3 {
        val[a] = bary[a] * (2.0 * bary[a] - 1.0);
        let s = 4.0 * bary[a] - 1.0;
        grad[a] = [s * g[a][0], s * g[a][1]];
        let b = (a + 1) % 3;
        val[3 + a] = 4.0 * bary[a] * bary[b];
        grad[3 + a] = [
            4.0 * (bary[a] * g[b][0] + bary[b] * g[a][0]),
            4.0 * (bary[a] * g[b][1] + bary[b] * g[a][1]),
        ];
    }
    (val, grad)
}

pub fn p2_element_matrix(kind: FormKind, tri: &[[f64; 2]; 3], rule: &QuadratureRule) -> [[f64; 6]; 6] {
    let (g, area) = barycentric_gradients(tri);
    let mut local = [[0.0; 6]; 6];
    for (bary, w) in rule.scaled_to(area) {
        let (val, grad) = p2_basis(bary, &g);
        for i in 0..6 {
            for j in 0..6 {
                local[i][j] += w * match kind {
                    FormKind::P2Laplacian => grad[i][0] * grad[j][0] + grad[i][1] * grad[j][1],
                    FormKind::P2Mass => val[i] * val[j],
                    _ => unreachable!("vector P1 form"),
                };
            }
        }
    }
    local
}
