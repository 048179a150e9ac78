//! Structured triangulations of the unit square, degree-of-freedom maps and
//! the kernel bases (rigid modes, componentwise constants) used for deflation.

use std::collections::HashMap;
use std::io::{self, Write};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("number of subdivisions must be positive")]
    ZeroSubdivisions,
    #[error("point ({0}, {1}) lies outside the mesh")]
    PointOutside(f64, f64),
    #[error("invalid material parameters: {0}")]
    InvalidMaterial(String),
}

/// Uniform right-triangle mesh of `[0,1]^2`.
///
/// Vertex `(i, j)` (column `i`, row `j`) has index `j * (n + 1) + i`. Every
/// grid cell is split along its lower-left to upper-right diagonal, and all
/// triangles are stored counterclockwise.
#[derive(Debug, Clone)]
pub struct Mesh {
    n: usize,
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    /// Local edge `k` of a triangle joins local vertices `k` and `(k + 1) % 3`.
    triangle_edges: Vec<[usize; 3]>,
    boundary_edges: Vec<bool>,
}

pub fn build_structured_mesh(n: usize) -> Result<Mesh, MeshError> {
    if n == 0 {
        return Err(MeshError::ZeroSubdivisions);
    }
    let h = 1.0 / n as f64;
    let vid = |i: usize, j: usize| j * (n + 1) + i;

    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 * h, j as f64 * h]);
        }
    }

    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }

    let mut lookup: HashMap<[usize; 2], usize> = HashMap::new();
    let mut edges = Vec::with_capacity(3 * n * n + 2 * n);
    let mut incidence: Vec<usize> = Vec::new();
    let mut triangle_edges = Vec::with_capacity(triangles.len());
    for tri in &triangles {
        let mut local = [0; 3];
        for k in 0..3 {
            let (p, q) = (tri[k], tri[(k + 1) % 3]);
            let key = [p.min(q), p.max(q)];
            let id = *lookup.entry(key).or_insert_with(|| {
                edges.push(key);
                incidence.push(0);
                edges.len() - 1
            });
            incidence[id] += 1;
            local[k] = id;
        }
        triangle_edges.push(local);
    }
    let boundary_edges = incidence.iter().map(|&c| c == 1).collect();

    Ok(Mesh {
        n,
        vertices,
        triangles,
        edges,
        triangle_edges,
        boundary_edges,
    })
}

impl Mesh {
    /// Subdivisions per side.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Axis-aligned cell size `1/n`, used globally (also as the GFEM scaling).
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn triangle_edges(&self) -> &[[usize; 3]] {
        &self.triangle_edges
    }

    pub fn is_boundary_edge(&self, edge: usize) -> bool {
        self.boundary_edges[edge]
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_coords(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Signed area (positive for counterclockwise triangles).
    pub fn triangle_area(&self, t: usize) -> f64 {
        signed_area(&self.triangle_coords(t))
    }

    pub fn edge_midpoint(&self, e: usize) -> [f64; 2] {
        let [i, j] = self.edges[e];
        let (p, q) = (self.vertices[i], self.vertices[j]);
        [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [i, j] = self.edges[e];
        let (p, q) = (self.vertices[i], self.vertices[j]);
        (q[0] - p[0]).hypot(q[1] - p[1])
    }

    /// Finds a triangle containing `point` together with its barycentric
    /// coordinates. Points on shared edges resolve to the lower-numbered
    /// triangle.
    pub fn locate(&self, point: [f64; 2]) -> Result<(usize, [f64; 3]), MeshError> {
        const SLACK: f64 = 1e-12;
        let [x, y] = point;
        if !(-SLACK..=1.0 + SLACK).contains(&x) || !(-SLACK..=1.0 + SLACK).contains(&y) {
            return Err(MeshError::PointOutside(x, y));
        }
        let n = self.n;
        let clamp = |v: f64| ((v * n as f64).floor().max(0.0) as usize).min(n - 1);
        let (ci, cj) = (clamp(x), clamp(y));
        // neighbouring cells cover points that sit exactly on cell borders
        for dj in [0isize, -1, 1] {
            for di in [0isize, -1, 1] {
                let (i, j) = (ci as isize + di, cj as isize + dj);
                if i < 0 || j < 0 || i >= n as isize || j >= n as isize {
                    continue;
                }
                let cell = j as usize * n + i as usize;
                for t in [2 * cell, 2 * cell + 1] {
                    let bary = barycentric(&self.triangle_coords(t), point);
                    if bary.iter().all(|&l| l >= -SLACK) {
                        return Ok((t, bary));
                    }
                }
            }
        }
        Err(MeshError::PointOutside(x, y))
    }

    /// Plain-text dump: `v x y` per vertex, then `t i j k` per triangle (0-based).
    pub fn write_text<W: Write>(&self, mut out: W) -> io::Result<()> {
        for [x, y] in &self.vertices {
            writeln!(out, "v {x} {y}")?;
        }
        for [a, b, c] in &self.triangles {
            writeln!(out, "t {a} {b} {c}")?;
        }
        Ok(())
    }
}

pub fn signed_area(tri: &[[f64; 2]; 3]) -> f64 {
    let [a, b, c] = tri;
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

pub fn barycentric(tri: &[[f64; 2]; 3], p: [f64; 2]) -> [f64; 3] {
    let area = signed_area(tri);
    let l0 = signed_area(&[p, tri[1], tri[2]]) / area;
    let l1 = signed_area(&[tri[0], p, tri[2]]) / area;
    [l0, l1, 1.0 - l0 - l1]
}

/// Gradients of the three barycentric coordinates of a triangle, plus its
/// (positive) area.
pub fn barycentric_gradients(tri: &[[f64; 2]; 3]) -> ([[f64; 2]; 3], f64) {
    let area = signed_area(tri);
    let inv = 1.0 / (2.0 * area);
    let mut g = [[0.0; 2]; 3];
    for (k, gk) in g.iter_mut().enumerate() {
        let p = tri[(k + 1) % 3];
        let q = tri[(k + 2) % 3];
        *gk = [(p[1] - q[1]) * inv, (q[0] - p[0]) * inv];
    }
    (g, area.abs())
}

/// Finite element spaces living on a [`Mesh`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    P1Scalar,
    P1Vector,
    P2Scalar,
    /// Zero-linear-part GFEM space; coefficients are indexed like P1 vectors.
    Gfem,
}

/// Global numbering of degrees of freedom.
///
/// Vector spaces are stored component-major: all first components, then all
/// second components. P2 nodes are vertices first, then edge midpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofMap {
    space: Space,
    num_vertices: usize,
    num_edges: usize,
}

impl DofMap {
    pub fn new(space: Space, mesh: &Mesh) -> Self {
        Self {
            space,
            num_vertices: mesh.num_vertices(),
            num_edges: mesh.num_edges(),
        }
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn len(&self) -> usize {
        match self.space {
            Space::P1Scalar => self.num_vertices,
            Space::P1Vector | Space::Gfem => 2 * self.num_vertices,
            Space::P2Scalar => self.num_vertices + self.num_edges,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Index of component `k` at `vertex` (vector spaces), or of the vertex
    /// node itself (scalar spaces, `k` must be 0).
    pub fn vertex_dof(&self, vertex: usize, k: usize) -> usize {
        match self.space {
            Space::P1Scalar | Space::P2Scalar => {
                debug_assert_eq!(k, 0);
                vertex
            }
            Space::P1Vector | Space::Gfem => k * self.num_vertices + vertex,
        }
    }

    /// Index of the midpoint node of `edge`; only meaningful for P2.
    pub fn edge_dof(&self, edge: usize) -> Option<usize> {
        (self.space == Space::P2Scalar).then_some(self.num_vertices + edge)
    }
}

/// Lamé pair `(mu, lambda)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MaterialParams {
    pub mu: f64,
    pub lambda: f64,
}

impl MaterialParams {
    pub fn new(mu: f64, lambda: f64) -> Result<Self, MeshError> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(MeshError::InvalidMaterial(format!("mu must be positive, got {mu}")));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(MeshError::InvalidMaterial(format!(
                "lambda must be non-negative, got {lambda}"
            )));
        }
        Ok(Self { mu, lambda })
    }

    pub fn from_young_poisson(young: f64, nu: f64) -> Result<Self, MeshError> {
        if !(young > 0.0) {
            return Err(MeshError::InvalidMaterial(format!(
                "Young modulus must be positive, got {young}"
            )));
        }
        if !(0.0..0.5).contains(&nu) {
            return Err(MeshError::InvalidMaterial(format!(
                "Poisson ratio must lie in [0, 1/2), got {nu}"
            )));
        }
        let lambda = young * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
        let mu = young / (2.0 * (1.0 + nu));
        Self::new(mu, lambda)
    }

    pub fn poisson_ratio(&self) -> f64 {
        poisson_from_lame(self.lambda, self.mu)
    }
}

pub fn poisson_from_lame(lambda: f64, mu: f64) -> f64 {
    lambda / (2.0 * (lambda + mu))
}

/// A set of vectors spanning a known null space.
#[derive(Debug, Clone)]
pub struct KernelBasis {
    vectors: Vec<Vec<f64>>,
}

impl KernelBasis {
    pub fn new(vectors: Vec<Vec<f64>>) -> Self {
        debug_assert!(vectors.windows(2).all(|w| w[0].len() == w[1].len()));
        Self { vectors }
    }

    pub fn empty() -> Self {
        Self { vectors: Vec::new() }
    }

    /// The all-ones vector of length `dim`.
    pub fn constants(dim: usize) -> Self {
        Self::new(vec![vec![1.0; dim]])
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Orthonormal basis of the same span (modified Gram-Schmidt, two passes).
    pub fn orthonormalized(&self) -> Self {
        let mut out: Vec<Vec<f64>> = Vec::with_capacity(self.vectors.len());
        for v in &self.vectors {
            let mut w = v.clone();
            for _ in 0..2 {
                for q in &out {
                    let c = dot(q, &w);
                    w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= c * qi);
                }
            }
            let norm = dot(&w, &w).sqrt();
            if norm > 1e-12 * dot(v, v).sqrt() {
                w.iter_mut().for_each(|wi| *wi /= norm);
                out.push(w);
            }
        }
        Self { vectors: out }
    }

    /// Removes the Euclidean projection onto this basis from `v`. The basis
    /// must be orthonormal.
    pub fn project_out(&self, v: &mut [f64]) {
        for q in &self.vectors {
            let c = dot(q, v);
            v.iter_mut().zip(q).for_each(|(vi, qi)| *vi -= c * qi);
        }
    }
}

/// Nodal interpolants of the planar rigid motions `(1,0)`, `(0,1)`, `(-y,x)`
/// in the P1-vector numbering.
pub fn rigid_mode_vectors(mesh: &Mesh) -> KernelBasis {
    let dofs = DofMap::new(Space::P1Vector, mesh);
    let mut tx = vec![0.0; dofs.len()];
    let mut ty = vec![0.0; dofs.len()];
    let mut rot = vec![0.0; dofs.len()];
    for (v, &[x, y]) in mesh.vertices().iter().enumerate() {
        tx[dofs.vertex_dof(v, 0)] = 1.0;
        ty[dofs.vertex_dof(v, 1)] = 1.0;
        rot[dofs.vertex_dof(v, 0)] = -y;
        rot[dofs.vertex_dof(v, 1)] = x;
    }
    KernelBasis::new(vec![tx, ty, rot])
}

/// Componentwise constants: the kernel of the vector Laplacian.
pub fn component_constants(mesh: &Mesh) -> KernelBasis {
    let mut basis = rigid_mode_vectors(mesh);
    basis.vectors.truncate(2);
    basis
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
