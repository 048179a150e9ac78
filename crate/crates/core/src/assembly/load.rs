use std::f64::consts::PI;

use super::{AssemblyError, QuadratureRule};
use crate::mesh::{barycentric_gradients, rigid_mode_vectors, DofMap, MaterialParams, Mesh, Space};

/// `b_(a,k) = \int f_k phi_a` on the P1-vector numbering, integrated with the
/// cheapest rule exact for `degree`.
pub fn assemble_load<F>(mesh: &Mesh, f: F, degree: usize) -> Result<Vec<f64>, AssemblyError>
where
    F: Fn([f64; 2]) -> [f64; 2],
{
    if degree < 2 {
        return Err(AssemblyError::InvalidDegree(degree));
    }
    let rule = QuadratureRule::for_degree(degree).ok_or(AssemblyError::InvalidDegree(degree))?;
    let dofs = DofMap::new(Space::P1Vector, mesh);
    let mut b = vec![0.0; dofs.len()];
    for (t, verts) in mesh.triangles().iter().enumerate() {
        let tri = mesh.triangle_coords(t);
        let area = mesh.triangle_area(t);
        for (bary, w) in rule.scaled_to(area) {
            let x = [
                bary.iter().zip(&tri).map(|(l, p)| l * p[0]).sum(),
                bary.iter().zip(&tri).map(|(l, p)| l * p[1]).sum(),
            ];
            let fx = f(x);
            for (a, &v) in verts.iter().enumerate() {
                for (k, fk) in fx.iter().enumerate() {
                    b[dofs.vertex_dof(v, k)] += w * fk * bary[a];
                }
            }
        }
    }
    Ok(b)
}

/// Smooth pure-traction solution on the unit square:
///
/// ```text
/// u1 = x(1-x) y^2 (1-y)^2 sin(pi x) - 2/(15 pi^3)
/// u2 = x^2 (1-x)^2 y^2 (1-y)^2 cos(pi y)
/// ```
///
/// Its stress `2 mu eps(u) + lambda tr(eps(u)) I` has zero normal component
/// on all four sides, and `u` is L2-orthogonal to the rigid modes.
#[derive(Debug, Clone, Copy)]
pub struct ManufacturedSolution {
    params: MaterialParams,
}

/// Values and first two derivatives of a univariate factor.
#[derive(Debug, Clone, Copy)]
struct Jet {
    v: f64,
    d1: f64,
    d2: f64,
}

/// `s^2 (1-s)^2`
fn quartic(s: f64) -> Jet {
    Jet {
        v: s * s * (1.0 - s) * (1.0 - s),
        d1: 2.0 * s - 6.0 * s * s + 4.0 * s * s * s,
        d2: 2.0 - 12.0 * s + 12.0 * s * s,
    }
}

/// `s (1-s) sin(pi s)`
fn sine_factor(s: f64) -> Jet {
    let (sn, cs) = (PI * s).sin_cos();
    let p = s - s * s;
    let dp = 1.0 - 2.0 * s;
    Jet {
        v: p * sn,
        d1: dp * sn + PI * p * cs,
        d2: -2.0 * sn + 2.0 * PI * dp * cs - PI * PI * p * sn,
    }
}

/// `s^2 (1-s)^2 cos(pi s)`
fn cosine_factor(s: f64) -> Jet {
    let (sn, cs) = (PI * s).sin_cos();
    let q = quartic(s);
    Jet {
        v: q.v * cs,
        d1: q.d1 * cs - PI * q.v * sn,
        d2: q.d2 * cs - 2.0 * PI * q.d1 * sn - PI * PI * q.v * cs,
    }
}

impl ManufacturedSolution {
    pub fn new(params: MaterialParams) -> Self {
        Self { params }
    }

    pub fn params(&self) -> MaterialParams {
        self.params
    }

    pub fn displacement(&self, [x, y]: [f64; 2]) -> [f64; 2] {
        [
            sine_factor(x).v * quartic(y).v - 2.0 / (15.0 * PI.powi(3)),
            quartic(x).v * cosine_factor(y).v,
        ]
    }

    /// `grad[k][j] = d u_k / d x_j`
    pub fn gradient(&self, [x, y]: [f64; 2]) -> [[f64; 2]; 2] {
        let (a, b) = (sine_factor(x), quartic(y));
        let (p, q) = (quartic(x), cosine_factor(y));
        [[a.d1 * b.v, a.v * b.d1], [p.d1 * q.v, p.v * q.d1]]
    }

    pub fn stress(&self, point: [f64; 2]) -> [[f64; 2]; 2] {
        let g = self.gradient(point);
        let MaterialParams { mu, lambda } = self.params;
        let shear = 0.5 * (g[0][1] + g[1][0]);
        let tr = g[0][0] + g[1][1];
        [
            [2.0 * mu * g[0][0] + lambda * tr, 2.0 * mu * shear],
            [2.0 * mu * shear, 2.0 * mu * g[1][1] + lambda * tr],
        ]
    }

    /// Body force `f = -div sigma(u)`.
    pub fn forcing(&self, [x, y]: [f64; 2]) -> [f64; 2] {
        let (a, b) = (sine_factor(x), quartic(y));
        let (p, q) = (quartic(x), cosine_factor(y));
        let u1_xx = a.d2 * b.v;
        let u1_yy = a.v * b.d2;
        let u1_xy = a.d1 * b.d1;
        let u2_xx = p.d2 * q.v;
        let u2_yy = p.v * q.d2;
        let u2_xy = p.d1 * q.d1;
        let MaterialParams { mu, lambda } = self.params;
        [
            -(2.0 * mu * u1_xx + mu * (u1_yy + u2_xy) + lambda * (u1_xx + u2_xy)),
            -(mu * (u1_xy + u2_xx) + 2.0 * mu * u2_yy + lambda * (u1_xy + u2_yy)),
        ]
    }
}

/// Body force of the manufactured solution for `mu = 1/2`.
pub fn manufactured_forcing(lambda: f64) -> impl Fn([f64; 2]) -> [f64; 2] {
    let params = MaterialParams::new(0.5, lambda).expect("lambda must be non-negative");
    let solution = ManufacturedSolution::new(params);
    move |p| solution.forcing(p)
}

pub fn nodal_interpolant<F>(mesh: &Mesh, u: F) -> Vec<f64>
where
    F: Fn([f64; 2]) -> [f64; 2],
{
    let dofs = DofMap::new(Space::P1Vector, mesh);
    let mut out = vec![0.0; dofs.len()];
    for (v, &p) in mesh.vertices().iter().enumerate() {
        let value = u(p);
        out[dofs.vertex_dof(v, 0)] = value[0];
        out[dofs.vertex_dof(v, 1)] = value[1];
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct H1Parts {
    /// `(|e1|_1^2 + |e2|_1^2)^(1/2)`
    pub seminorm: f64,
    pub l2: f64,
}

impl H1Parts {
    pub fn total(&self) -> f64 {
        self.seminorm.hypot(self.l2)
    }
}

/// H1 seminorm and L2 norm of a P1 vector field, integrated exactly.
pub fn discrete_h1_norm(mesh: &Mesh, e: &[f64]) -> Result<H1Parts, AssemblyError> {
    let dofs = DofMap::new(Space::P1Vector, mesh);
    if e.len() != dofs.len() {
        return Err(AssemblyError::LengthMismatch {
            expected: dofs.len(),
            got: e.len(),
        });
    }
    let (mut semi, mut l2) = (0.0, 0.0);
    for (t, verts) in mesh.triangles().iter().enumerate() {
        let (g, area) = barycentric_gradients(&mesh.triangle_coords(t));
        for k in 0..2 {
            let vals: Vec<f64> = verts.iter().map(|&v| e[dofs.vertex_dof(v, k)]).collect();
            let gx: f64 = (0..3).map(|a| vals[a] * g[a][0]).sum();
            let gy: f64 = (0..3).map(|a| vals[a] * g[a][1]).sum();
            semi += area * (gx * gx + gy * gy);
            // \int (sum e_a l_a)^2 = |T|/12 (sum e_a^2 + (sum e_a)^2)
            let sum: f64 = vals.iter().sum();
            let sq: f64 = vals.iter().map(|v| v * v).sum();
            l2 += area / 12.0 * (sq + sum * sum);
        }
    }
    Ok(H1Parts {
        seminorm: semi.sqrt(),
        l2: l2.sqrt(),
    })
}

/// Discrete H1 distance between `uh` and the nodal interpolant of
/// `u_exact`, after removing the rigid-mode component (Euclidean) of both.
pub fn discrete_h1_error<F>(mesh: &Mesh, uh: &[f64], u_exact: F) -> Result<f64, AssemblyError>
where
    F: Fn([f64; 2]) -> [f64; 2],
{
    let expected = DofMap::new(Space::P1Vector, mesh).len();
    if uh.len() != expected {
        return Err(AssemblyError::LengthMismatch {
            expected,
            got: uh.len(),
        });
    }
    let rm = rigid_mode_vectors(mesh).orthonormalized();
    let mut e: Vec<f64> = uh
        .iter()
        .zip(nodal_interpolant(mesh, u_exact))
        .map(|(a, b)| a - b)
        .collect();
    rm.project_out(&mut e);
    Ok(discrete_h1_norm(mesh, &e)?.total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble, FormKind};
    use crate::mesh::build_structured_mesh;

    fn solution(lambda: f64) -> ManufacturedSolution {
        ManufacturedSolution::new(MaterialParams::new(0.5, lambda).unwrap())
    }

    #[test]
    fn zero_and_unit_loads() {
        let mesh = build_structured_mesh(4).unwrap();
        let b = assemble_load(&mesh, |_| [0.0, 0.0], 2).unwrap();
        assert!(b.iter().all(|&v| v == 0.0));

        let b = assemble_load(&mesh, |_| [1.0, 0.0], 2).unwrap();
        let nv = mesh.num_vertices();
        assert!(b[nv..].iter().all(|&v| v == 0.0));
        assert!((b[..nv].iter().sum::<f64>() - 1.0).abs() < 1e-14);
        // hat integrals: |supp| / 3 with six (interior), three, two or one triangles
        let h2 = mesh.h() * mesh.h();
        let interior = mesh.vertices().iter().position(|&p| p == [0.5, 0.5]).unwrap();
        assert!((b[interior] - 6.0 * 0.5 * h2 / 3.0).abs() < 1e-15);
        assert!((b[0] - 2.0 * 0.5 * h2 / 3.0).abs() < 1e-15);

        assert_eq!(assemble_load(&mesh, |_| [1.0, 0.0], 1), Err(AssemblyError::InvalidDegree(1)));
        assert_eq!(assemble_load(&mesh, |_| [1.0, 0.0], 9), Err(AssemblyError::InvalidDegree(9)));
    }

    #[test]
    fn forcing_matches_finite_differences_of_stress() {
        let s = 1e-4;
        for lambda in [0.0, 1.0, 10.0] {
            let sol = solution(lambda);
            for i in 1..=5 {
                for j in 1..=5 {
                    let p = [i as f64 / 6.0, j as f64 / 6.0];
                    let sxp = sol.stress([p[0] + s, p[1]]);
                    let sxm = sol.stress([p[0] - s, p[1]]);
                    let syp = sol.stress([p[0], p[1] + s]);
                    let sym = sol.stress([p[0], p[1] - s]);
                    let fd = [
                        -((sxp[0][0] - sxm[0][0]) + (syp[0][1] - sym[0][1])) / (2.0 * s),
                        -((sxp[1][0] - sxm[1][0]) + (syp[1][1] - sym[1][1])) / (2.0 * s),
                    ];
                    let f = sol.forcing(p);
                    let scale = f[0].hypot(f[1]).max(1e-3);
                    for k in 0..2 {
                        assert!((f[k] - fd[k]).abs() < 1e-6 * scale, "lambda {lambda} at {p:?}: {f:?} vs {fd:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let sol = solution(1.0);
        let s = 1e-6;
        for p in [[0.2, 0.3], [0.7, 0.55], [0.9, 0.1]] {
            let g = sol.gradient(p);
            for j in 0..2 {
                let mut pp = p;
                let mut pm = p;
                pp[j] += s;
                pm[j] -= s;
                let (up, um) = (sol.displacement(pp), sol.displacement(pm));
                for k in 0..2 {
                    assert!((g[k][j] - (up[k] - um[k]) / (2.0 * s)).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn boundary_tractions_vanish() {
        for lambda in [0.0, 1.0, 1000.0] {
            let sol = solution(lambda);
            let mut worst: f64 = 0.0;
            for i in 0..10 {
                let s = (i as f64 + 0.5) / 10.0;
                for (p, n) in [
                    ([0.0, s], [-1.0, 0.0]),
                    ([1.0, s], [1.0, 0.0]),
                    ([s, 0.0], [0.0, -1.0]),
                    ([s, 1.0], [0.0, 1.0]),
                ] {
                    let sig = sol.stress(p);
                    let t = [sig[0][0] * n[0] + sig[0][1] * n[1], sig[1][0] * n[0] + sig[1][1] * n[1]];
                    worst = worst.max(t[0].hypot(t[1]));
                }
            }
            assert!(worst <= 1e-12, "lambda {lambda}: traction {worst}");
        }
    }

    #[test]
    fn forcing_is_affine_in_lambda() {
        let (f0, f1, f7) = (manufactured_forcing(0.0), manufactured_forcing(1.0), manufactured_forcing(7.0));
        for p in [[0.1, 0.2], [0.5, 0.5], [0.8, 0.35]] {
            let (a, b, c) = (f0(p), f1(p), f7(p));
            for k in 0..2 {
                assert!((a[k] + 7.0 * (b[k] - a[k]) - c[k]).abs() < 1e-12 * (1.0 + c[k].abs()));
            }
        }
    }

    #[test]
    fn manufactured_load_is_compatible() {
        let mesh = build_structured_mesh(8).unwrap();
        let b = assemble_load(&mesh, manufactured_forcing(1.0), 5).unwrap();
        let norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        for r in rigid_mode_vectors(&mesh).orthonormalized().vectors() {
            let c: f64 = r.iter().zip(&b).map(|(x, y)| x * y).sum();
            assert!(c.abs() <= 1e-6 * norm, "rigid component {c} vs norm {norm}");
        }
        // refining the rule to degree 7 barely moves the load
        let b7 = assemble_load(&mesh, manufactured_forcing(1.0), 7).unwrap();
        let diff = b.iter().zip(&b7).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff <= 1e-6 * norm);
    }

    #[test]
    fn exact_solution_is_l2_orthogonal_to_rigid_modes() {
        let sol = solution(1.0);
        let m = 400;
        let (mut s1, mut s2, mut srot) = (0.0, 0.0, 0.0);
        for i in 0..m {
            for j in 0..m {
                let p = [(i as f64 + 0.5) / m as f64, (j as f64 + 0.5) / m as f64];
                let u = sol.displacement(p);
                s1 += u[0];
                s2 += u[1];
                srot += -p[1] * u[0] + p[0] * u[1];
            }
        }
        let w = 1.0 / (m * m) as f64;
        assert!((s1 * w).abs() < 1e-7 && (s2 * w).abs() < 1e-7 && (srot * w).abs() < 1e-7);
    }

    #[test]
    fn h1_norm_of_linear_field() {
        let mesh = build_structured_mesh(1).unwrap();
        let zero = [0.0; 8];
        let e: Vec<f64> = zero
            .iter()
            .zip(nodal_interpolant(&mesh, |p| p))
            .map(|(a, b)| a - b)
            .collect();
        let parts = discrete_h1_norm(&mesh, &e).unwrap();
        assert!((parts.seminorm - 2f64.sqrt()).abs() < 1e-15);
        // \int x^2 + y^2 over the unit square
        assert!((parts.l2 - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);

        let uh = nodal_interpolant(&mesh, |p| p);
        assert_eq!(discrete_h1_error(&mesh, &uh, |p| p).unwrap(), 0.0);
        assert!(matches!(
            discrete_h1_error(&mesh, &[0.0; 3], |p| p),
            Err(AssemblyError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn h1_norm_agrees_with_assembled_matrices() {
        let mesh = build_structured_mesh(4).unwrap();
        let e: Vec<f64> = (0..2 * mesh.num_vertices()).map(|i| ((i * 37) % 11) as f64 / 11.0).collect();
        let lap = assemble(FormKind::VectorLaplacian, &mesh, None).unwrap();
        let mass = assemble(FormKind::P1VectorMass, &mesh, None).unwrap();
        let q = |a: &crate::sparse::CsrMatrix| a.mul_vec(&e).iter().zip(&e).map(|(x, y)| x * y).sum::<f64>();
        let parts = discrete_h1_norm(&mesh, &e).unwrap();
        assert!((parts.seminorm.powi(2) - q(&lap)).abs() < 1e-12);
        assert!((parts.l2.powi(2) - q(&mass)).abs() < 1e-12);
    }
}
