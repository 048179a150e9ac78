use gfem_aux::assembly::{assemble, FormKind};
use gfem_aux::mesh::{build_structured_mesh, rigid_mode_vectors};
use gfem_aux::sparse::CsrMatrix;
use gfem_aux::transfer::{gfem_gram, gfem_value, transfer_matrix};
use gfem_aux::verify::rank_defect;
use proptest::prelude::*;

fn rank(m: &CsrMatrix) -> usize {
    m.nrows().min(m.ncols()) - rank_defect(m)
}

#[test]
fn transfer_rank_is_dofs_minus_rigid_modes() {
    for n in [1, 2, 4] {
        let mesh = build_structured_mesh(n).unwrap();
        let p = transfer_matrix(&mesh);
        assert_eq!(rank(p.matrix()), 2 * mesh.num_vertices() - 3, "n = {n}");
    }
}

#[test]
fn gram_matrix_kernel_is_exactly_the_rigid_modes() {
    let mesh = build_structured_mesh(2).unwrap();
    let p = transfer_matrix(&mesh);
    let aq = assemble(FormKind::P2Laplacian, &mesh, None).unwrap();
    let g = gfem_gram(&p, &aq).unwrap();
    assert_eq!(g.nrows(), 18);
    assert_eq!(rank(&g), 15);
    assert!(g.symmetry_defect() < 1e-14);
    for r in rigid_mode_vectors(&mesh).vectors() {
        let gr = g.mul_vec(r);
        let form: f64 = gr.iter().zip(r).map(|(a, b)| a * b).sum();
        assert!(form.abs() < 1e-13);
    }
}

#[test]
fn transfer_exports_as_general_matrix_market() {
    let mesh = build_structured_mesh(1).unwrap();
    let p = transfer_matrix(&mesh);
    let mut out = Vec::new();
    p.matrix().write_matrix_market(&mut out, false).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("%%MatrixMarket matrix coordinate real general"));
    let header: Vec<usize> = lines
        .next()
        .unwrap()
        .split_whitespace()
        .map(|t| t.parse().unwrap())
        .collect();
    // 4 vertices + 5 edges by 8 vector dofs; 4 axis edges x 2 + 1 diagonal x 4
    assert_eq!(header, vec![9, 8, 12]);
    assert_eq!(lines.count(), 12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The matrix and the defining expression agree at arbitrary interior
    /// points once the P2 interpolant is evaluated there.
    #[test]
    fn quadratic_interpolant_matches_direct_formula(
        coeffs in prop::collection::vec(-1.0f64..1.0, 18),
        px in 0.0f64..1.0,
        py in 0.0f64..1.0,
    ) {
        let mesh = build_structured_mesh(2).unwrap();
        let pu = transfer_matrix(&mesh).apply(&coeffs);
        let (t, bary) = mesh.locate([px, py]).unwrap();
        let edges = mesh.triangle_edges()[t];
        let nv = mesh.num_vertices();
        // u_G vanishes at vertices, so only the edge bubbles contribute;
        // local edge k joins local vertices k and k+1
        let value: f64 = (0..3)
            .map(|k| 4.0 * bary[k] * bary[(k + 1) % 3] * pu[nv + edges[k]])
            .sum();
        let direct = gfem_value(&mesh, &coeffs, [px, py]).unwrap();
        prop_assert!((value - direct).abs() < 1e-12, "{} vs {}", value, direct);
    }
}
