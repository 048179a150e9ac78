use gfem_aux::assembly::{assemble, FormKind};
use gfem_aux::experiment::{
    build_system, run_experiment, BqChoice, ExperimentSpec, InitialGuess, MeshContext,
};
use gfem_aux::mesh::{build_structured_mesh, rigid_mode_vectors, KernelBasis, MaterialParams};
use gfem_aux::solver::{
    bq_exact, bq_smoother, condition_estimate, pcg, AuxiliarySpace, PcgOptions, Preconditioner,
    TransferRealization,
};
use gfem_aux::transfer::transfer_matrix;
use gfem_aux::verify::{dense_generalized_eigs, Operator};

fn context(n: usize) -> MeshContext {
    MeshContext::new(n, BqChoice::Exact, TransferRealization::GramAdjoint).unwrap()
}

fn elasticity_report(n: usize, lambda: f64) -> gfem_aux::solver::PcgReport {
    let ctx = context(n);
    let (a, f) = build_system(4, &ctx.mesh, 0.5, lambda).unwrap();
    let x0 = InitialGuess::RandomSigns { seed: 3 }.vector(a.nrows());
    pcg(&a, &ctx.preconditioner, &f, &x0, &PcgOptions::default(), &ctx.rigid_modes).unwrap()
}

#[test]
fn residuals_stay_in_the_deflated_complement() {
    for lambda in [0.0, 10.0] {
        let report = elasticity_report(8, lambda);
        assert!(report.converged);
        assert!(report.deflation_defect <= 1e-10, "{}", report.deflation_defect);
    }
    let ctx = context(8);
    let (a, f) = build_system(1, &ctx.mesh, 0.5, 0.0).unwrap();
    let x0 = InitialGuess::RandomSigns { seed: 1 }.vector(a.nrows());
    let report = pcg(&a, &ctx.preconditioner, &f, &x0, &PcgOptions::default(), &ctx.rigid_modes).unwrap();
    assert!(report.deflation_defect <= 1e-10);
}

/// `<r_j, z_j>` is a B-norm of the residual, which CG does not minimize;
/// the monotone quantity is the A-norm of the error. Both are recorded.
#[test]
fn energy_error_decreases_and_rz_trend() {
    let ctx = context(8);
    let (a, f) = build_system(3, &ctx.mesh, 0.5, 5.0).unwrap();
    let x0 = InitialGuess::RandomSigns { seed: 9 }.vector(a.nrows());
    let q = ctx.rigid_modes.orthonormalized();
    let mut previous = f64::INFINITY;
    for k in 1..=40 {
        let opts = PcgOptions {
            maxit: k,
            ..PcgOptions::default()
        };
        let report = pcg(&a, &ctx.preconditioner, &f, &x0, &opts, &ctx.rigid_modes).unwrap();
        // zero load: the error is the iterate itself
        let mut e = report.x.clone();
        q.project_out(&mut e);
        let energy: f64 = a.mul_vec(&e).iter().zip(&e).map(|(x, y)| x * y).sum();
        assert!(energy <= previous * (1.0 + 1e-12), "step {k}: {energy} > {previous}");
        previous = energy;
        if report.converged {
            break;
        }
    }
    let report = elasticity_report(8, 5.0);
    let first = report.rz[0];
    let last = *report.rz.last().unwrap();
    assert!(last < 1e-12 * first);
}

#[test]
fn lanczos_matches_dense_spectrum_on_small_mesh() {
    let ctx = context(4);
    let (a, f) = build_system(4, &ctx.mesh, 0.5, 1.0).unwrap();
    let x0 = InitialGuess::RandomSigns { seed: 5 }.vector(a.nrows());
    let report = pcg(&a, &ctx.preconditioner, &f, &x0, &PcgOptions::default(), &ctx.rigid_modes).unwrap();
    let lanczos = condition_estimate(&report).unwrap();
    let dense = dense_generalized_eigs(&a, Operator::Preconditioner(&ctx.preconditioner), &ctx.rigid_modes)
        .unwrap()
        .kappa;
    assert!((lanczos - dense).abs() <= 0.05 * dense, "{lanczos} vs {dense}");
}

#[test]
fn condition_number_is_mesh_independent() {
    let mut spec = ExperimentSpec::defaults(3).unwrap();
    spec.meshes = vec![16, 32, 64];
    spec.lambdas = vec![1.0];
    let k: Vec<f64> = run_experiment(&spec).unwrap().iter().map(|r| r.kappa.unwrap()).collect();
    let (lo, hi) = k.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    assert!(hi / lo < 1.25, "{k:?}");
}

#[test]
fn condition_number_grows_at_most_linearly_in_lambda() {
    let mut spec = ExperimentSpec::defaults(3).unwrap();
    spec.meshes = vec![32];
    spec.lambdas = vec![1.0, 10.0, 100.0];
    let k: Vec<f64> = run_experiment(&spec).unwrap().iter().map(|r| r.kappa.unwrap()).collect();
    assert!(k[1] / k[0] <= 12.0 && k[2] / k[1] <= 12.0, "{k:?}");
}

#[test]
fn more_smoothing_sweeps_improve_the_p2_preconditioner() {
    let mesh = build_structured_mesh(4).unwrap();
    let aq = assemble(FormKind::P2Laplacian, &mesh, None).unwrap();
    let constants = KernelBasis::constants(aq.nrows());
    let kappas: Vec<f64> = [1, 2, 4]
        .iter()
        .map(|&s| {
            let b = bq_smoother(&aq, s).unwrap();
            dense_generalized_eigs(&aq, Operator::Preconditioner(&b), &constants).unwrap().kappa
        })
        .collect();
    assert!(kappas.windows(2).all(|w| w[1] < w[0]), "{kappas:?}");
    let exact = bq_exact(&aq).unwrap();
    let k = dense_generalized_eigs(&aq, Operator::Preconditioner(&exact), &constants).unwrap().kappa;
    assert!((k - 1.0).abs() < 1e-9);
}

#[test]
fn smoothed_auxiliary_preconditioner_still_converges() {
    let mut spec = ExperimentSpec::defaults(2).unwrap();
    spec.meshes = vec![8, 16];
    spec.bq = BqChoice::Smoother { sweeps: 2 };
    let rows = run_experiment(&spec).unwrap();
    assert!(rows.iter().all(|r| r.converged));
}

/// With plain `P^T` in place of the Gram adjoint the condition number
/// grows under refinement.
#[test]
fn transpose_realization_degrades_with_refinement() {
    let kappa = |n: usize| {
        let mesh = build_structured_mesh(n).unwrap();
        let p = transfer_matrix(&mesh);
        let aq = assemble(FormKind::P2Laplacian, &mesh, None).unwrap();
        let rm = rigid_mode_vectors(&mesh);
        let b = AuxiliarySpace::new(
            &p,
            &aq,
            Box::new(bq_exact(&aq).unwrap()),
            TransferRealization::Transpose,
            &rm,
        )
        .unwrap();
        let aw = assemble(FormKind::Epsilon, &mesh, None).unwrap();
        dense_generalized_eigs(&aw, Operator::Preconditioner(&b as &dyn Preconditioner), &rm)
            .unwrap()
            .kappa
    };
    let (k4, k8) = (kappa(4), kappa(8));
    assert!(k8 > 3.0 * k4, "{k4} -> {k8}");
}

#[test]
fn reruns_are_bitwise_identical() {
    let mut spec = ExperimentSpec::defaults(5).unwrap();
    spec.meshes = vec![16];
    spec.lambdas = vec![100.0];
    let a = run_experiment(&spec).unwrap();
    let b = run_experiment(&spec).unwrap();
    assert_eq!(a[0].iterations, b[0].iterations);
    assert_eq!(a[0].kappa.unwrap().to_bits(), b[0].kappa.unwrap().to_bits());
    assert_eq!(a[0].h1_error.unwrap().to_bits(), b[0].h1_error.unwrap().to_bits());
}

#[test]
fn elasticity_parameters_from_poisson_ratio() {
    // the large-lambda table labels its columns by Poisson ratio
    for (lambda, nu) in [(50.0, 0.49505), (100.0, 0.49751), (500.0, 0.49950), (1000.0, 0.49975)] {
        let p = MaterialParams::new(0.5, lambda).unwrap();
        assert!((p.poisson_ratio() - nu).abs() < 5e-6);
    }
}
