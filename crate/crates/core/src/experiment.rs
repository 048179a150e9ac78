//! Driver for the five numerical studies and their table output.
//!
//! | id | operator | load |
//! |----|----------|------|
//! | 1 | vector Laplacian `A_1` | 0 |
//! | 2 | strain form (`lambda = 0`) | 0 |
//! | 3 | elasticity | 0 |
//! | 4, 5 | elasticity | manufactured |
//!
//! Every study starts CG from a seeded random `+-1` vector by default. The
//! alternating vector `(1,-1,...)` is available but degenerate here: in the
//! component-major numbering it is an eigenvector of the preconditioned
//! strain operator, so a zero-load solve stops after one step, and with a
//! load it makes the initial residual so large that the relative stopping
//! test is met early on fine meshes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::{
    assemble, assemble_load, discrete_h1_error, AssemblyError, FormKind, ManufacturedSolution,
};
use crate::mesh::{build_structured_mesh, rigid_mode_vectors, KernelBasis, MaterialParams, Mesh, MeshError};
use crate::solver::{
    bq_exact, bq_smoother, condition_estimate, pcg, AuxiliarySpace, PcgOptions, PcgReport,
    Preconditioner, SolverError, TransferRealization,
};
use crate::sparse::CsrMatrix;
use crate::transfer::transfer_matrix;
use crate::verify::{dense_generalized_eigs, Operator, VerifyError};

/// Largest mesh for which `verify` computes the dense spectrum.
pub const VERIFY_MAX_N: usize = 8;

/// Allowed relative gap between the Lanczos and dense condition numbers.
pub const VERIFY_TOLERANCE: f64 = 0.05;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment spec: {0}")]
    Invalid(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BqChoice {
    Exact,
    Smoother { sweeps: usize },
}

impl FromStr for BqChoice {
    type Err = ExperimentError;

    /// `exact` or `sgs:K`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "exact" {
            return Ok(BqChoice::Exact);
        }
        s.strip_prefix("sgs:")
            .and_then(|k| k.parse().ok())
            .filter(|&k| k > 0)
            .map(|sweeps| BqChoice::Smoother { sweeps })
            .ok_or_else(|| ExperimentError::Invalid(format!("B_q choice `{s}`: expected exact or sgs:K")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitialGuess {
    /// `(1, -1, 1, -1, ...)` in dof order.
    Alternating,
    /// Independent `+-1` entries from a seeded generator.
    RandomSigns { seed: u64 },
}

impl InitialGuess {
    pub fn vector(self, len: usize) -> Vec<f64> {
        match self {
            InitialGuess::Alternating => (0..len).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect(),
            InitialGuess::RandomSigns { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..len).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Markdown,
}

impl FromStr for TableFormat {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "md" | "markdown" => Ok(TableFormat::Markdown),
            _ => Err(ExperimentError::Invalid(format!("format `{s}`: expected csv or md"))),
        }
    }
}

pub const DEFAULT_SEED: u64 = 2024;

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub experiment: u8,
    /// Subdivisions per side; `h = 1/n`.
    pub meshes: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub mu: f64,
    pub bq: BqChoice,
    pub transfer: TransferRealization,
    pub tol: f64,
    pub maxit: usize,
    pub initial_guess: InitialGuess,
    pub verify: bool,
    pub dump_dir: Option<PathBuf>,
}

impl ExperimentSpec {
    /// Default mesh and parameter lists for each study.
    pub fn defaults(experiment: u8) -> Result<Self, ExperimentError> {
        let (meshes, lambdas): (Vec<usize>, Vec<f64>) = match experiment {
            1 | 2 => (vec![4, 8, 16, 32, 64], vec![0.0]),
            3 | 4 => (vec![4, 8, 16, 32, 64], vec![1.0, 5.0, 10.0]),
            5 => (vec![8, 16, 32, 64, 128], vec![50.0, 100.0, 500.0, 1000.0]),
            other => return Err(ExperimentError::Invalid(format!("experiment {other} (expected 1-5)"))),
        };
        Ok(Self {
            experiment,
            meshes,
            lambdas,
            mu: 0.5,
            bq: BqChoice::Exact,
            transfer: TransferRealization::GramAdjoint,
            tol: 1e-8,
            maxit: 2000,
            initial_guess: InitialGuess::RandomSigns { seed: DEFAULT_SEED },
            verify: false,
            dump_dir: None,
        })
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |msg: String| Err(ExperimentError::Invalid(msg));
        if !(1..=5).contains(&self.experiment) {
            return bad(format!("experiment {} (expected 1-5)", self.experiment));
        }
        if self.meshes.is_empty() || self.meshes.contains(&0) {
            return bad("mesh list must be nonempty with n >= 1".into());
        }
        if self.lambdas.is_empty() || self.lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return bad("lambda list must be nonempty and non-negative".into());
        }
        if self.experiment <= 2 && self.lambdas != [0.0] {
            return bad(format!("experiment {} has no lambda parameter", self.experiment));
        }
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return bad(format!("mu = {}", self.mu));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return bad(format!("tolerance {} outside (0, 1)", self.tol));
        }
        if self.maxit == 0 {
            return bad("maxit must be positive".into());
        }
        Ok(())
    }
}

fn has_load(experiment: u8) -> bool {
    experiment >= 4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub experiment: u8,
    pub n: usize,
    pub h: f64,
    pub lambda: f64,
    pub iterations: usize,
    pub kappa: Option<f64>,
    pub h1_error: Option<f64>,
    /// Wall time of assembling the operator and running PCG; the
    /// preconditioner setup shared by all rows of a mesh is not included.
    pub seconds: f64,
    pub converged: bool,
    pub true_residual: f64,
    pub dense_kappa: Option<f64>,
}

impl TableRow {
    /// `None` when no dense value was computed.
    pub fn verified(&self) -> Option<bool> {
        let dense = self.dense_kappa?;
        let lanczos = self.kappa?;
        Some((lanczos - dense).abs() <= VERIFY_TOLERANCE * dense)
    }
}

/// Everything a single solve needs on one mesh.
pub struct MeshContext {
    pub mesh: Mesh,
    pub preconditioner: AuxiliarySpace,
    pub rigid_modes: KernelBasis,
}

impl MeshContext {
    pub fn new(n: usize, bq: BqChoice, transfer: TransferRealization) -> Result<Self, ExperimentError> {
        let mesh = build_structured_mesh(n)?;
        let p = transfer_matrix(&mesh);
        let aq = assemble(FormKind::P2Laplacian, &mesh, None)?;
        let bq_op: Box<dyn Preconditioner> = match bq {
            BqChoice::Exact => Box::new(bq_exact(&aq)?),
            BqChoice::Smoother { sweeps } => Box::new(bq_smoother(&aq, sweeps)?),
        };
        let rigid_modes = rigid_mode_vectors(&mesh);
        let preconditioner = AuxiliarySpace::new(&p, &aq, bq_op, transfer, &rigid_modes)?;
        Ok(Self {
            mesh,
            preconditioner,
            rigid_modes,
        })
    }
}

/// The system matrix and load of one table entry.
pub fn build_system(
    experiment: u8,
    mesh: &Mesh,
    mu: f64,
    lambda: f64,
) -> Result<(CsrMatrix, Vec<f64>), ExperimentError> {
    let dim = 2 * mesh.num_vertices();
    if experiment == 1 {
        return Ok((assemble(FormKind::VectorLaplacian, mesh, None)?, vec![0.0; dim]));
    }
    let params = MaterialParams::new(mu, lambda)?;
    let a = assemble(FormKind::Elasticity, mesh, Some(params))?;
    let f = if has_load(experiment) {
        let solution = ManufacturedSolution::new(params);
        let mut b = assemble_load(mesh, |p| solution.forcing(p), 7)?;
        // quadrature leaves O(1e-6) rigid-mode moments on coarse meshes
        rigid_mode_vectors(mesh).orthonormalized().project_out(&mut b);
        b
    } else {
        vec![0.0; dim]
    };
    Ok((a, f))
}

/// Solves one `(n, lambda)` entry on a prepared mesh.
pub fn run_row(
    spec: &ExperimentSpec,
    ctx: &MeshContext,
    lambda: f64,
) -> Result<(TableRow, PcgReport), ExperimentError> {
    let start = Instant::now();
    let (a, f) = build_system(spec.experiment, &ctx.mesh, spec.mu, lambda)?;
    let x0 = spec.initial_guess.vector(a.nrows());
    let opts = PcgOptions {
        tol: spec.tol,
        maxit: spec.maxit,
        ..PcgOptions::default()
    };
    let mut report = pcg(&a, &ctx.preconditioner, &f, &x0, &opts, &ctx.rigid_modes)?;
    let seconds = start.elapsed().as_secs_f64();
    report.kappa = condition_estimate(&report).ok();

    let h1_error = if has_load(spec.experiment) {
        let solution = ManufacturedSolution::new(MaterialParams::new(spec.mu, lambda)?);
        Some(discrete_h1_error(&ctx.mesh, &report.x, |p| solution.displacement(p))?)
    } else {
        None
    };
    let n = ctx.mesh.n();
    let dense_kappa = if spec.verify && n <= VERIFY_MAX_N {
        let s = dense_generalized_eigs(&a, Operator::Preconditioner(&ctx.preconditioner), &ctx.rigid_modes)?;
        Some(s.kappa)
    } else {
        None
    };
    if let Some(dir) = &spec.dump_dir {
        let name = format!("n{n}_A_exp{}_lambda{lambda}.mtx", spec.experiment);
        write_matrix(&dir.join(name), &a, true)?;
    }
    let row = TableRow {
        experiment: spec.experiment,
        n,
        h: ctx.mesh.h(),
        lambda,
        iterations: report.iterations,
        kappa: report.kappa,
        h1_error,
        seconds,
        converged: report.converged,
        true_residual: report.true_residual,
        dense_kappa,
    };
    Ok((row, report))
}

fn write_matrix(path: &Path, m: &CsrMatrix, symmetric: bool) -> Result<(), ExperimentError> {
    let out = BufWriter::new(File::create(path)?);
    m.write_matrix_market(out, symmetric)?;
    Ok(())
}

fn dump_mesh_matrices(dir: &Path, mesh: &Mesh) -> Result<(), ExperimentError> {
    std::fs::create_dir_all(dir)?;
    let n = mesh.n();
    write_matrix(&dir.join(format!("n{n}_P.mtx")), transfer_matrix(mesh).matrix(), false)?;
    let aq = assemble(FormKind::P2Laplacian, mesh, None)?;
    write_matrix(&dir.join(format!("n{n}_Aq.mtx")), &aq, true)?;
    Ok(())
}

/// Runs every `(n, lambda)` pair. Rows are grouped by lambda in spec order
/// and sorted by decreasing `h` within a group. Non-convergence is recorded
/// in the row, not raised.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<TableRow>, ExperimentError> {
    spec.validate()?;
    let mut meshes = spec.meshes.clone();
    meshes.sort_unstable();
    meshes.dedup();
    let mut rows = Vec::with_capacity(meshes.len() * spec.lambdas.len());
    for &n in &meshes {
        let ctx = MeshContext::new(n, spec.bq, spec.transfer)?;
        if let Some(dir) = &spec.dump_dir {
            dump_mesh_matrices(dir, &ctx.mesh)?;
        }
        for (k, &lambda) in spec.lambdas.iter().enumerate() {
            let (row, _) = run_row(spec, &ctx, lambda)?;
            rows.push((k, row));
        }
    }
    rows.sort_by_key(|(k, row)| (*k, row.n));
    Ok(rows.into_iter().map(|(_, row)| row).collect())
}

fn fmt_sci(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2e}")).unwrap_or_default()
}

fn fmt_lambda(l: f64) -> String {
    format!("{l}")
}

fn lambda_groups(rows: &[TableRow]) -> Vec<(f64, Vec<&TableRow>)> {
    let mut groups: Vec<(f64, Vec<&TableRow>)> = Vec::new();
    for row in rows {
        match groups.iter_mut().find(|(l, _)| *l == row.lambda) {
            Some((_, g)) => g.push(row),
            None => groups.push((row.lambda, vec![row])),
        }
    }
    groups
}

/// Renders rows as CSV (`h,iter,kappa,h1_error,seconds`, one `# lambda=`
/// comment line per group when several lambdas are present) or as a
/// markdown table with one column group per lambda.
pub fn emit_table(rows: &[TableRow], format: TableFormat) -> Result<String, ExperimentError> {
    if rows.is_empty() {
        return Err(ExperimentError::Invalid("no rows to emit".into()));
    }
    let groups = lambda_groups(rows);
    let grouped = groups.len() > 1;
    let mut out = String::new();
    match format {
        TableFormat::Csv => {
            out.push_str("h,iter,kappa,h1_error,seconds\n");
            for (lambda, group) in &groups {
                if grouped {
                    writeln!(out, "# lambda={}", fmt_lambda(*lambda)).unwrap();
                }
                for r in group {
                    writeln!(
                        out,
                        "{},{},{},{},{:.3}",
                        r.h,
                        r.iterations,
                        fmt_sci(r.kappa),
                        fmt_sci(r.h1_error),
                        r.seconds
                    )
                    .unwrap();
                }
            }
        }
        TableFormat::Markdown => {
            let suffix = |l: f64| if grouped { format!(" (lambda={})", fmt_lambda(l)) } else { String::new() };
            let with_error = rows.iter().any(|r| r.h1_error.is_some());
            let mut header = vec!["h".to_string()];
            for (l, _) in &groups {
                header.push(format!("iter{}", suffix(*l)));
                header.push(format!("kappa{}", suffix(*l)));
                if with_error {
                    header.push(format!("h1_error{}", suffix(*l)));
                }
                header.push(format!("seconds{}", suffix(*l)));
            }
            writeln!(out, "| {} |", header.join(" | ")).unwrap();
            writeln!(out, "|{}", "---|".repeat(header.len())).unwrap();
            let mut by_n: BTreeMap<usize, Vec<Option<&TableRow>>> = BTreeMap::new();
            for (g, (_, group)) in groups.iter().enumerate() {
                for r in group {
                    by_n.entry(r.n).or_insert_with(|| vec![None; groups.len()])[g] = Some(r);
                }
            }
            for (n, cells) in by_n {
                let mut line = vec![format!("1/{n}")];
                for cell in cells {
                    match cell {
                        Some(r) => {
                            line.push(r.iterations.to_string());
                            line.push(fmt_sci(r.kappa));
                            if with_error {
                                line.push(fmt_sci(r.h1_error));
                            }
                            line.push(format!("{:.3}", r.seconds));
                        }
                        None => line.extend(std::iter::repeat_n(String::new(), if with_error { 4 } else { 3 })),
                    }
                }
                writeln!(out, "| {} |", line.join(" | ")).unwrap();
            }
        }
    }
    Ok(out)
}
