use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, ValueEnum};
use gfem_aux::experiment::{
    emit_table, run_experiment, BqChoice, ExperimentSpec, InitialGuess, TableFormat, DEFAULT_SEED,
};
use gfem_aux::solver::TransferRealization;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Transfer {
    Gram,
    Transpose,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StartVector {
    Alternating,
    Random,
}

/// Runs one of the five preconditioner studies and prints its table.
#[derive(Debug, Parser)]
#[command(name = "gfem-aux", version)]
struct Args {
    /// Study to run (1-5).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
    experiment: u8,

    /// Mesh subdivisions per side, e.g. `4,8,16` (a `1/` prefix is accepted).
    #[arg(long = "h-list", value_delimiter = ',', value_parser = parse_n)]
    h_list: Option<Vec<usize>>,

    /// Lame lambda values, e.g. `1,5,10` (studies 3-5 only).
    #[arg(long, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,

    #[arg(long, default_value_t = 0.5)]
    mu: f64,

    /// `exact` or `sgs:K` for K symmetric Gauss-Seidel sweeps.
    #[arg(long, default_value = "exact")]
    bq: String,

    #[arg(long, value_enum, default_value_t = Transfer::Gram)]
    transfer: Transfer,

    #[arg(long, default_value_t = 1e-8)]
    tol: f64,

    #[arg(long, default_value_t = 2000)]
    maxit: usize,

    /// `md` or `csv`.
    #[arg(long, default_value = "md")]
    format: String,

    /// Compare the Lanczos estimate with a dense spectrum for n <= 8.
    #[arg(long)]
    verify: bool,

    /// Write P, A_q and every system matrix as MatrixMarket files.
    #[arg(long = "dump-matrices")]
    dump_matrices: Option<PathBuf>,

    /// CG starting vector: seeded random signs or `(1,-1,...)`.
    #[arg(long, value_enum, default_value_t = StartVector::Random)]
    x0: StartVector,

    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Also write all row data as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

fn parse_n(s: &str) -> Result<usize, String> {
    let digits = s.trim().strip_prefix("1/").unwrap_or(s.trim());
    match digits.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("`{s}` is not a positive subdivision count")),
    }
}

fn spec_from(args: &Args) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::defaults(args.experiment)?;
    if let Some(meshes) = &args.h_list {
        spec.meshes = meshes.clone();
    }
    if let Some(lambdas) = &args.lambda {
        if args.experiment <= 2 {
            bail!("experiment {} does not take --lambda", args.experiment);
        }
        spec.lambdas = lambdas.clone();
    }
    spec.mu = args.mu;
    spec.bq = args.bq.parse::<BqChoice>()?;
    spec.transfer = match args.transfer {
        Transfer::Gram => TransferRealization::GramAdjoint,
        Transfer::Transpose => TransferRealization::Transpose,
    };
    spec.tol = args.tol;
    spec.maxit = args.maxit;
    spec.verify = args.verify;
    spec.dump_dir = args.dump_matrices.clone();
    spec.initial_guess = match args.x0 {
        StartVector::Alternating => InitialGuess::Alternating,
        StartVector::Random => InitialGuess::RandomSigns { seed: args.seed },
    };
    spec.validate()?;
    Ok(spec)
}

fn run(args: &Args) -> Result<ExitCode> {
    let format: TableFormat = args.format.parse()?;
    let spec = spec_from(args)?;
    let rows = run_experiment(&spec)?;
    print!("{}", emit_table(&rows, format)?);
    if let Some(path) = &args.json {
        let text = serde_json::to_string_pretty(&rows)?;
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }

    let mut code = ExitCode::SUCCESS;
    for r in rows.iter().filter(|r| !r.converged) {
        eprintln!("no convergence: n={} lambda={} after {} iterations", r.n, r.lambda, r.iterations);
        code = ExitCode::from(2);
    }
    for r in &rows {
        if let (Some(ok), Some(dense), Some(kappa)) = (r.verified(), r.dense_kappa, r.kappa) {
            let verdict = if ok { "ok" } else { "FAILED" };
            eprintln!("verify n={} lambda={}: lanczos {kappa:.4} dense {dense:.4} {verdict}", r.n, r.lambda);
            if !ok && code == ExitCode::SUCCESS {
                code = ExitCode::from(3);
            }
        }
    }
    Ok(code)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_sizes_accept_fraction_syntax() {
        assert_eq!(parse_n("1/16"), Ok(16));
        assert_eq!(parse_n("8"), Ok(8));
        assert!(parse_n("0").is_err());
        assert!(parse_n("x").is_err());
    }

    #[test]
    fn lambda_rejected_for_strain_study() {
        let args = Args::parse_from(["gfem-aux", "--experiment", "2", "--lambda", "1"]);
        assert!(spec_from(&args).is_err());
    }

    #[test]
    fn defaults_follow_the_study() {
        let args = Args::parse_from(["gfem-aux", "--experiment", "5"]);
        let spec = spec_from(&args).unwrap();
        assert_eq!(spec.meshes, vec![8, 16, 32, 64, 128]);
        assert_eq!(spec.initial_guess, InitialGuess::RandomSigns { seed: DEFAULT_SEED });
        let args = Args::parse_from(["gfem-aux", "--experiment", "1", "--seed", "5"]);
        assert_eq!(spec_from(&args).unwrap().initial_guess, InitialGuess::RandomSigns { seed: 5 });
    }
}
