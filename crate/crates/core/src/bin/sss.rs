use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sss_krylov::harness::{
    exit_code, parse_solver_list, run_experiment, ExperimentConfig, ProblemSpec, DEFAULT_AUDIT_EVERY,
};
use sss_krylov::problems::AdvectionConfig;
use sss_krylov::Error;

#[derive(Parser)]
#[command(name = "sss", version, about = "Krylov solvers for shifted skew-symmetric systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more solvers on a problem and write histories and a summary.
    Solve(SolveArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Comma-separated solver names: mrs3, cgw, gencg, trunc-gcr, full-gcr,
    /// hwl, cgnr, gmres, gmres3, bicgstab.
    #[arg(long, default_value = "mrs3")]
    solver: String,
    #[arg(long, default_value_t = 20)]
    n1: usize,
    #[arg(long, default_value_t = 20)]
    n2: usize,
    /// Shift; with --matrix it overrides the value stored in the file.
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    gamma: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 400)]
    maxit: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Matrix Market file (skew-symmetric, or general of the form αI + S).
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Right-hand side for --matrix (Matrix Market array or plain numbers).
    #[arg(long, requires = "matrix")]
    rhs: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_AUDIT_EVERY)]
    audit_every: usize,
    /// Check the W and ξ recurrences of mrs3 against dense reconstructions.
    #[arg(long)]
    debug_recurrences: bool,
}

fn config(args: SolveArgs) -> Result<ExperimentConfig, Error> {
    let problem = match args.matrix {
        Some(matrix) => ProblemSpec::File { matrix, alpha: args.alpha, rhs: args.rhs, seed: args.seed },
        None => ProblemSpec::Advection(AdvectionConfig::new(
            args.n1,
            args.n2,
            args.gamma,
            args.alpha.unwrap_or(1.0),
            args.seed,
        )),
    };
    Ok(ExperimentConfig {
        solvers: parse_solver_list(&args.solver)?,
        problem,
        tol: args.tol,
        maxit: args.maxit,
        out: args.out,
        audit_every: args.audit_every,
        debug_recurrences: args.debug_recurrences,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.3e}"))
}

fn main() -> ExitCode {
    let Command::Solve(args) = Cli::parse().command;
    let out = args.out.clone();
    let result = config(args).and_then(|cfg| run_experiment(&cfg));
    match result {
        Ok(summary) => {
            println!("n = {}, alpha = {:e}, kappa = {}", summary.n, summary.alpha, fmt_opt(summary.condition_number));
            for s in &summary.solvers {
                match s.status {
                    Some(status) => println!(
                        "{:<10} {:<14} it = {:<5} res = {} true = {}{}",
                        s.solver.name(),
                        format!("{status:?}"),
                        s.iterations,
                        fmt_opt(s.final_residual_estimate),
                        fmt_opt(s.true_final_residual),
                        s.breakdown_detail.as_deref().map(|d| format!("  ({d})")).unwrap_or_default(),
                    ),
                    None => println!("{:<10} not applicable: {}", s.solver.name(), s.note.as_deref().unwrap_or("")),
                }
            }
            println!("wrote {}", out.join("summary.json").display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
