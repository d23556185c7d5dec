use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::history::write_history_csv;
use super::mtx::{read_matrix_market, read_vector};
use super::registry::SolverKind;
use crate::error::{check_dim, Error, Result};
use crate::mrs3::mrs3_solve_traced;
use crate::operators::{DenseVector, OpCounters, SssOperator};
use crate::problems::{condition_number, make_sss_system, random_unit_vector, AdvectionConfig, DENSE_LIMIT};
use crate::report::{SolveOptions, SolveReport, SolveStatus};

pub const DEFAULT_AUDIT_EVERY: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemSpec {
    Advection(AdvectionConfig),
    /// A matrix file; `alpha` overrides the shift stored in the file. Without
    /// `rhs`, a seeded random unit vector is used.
    File { matrix: PathBuf, alpha: Option<f64>, rhs: Option<PathBuf>, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub solvers: Vec<SolverKind>,
    pub problem: ProblemSpec,
    pub tol: f64,
    pub maxit: usize,
    pub out: PathBuf,
    pub audit_every: usize,
    pub debug_recurrences: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.solvers.is_empty() {
            return Err(Error::InvalidInput("no solver given".into()));
        }
        if let ProblemSpec::Advection(cfg) = &self.problem {
            cfg.validate()?;
        }
        SolveOptions::new(self.tol, self.maxit).audit_every(self.audit_every).validate()
    }

    fn options(&self) -> SolveOptions {
        SolveOptions::new(self.tol, self.maxit).audit_every(self.audit_every)
    }
}

/// Per-iteration averages of the loop counters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerIteration {
    pub matvecs: f64,
    pub vector_updates: f64,
    pub inner_products: f64,
}

impl PerIteration {
    fn of(report: &SolveReport) -> Option<Self> {
        let it = report.iterations as f64;
        let d = report.loop_counters();
        (report.iterations > 0).then(|| PerIteration {
            matvecs: d.matvecs as f64 / it,
            vector_updates: d.vector_updates as f64 / it,
            inner_products: d.inner_products as f64 / it,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecurrenceCheck {
    /// `max |W_j U_j − Q_j|`.
    pub w_recurrence_error: f64,
    /// `max_j |x_0 + Q_j ξ_j − x_j|`, absent when the check could not run.
    pub xi_recovery_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverSummary {
    pub solver: SolverKind,
    /// False when the solver's precondition excludes this problem.
    pub applicable: bool,
    pub note: Option<String>,
    pub status: Option<SolveStatus>,
    pub iterations: usize,
    pub final_residual_estimate: Option<f64>,
    pub true_final_residual: Option<f64>,
    pub breakdown_iteration: Option<usize>,
    pub breakdown_detail: Option<String>,
    pub counters: Option<OpCounters>,
    pub per_iteration: Option<PerIteration>,
    pub history_csv: Option<String>,
    pub recurrences: Option<RecurrenceCheck>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSummary {
    pub problem: ProblemSpec,
    pub n: usize,
    pub alpha: f64,
    pub rhs_norm: f64,
    pub tol: f64,
    pub maxit: usize,
    pub audit_every: usize,
    /// Dense 2-norm condition number, when `n` is small enough.
    pub condition_number: Option<f64>,
    pub solvers: Vec<SolverSummary>,
}

/// Builds `(A, b, x0)` for the configured problem.
pub fn load_problem(spec: &ProblemSpec) -> Result<(SssOperator, DenseVector, DenseVector)> {
    match spec {
        ProblemSpec::Advection(cfg) => make_sss_system(cfg),
        ProblemSpec::File { matrix, alpha, rhs, seed } => {
            let a = read_matrix_market(matrix)?.into_operator(*alpha);
            let n = a.dim();
            let b = match rhs {
                Some(p) => read_vector(p)?,
                None => random_unit_vector(n, *seed),
            };
            check_dim(n, b.len())?;
            Ok((a, b, DenseVector::zeros(n)))
        }
    }
}

fn summarize(kind: SolverKind, a: &SssOperator, b: &[f64], x0: &[f64], cfg: &ExperimentConfig) -> Result<(SolverSummary, Option<SolveReport>)> {
    let mut s = SolverSummary {
        solver: kind,
        applicable: true,
        note: None,
        status: None,
        iterations: 0,
        final_residual_estimate: None,
        true_final_residual: None,
        breakdown_iteration: None,
        breakdown_detail: None,
        counters: None,
        per_iteration: None,
        history_csv: None,
        recurrences: None,
    };
    if let Some(why) = kind.precondition(a, x0) {
        s.applicable = false;
        s.note = Some(why);
        return Ok((s, None));
    }
    let report = if kind == SolverKind::Mrs3 && cfg.debug_recurrences {
        let (report, trace) = mrs3_solve_traced(a, b, x0, cfg.options(), true)?;
        s.recurrences = trace.map(|t| RecurrenceCheck {
            w_recurrence_error: t.w_recurrence_error(),
            xi_recovery_error: t.xi_recovery_error().ok(),
        });
        report
    } else {
        kind.solve(a, b, x0, cfg.options())?
    };
    s.status = Some(report.status);
    s.iterations = report.iterations;
    s.final_residual_estimate = Some(report.final_residual_estimate());
    s.true_final_residual = Some(report.true_final_residual);
    s.breakdown_iteration = report.breakdown_iteration;
    s.breakdown_detail = report.breakdown_detail.clone();
    s.counters = Some(report.counters);
    s.per_iteration = PerIteration::of(&report);
    s.history_csv = Some(format!("{}.csv", kind.name()));
    Ok((s, Some(report)))
}

/// Runs every configured solver (concurrently) and writes one history CSV
/// per solver plus `summary.json` into `cfg.out`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentSummary> {
    cfg.validate()?;
    let (a, b, x0) = load_problem(&cfg.problem)?;
    fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;

    let results: Vec<Result<(SolverSummary, Option<SolveReport>)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .solvers
            .iter()
            .map(|&kind| {
                let (a, b, x0) = (&a, &b, &x0);
                scope.spawn(move || summarize(kind, a, b, x0, cfg))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("solver thread panicked")).collect()
    });

    let mut solvers = Vec::with_capacity(results.len());
    for r in results {
        let (summary, report) = r?;
        if let Some(report) = report {
            write_history_csv(&report, &cfg.out.join(format!("{}.csv", summary.solver.name())))?;
        }
        solvers.push(summary);
    }
    let condition_number = (a.dim() <= DENSE_LIMIT).then(|| condition_number(&a)).transpose()?;
    let summary = ExperimentSummary {
        problem: cfg.problem.clone(),
        n: a.dim(),
        alpha: a.alpha(),
        rhs_norm: b.norm2(),
        tol: cfg.tol,
        maxit: cfg.maxit,
        audit_every: cfg.audit_every,
        condition_number,
        solvers,
    };
    write_summary(&summary, &cfg.out.join("summary.json"))?;
    Ok(summary)
}

fn write_summary(summary: &ExperimentSummary, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(summary).expect("summary is serializable");
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}
