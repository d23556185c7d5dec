//! Solve options, the per-solve report, and helpers shared by all solvers
//! (true-residual auditing, convergence confirmation, stagnation tracking).

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::operators::{norm2, DenseVector, OpCounters, SssOperator};

/// How a solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    /// A recurrence denominator vanished before the solution was reached.
    Breakdown,
    /// No relative improvement of 1e-14 over 50 consecutive iterations.
    Stagnated,
    /// The Krylov space was exhausted without meeting the tolerance.
    Exhausted,
    /// The rotated Ritz diagonal vanished.
    Singular,
    /// The recurred residual met the tolerance but the true residual did not,
    /// even after the extra confirmation iterations.
    EstimateDrift,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Relative tolerance: iteration stops once the (recurred) residual is
    /// at most `tol·‖b‖₂` (or `tol` when `b = 0`).
    pub tol: f64,
    pub maxit: usize,
    /// Recompute `‖b − A x_j‖₂` every this many iterations (uncounted in the
    /// solver's own counters).
    pub audit_every: Option<usize>,
    /// Keep a copy of every iterate `x_j` in the report.
    pub record_iterates: bool,
}

impl SolveOptions {
    pub fn new(tol: f64, maxit: usize) -> Self {
        Self { tol, maxit, audit_every: None, record_iterates: false }
    }

    pub fn audit_every(mut self, every: usize) -> Self {
        self.audit_every = Some(every);
        self
    }

    pub fn record_iterates(mut self, on: bool) -> Self {
        self.record_iterates = on;
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidInput(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.maxit == 0 {
            return Err(Error::InvalidInput("maxit must be at least 1".into()));
        }
        if self.audit_every == Some(0) {
            return Err(Error::InvalidInput("audit interval must be at least 1".into()));
        }
        Ok(())
    }

    /// Stopping threshold for a right-hand side of norm `b_norm`.
    pub fn threshold(&self, b_norm: f64) -> f64 {
        if b_norm > 0.0 {
            self.tol * b_norm
        } else {
            self.tol
        }
    }

    /// Bound the true residual must satisfy for a `Converged` status.
    pub fn acceptance_bound(&self, b_norm: f64) -> f64 {
        self.tol * (1.0 + b_norm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Audit {
    pub iteration: usize,
    pub true_residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub solver: String,
    pub status: SolveStatus,
    pub iterations: usize,
    /// `‖r_j‖₂` as tracked by the solver, `j = 0..=iterations`.
    pub residual_history: Vec<f64>,
    pub true_final_residual: f64,
    /// Work done by the solver itself.
    pub counters: OpCounters,
    /// Counter values when the iteration loop was entered.
    pub setup_counters: OpCounters,
    /// Work spent on audits and final confirmation (not part of `counters`).
    pub audit_counters: OpCounters,
    pub audits: Vec<Audit>,
    pub breakdown_detail: Option<String>,
    /// Iteration number (1-based) at which a breakdown was detected.
    pub breakdown_iteration: Option<usize>,
    pub x: DenseVector,
    /// `x_1 .. x_k` when [`SolveOptions::record_iterates`] is set.
    #[serde(skip)]
    pub iterates: Vec<DenseVector>,
}

impl SolveReport {
    /// Counters for the loop only (total minus setup).
    pub fn loop_counters(&self) -> OpCounters {
        self.counters.since(&self.setup_counters)
    }

    pub fn final_residual_estimate(&self) -> f64 {
        *self.residual_history.last().expect("history always has the initial residual")
    }
}

/// Bookkeeping shared by every solver loop.
pub(crate) struct Tracker<'a> {
    pub a: &'a SssOperator,
    pub b: &'a [f64],
    pub b_norm: f64,
    pub opts: SolveOptions,
    pub history: Vec<f64>,
    pub audits: Vec<Audit>,
    pub audit_ops: OpCounters,
    pub iterates: Vec<DenseVector>,
    stagnation: StagnationGuard,
    confirmations_failed: usize,
}

pub(crate) const MAX_DRIFT_RETRIES: usize = 5;

/// Outcome of [`Tracker::check_converged`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Confirm {
    No,
    Yes,
    Drift,
}

impl<'a> Tracker<'a> {
    pub fn new(a: &'a SssOperator, b: &'a [f64], opts: SolveOptions) -> Result<Self> {
        opts.validate()?;
        check_dim(a.dim(), b.len())?;
        Ok(Self {
            a,
            b,
            b_norm: norm2(b),
            opts,
            history: Vec::new(),
            audits: Vec::new(),
            audit_ops: OpCounters::new(),
            iterates: Vec::new(),
            stagnation: StagnationGuard::default(),
            confirmations_failed: 0,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.opts.threshold(self.b_norm)
    }

    /// Records `‖r_j‖` and, at audit points, the true residual of `x`.
    /// `x` is `None` for solvers that do not hold the iterate explicitly.
    pub fn record(&mut self, j: usize, residual: f64, x: Option<&[f64]>) {
        self.history.push(residual);
        if let Some(x) = x {
            if self.opts.audit_every.is_some_and(|k| j.is_multiple_of(k)) {
                self.audit(j, x);
            }
            if self.opts.record_iterates && j > 0 {
                self.iterates.push(DenseVector::new(x.to_vec()).expect("finite iterate"));
            }
        }
    }

    pub fn audit(&mut self, j: usize, x: &[f64]) -> f64 {
        let r = self.true_residual(x);
        self.audits.push(Audit { iteration: j, true_residual: r });
        r
    }

    pub fn true_residual(&mut self, x: &[f64]) -> f64 {
        let mut r = vec![0.0; self.a.dim()];
        self.a.residual_into(self.b, x, &mut r, &mut self.audit_ops);
        self.audit_ops.inner_products += 1;
        norm2(&r)
    }

    /// True when `residual` is below the stopping threshold and the true
    /// residual of `x` confirms it. After repeated failed confirmations the
    /// drift outcome is returned.
    pub fn check_converged(&mut self, residual: f64, x: &[f64]) -> Confirm {
        if residual > self.threshold() {
            return Confirm::No;
        }
        let true_res = self.true_residual(x);
        if true_res <= self.opts.acceptance_bound(self.b_norm) {
            return Confirm::Yes;
        }
        self.confirmations_failed += 1;
        if self.confirmations_failed > MAX_DRIFT_RETRIES {
            Confirm::Drift
        } else {
            Confirm::No
        }
    }

    pub fn stagnated(&mut self, residual: f64) -> bool {
        self.stagnation.update(residual)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn finish(
        mut self,
        solver: &str,
        status: SolveStatus,
        iterations: usize,
        counters: OpCounters,
        setup_counters: OpCounters,
        breakdown: Option<(usize, String)>,
        x: DenseVector,
    ) -> SolveReport {
        let true_final_residual = self.true_residual(&x);
        let (breakdown_iteration, breakdown_detail) = match breakdown {
            Some((it, detail)) => (Some(it), Some(detail)),
            None => (None, None),
        };
        SolveReport {
            solver: solver.to_string(),
            status,
            iterations,
            residual_history: self.history,
            true_final_residual,
            counters,
            setup_counters,
            audit_counters: self.audit_ops,
            audits: self.audits,
            breakdown_detail,
            breakdown_iteration,
            x,
            iterates: self.iterates,
        }
    }
}

/// Flags a residual history that has not improved by a relative 1e-14 for
/// 50 consecutive iterations.
#[derive(Debug, Clone)]
pub(crate) struct StagnationGuard {
    best: f64,
    since: usize,
}

impl Default for StagnationGuard {
    fn default() -> Self {
        Self { best: f64::INFINITY, since: 0 }
    }
}

pub(crate) const STAGNATION_WINDOW: usize = 50;
const STAGNATION_REL: f64 = 1e-14;

impl StagnationGuard {
    pub fn update(&mut self, residual: f64) -> bool {
        if residual < self.best * (1.0 - STAGNATION_REL) {
            self.best = residual;
            self.since = 0;
        } else {
            self.since += 1;
        }
        self.since >= STAGNATION_WINDOW
    }
}

/// Machine-epsilon scaled breakdown test for a denominator `value` whose
/// factors have magnitude `scale`.
pub(crate) fn vanishes(value: f64, scale: f64) -> bool {
    !value.is_finite() || value.abs() <= f64::EPSILON * scale
}
