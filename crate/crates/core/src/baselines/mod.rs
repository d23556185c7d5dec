//! Instrumented reference solvers. Every solver returns a [`crate::SolveReport`]
//! with the residual history and operation counters, so runs can be
//! compared against [`crate::mrs3`] iteration by iteration.

mod bicgstab;
mod galerkin;
mod gcr;
mod gmres;
mod normal;

pub use bicgstab::bicgstab_solve;
pub use galerkin::{cgw_solve, gencg_solve};
pub use gcr::{full_gcr_solve, full_gcr_solve_diagnosed, trunc_gcr_solve, GcrDiagnostics};
pub use gmres::gmres_solve;
pub use normal::{cgnr_solve, hwl_solve};

use crate::report::{Confirm, SolveStatus, Tracker};


/// Shared end-of-iteration test: convergence (confirmed against the true
/// residual), estimate drift, or stagnation.
pub(crate) fn stop_status(t: &mut Tracker<'_>, res: f64, x: &[f64]) -> Option<SolveStatus> {
    match t.check_converged(res, x) {
        Confirm::Yes => return Some(SolveStatus::Converged),
        Confirm::Drift => return Some(SolveStatus::EstimateDrift),
        Confirm::No => {}
    }
    t.stagnated(res).then_some(SolveStatus::Stagnated)
}
