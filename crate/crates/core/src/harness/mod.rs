//! Experiment driver and file formats: Matrix Market matrices and vectors,
//! residual-history CSVs, the solver registry and the `summary.json`
//! written by [`run_experiment`].

mod experiment;
mod history;
mod mtx;
mod registry;

pub use experiment::{
    load_problem, run_experiment, ExperimentConfig, ExperimentSummary, PerIteration, ProblemSpec, RecurrenceCheck,
    SolverSummary, DEFAULT_AUDIT_EVERY,
};
pub use history::{history_csv, write_history_csv, HISTORY_HEADER};
pub use mtx::{
    read_matrix_market, read_vector, write_general_matrix_market, write_skew_matrix_market, write_vector, MatrixFile,
};
pub use registry::{parse_solver_list, SolverKind, GMRES_RESTART};

use crate::error::Error;

/// Process exit code for an error: 2 for usage errors, 3 for I/O, parse
/// and validation failures of input files.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_usage() {
        2
    } else {
        3
    }
}
