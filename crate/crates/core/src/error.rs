use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by operators, problem generators and the file layer.
///
/// Solver outcomes such as breakdown or stagnation are not errors; they are
/// reported through [`crate::report::SolveStatus`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vector entry {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },

    #[error("matrix is not skew-symmetric: |S_ij + S_ji| = {violation:e} at ({row}, {col})")]
    NotSkew { row: usize, col: usize, violation: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not symmetric positive definite (smallest eigenvalue {0:e})")]
    NotSpd(f64),

    #[error("{}:{line}: {msg}", path.display())]
    Parse { path: PathBuf, line: usize, msg: String },

    /// Well-formed input file whose contents violate a structural requirement.
    #[error("{}: {msg}", path.display())]
    Validation { path: PathBuf, msg: String },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for usage-class errors (bad arguments, inconsistent dimensions).
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::InvalidInput(_)
                | Error::NonFinite { .. }
                | Error::NotSpd(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}
