//! Krylov solvers for shifted skew-symmetric systems `(αI + S) x = b`.
//!
//! The centrepiece is [`mrs3`], a minimal residual method built on the
//! skew Lanczos recurrence that needs one matvec and five vectors per
//! iteration for every real shift `α`, including `α = 0`. The
//! [`baselines`] module holds instrumented reference solvers used for
//! comparison, [`problems`] generates the advection test family and the
//! transforms that reduce other systems to this form, and [`harness`]
//! drives experiments and file I/O.

pub mod baselines;
pub mod error;
pub mod harness;
pub mod lanczos;
pub mod mrs3;
pub mod operators;
pub mod problems;
pub mod report;

pub use error::{Error, Result};
pub use operators::{DenseVector, OpCounters, SparseSkewMatrix, SssOperator, Transpose};
pub use report::{SolveOptions, SolveReport, SolveStatus};
