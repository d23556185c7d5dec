//! Dense vectors, skew-symmetric sparse storage, the shifted operator
//! `A = αI + S`, and the operation counters every solver reports.

mod counters;
mod sparse;
mod sss;
mod vector;

pub use counters::OpCounters;
pub use sparse::{verify_skew, SparseSkewMatrix};
pub use sss::{SssOperator, Transpose};
pub use vector::DenseVector;

pub(crate) use vector::norm2;
