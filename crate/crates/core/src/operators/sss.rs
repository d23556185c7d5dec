use nalgebra::DMatrix;

use super::counters::OpCounters;
use super::sparse::SparseSkewMatrix;
use super::vector::DenseVector;
use crate::error::{check_dim, Result};

/// Which of `A` or `Aᵀ` to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transpose {
    No,
    Yes,
}

/// The shifted skew-symmetric operator `A = αI + S`.
///
/// `Aᵀ = αI − S` is applied from the same storage. `A` is normal by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SssOperator {
    alpha: f64,
    s: SparseSkewMatrix,
}

impl SssOperator {
    pub fn new(alpha: f64, s: SparseSkewMatrix) -> Self {
        assert!(alpha.is_finite(), "shift must be finite");
        Self { alpha, s }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn skew(&self) -> &SparseSkewMatrix {
        &self.s
    }

    pub fn dim(&self) -> usize {
        self.s.n()
    }

    /// `|α| + ‖S‖₁`, the magnitude scale used by breakdown thresholds.
    pub fn scale(&self) -> f64 {
        self.alpha.abs() + self.s.norm1_estimate()
    }

    /// Returns `αx + Sx`, or `αx − Sx` when transposed. One matvec counted.
    pub fn apply(&self, x: &[f64], transpose: Transpose, ops: &mut OpCounters) -> Result<DenseVector> {
        check_dim(self.dim(), x.len())?;
        let mut y = DenseVector::zeros(self.dim());
        self.apply_into(x, &mut y, transpose, ops);
        Ok(y)
    }

    /// `y = A·x` (or `Aᵀ·x`) into a preallocated buffer. One matvec counted.
    pub(crate) fn apply_into(&self, x: &[f64], y: &mut [f64], transpose: Transpose, ops: &mut OpCounters) {
        self.s.matvec_into(x, y, ops);
        let sign = match transpose {
            Transpose::No => 1.0,
            Transpose::Yes => -1.0,
        };
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = self.alpha * xi + sign * *yi;
        }
    }

    /// `r = b − A·x`. One matvec and one vector update counted.
    pub(crate) fn residual_into(&self, b: &[f64], x: &[f64], r: &mut [f64], ops: &mut OpCounters) {
        self.apply_into(x, r, Transpose::No, ops);
        ops.lincomb(1.0, b, -1.0, r);
    }

    /// Uncounted true residual norm `‖b − A·x‖₂`, for audits and tests.
    pub fn residual_norm(&self, b: &[f64], x: &[f64]) -> f64 {
        let mut scratch = OpCounters::new();
        let mut r = vec![0.0; self.dim()];
        self.residual_into(b, x, &mut r, &mut scratch);
        super::vector::norm2(&r)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = self.s.to_dense();
        for i in 0..self.dim() {
            m[(i, i)] += self.alpha;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two(alpha: f64) -> SssOperator {
        SssOperator::new(alpha, SparseSkewMatrix::from_strict_triangle(2, &[(0, 1, 1.0)]).unwrap())
    }

    #[test]
    fn apply_matches_dense_evaluation() {
        let a = two_by_two(1.0);
        let mut ops = OpCounters::new();
        let x = [1.0, 0.0];
        let y = a.apply(&x, Transpose::No, &mut ops).unwrap();
        let dense = a.to_dense() * nalgebra::DVector::from_column_slice(&x);
        assert_eq!(y.as_slice(), dense.as_slice());
        assert_eq!(y.as_slice(), &[1.0, -1.0]);
        let yt = a.apply(&x, Transpose::Yes, &mut ops).unwrap();
        let dense_t = a.to_dense().transpose() * nalgebra::DVector::from_column_slice(&x);
        assert_eq!(yt.as_slice(), dense_t.as_slice());
        assert_eq!(yt.as_slice(), &[1.0, 1.0]);
        assert_eq!(ops.matvecs, 2);
    }

    #[test]
    fn zero_shift_is_pure_skew() {
        let a = two_by_two(0.0);
        let mut ops = OpCounters::new();
        let x = [0.3, -1.7];
        let y = a.apply(&x, Transpose::No, &mut ops).unwrap();
        let sx = a.skew().skew_matvec(&x, &mut ops).unwrap();
        assert_eq!(y, sx);
    }

    #[test]
    fn apply_rejects_wrong_length() {
        let mut ops = OpCounters::new();
        assert!(two_by_two(1.0).apply(&[1.0], Transpose::No, &mut ops).is_err());
    }
}
