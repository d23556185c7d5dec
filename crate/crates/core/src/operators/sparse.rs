use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::counters::OpCounters;
use super::vector::DenseVector;
use crate::error::{check_dim, Error, Result};

/// A skew-symmetric matrix (`Sᵀ = −S`) in compressed-row form.
///
/// Both triangles are stored. Matrices built through the checked
/// constructors are exactly skew: every stored `(i, j, v)` has a stored
/// partner `(j, i, −v)` and the diagonal is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSkewMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSkewMatrix {
    /// Builds `S` from entries of one strict triangle; each `(i, j, v)` with
    /// `i != j` is stored together with `(j, i, −v)`. Duplicates are summed.
    pub fn from_strict_triangle(n: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("matrix dimension must be at least 1".into()));
        }
        let mut map = BTreeMap::new();
        for &(i, j, v) in entries {
            check_index(n, i, j)?;
            check_value(i, j, v)?;
            if i == j {
                if v != 0.0 {
                    return Err(Error::NotSkew { row: i, col: j, violation: 2.0 * v.abs() });
                }
                continue;
            }
            *map.entry((i, j)).or_insert(0.0) += v;
            *map.entry((j, i)).or_insert(0.0) -= v;
        }
        Ok(Self::from_map(n, map))
    }

    /// Builds `S` from a full set of entries (both triangles), verifying
    /// `|S_ij + S_ji| ≤ tol` for every pair. Pairs within tolerance are
    /// stored as `±(S_ij − S_ji)/2`, which is exact for exactly skew input.
    pub fn from_triplets(n: usize, entries: &[(usize, usize, f64)], tol: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("matrix dimension must be at least 1".into()));
        }
        let mut raw: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(i, j, v) in entries {
            check_index(n, i, j)?;
            check_value(i, j, v)?;
            *raw.entry((i, j)).or_insert(0.0) += v;
        }
        let mut map = BTreeMap::new();
        for (&(i, j), &v) in &raw {
            let partner = raw.get(&(j, i)).copied().unwrap_or(0.0);
            let violation = (v + partner).abs();
            if violation > tol {
                return Err(Error::NotSkew { row: i, col: j, violation });
            }
            if i == j {
                continue;
            }
            let sym = 0.5 * (v - partner);
            map.insert((i, j), sym);
        }
        Ok(Self::from_map(n, map))
    }

    /// Builds from a dense matrix, verifying skew-symmetry to `tol`.
    pub fn from_dense(m: &DMatrix<f64>, tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidInput(format!(
                "matrix is not square ({}x{})",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        let mut entries = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = m[(i, j)];
                if v != 0.0 {
                    entries.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n, &entries, tol)
    }

    /// Wraps raw CSR arrays without checking skew-symmetry.
    ///
    /// The structure (row pointers, sorted unique column indices, finite
    /// values) is still validated. Callers that accept such a matrix are
    /// expected to run [`verify_skew`] before solving with it.
    pub fn from_csr_unchecked(
        n: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("matrix dimension must be at least 1".into()));
        }
        if row_ptr.len() != n + 1 || row_ptr[0] != 0 || row_ptr[n] != col_idx.len() {
            return Err(Error::InvalidInput("malformed row pointer array".into()));
        }
        if col_idx.len() != values.len() {
            return Err(Error::InvalidInput("column and value arrays differ in length".into()));
        }
        for i in 0..n {
            if row_ptr[i] > row_ptr[i + 1] {
                return Err(Error::InvalidInput("row pointers must be non-decreasing".into()));
            }
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if cols.iter().any(|&c| c >= n) || cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidInput(format!(
                    "row {i}: column indices must be in range, sorted and unique"
                )));
            }
            for (k, &c) in cols.iter().enumerate() {
                check_value(i, c, values[row_ptr[i] + k])?;
            }
        }
        Ok(Self { n, row_ptr, col_idx, values })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::from_strict_triangle(n, &[])
    }

    fn from_map(n: usize, map: BTreeMap<(usize, usize), f64>) -> Self {
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(map.len());
        let mut values = Vec::with_capacity(map.len());
        for (&(i, j), &v) in &map {
            if v == 0.0 {
                continue;
            }
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, col_idx, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[range.clone()], &self.values[range])
    }

    /// Stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    /// Stored value at `(i, j)`, zero when absent.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|k| vals[k]).unwrap_or(0.0)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Maximum absolute row sum, an upper bound on `‖S‖₂`.
    pub fn norm1_estimate(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest `|S_ij + S_ji|` over stored entries (diagonal entries count
    /// as `2|S_ii|`).
    pub fn max_skew_violation(&self) -> f64 {
        self.triplets()
            .map(|(i, j, v)| (v + self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    /// `y = S·x`, one matvec counted.
    pub fn skew_matvec(&self, x: &[f64], ops: &mut OpCounters) -> Result<DenseVector> {
        check_dim(self.n, x.len())?;
        let mut y = DenseVector::zeros(self.n);
        self.matvec_into(x, &mut y, ops);
        Ok(y)
    }

    /// `y = S·x` into a preallocated buffer, one matvec counted.
    pub(crate) fn matvec_into(&self, x: &[f64], y: &mut [f64], ops: &mut OpCounters) {
        ops.count_matvec();
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row_dot(i, x);
        }
    }

    /// Fused `y = x_scale·S·x + y_scale·y`, updating `y` in place.
    ///
    /// Counts one matvec and one vector update. Row `i` of the result only
    /// reads `y[i]`, so `y` may be one of the operands of the recurrence that
    /// is being overwritten.
    pub(crate) fn matvec_combine(
        &self,
        x_scale: f64,
        x: &[f64],
        y_scale: f64,
        y: &mut [f64],
        ops: &mut OpCounters,
    ) {
        ops.count_matvec();
        ops.vector_updates += 1;
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = x_scale * self.row_dot(i, x) + y_scale * *yi;
        }
    }

    #[inline]
    fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let (cols, vals) = self.row(i);
        cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum()
    }
}

/// True iff `max |S_ij + S_ji| ≤ tol` over all stored entries.
pub fn verify_skew(s: &SparseSkewMatrix, tol: f64) -> bool {
    s.max_skew_violation() <= tol
}

fn check_index(n: usize, i: usize, j: usize) -> Result<()> {
    if i >= n || j >= n {
        return Err(Error::InvalidInput(format!("entry ({i}, {j}) outside {n}x{n} matrix")));
    }
    Ok(())
}

fn check_value(i: usize, j: usize, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::InvalidInput(format!("entry ({i}, {j}) is not finite")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rot() -> SparseSkewMatrix {
        SparseSkewMatrix::from_strict_triangle(2, &[(0, 1, 1.0)]).unwrap()
    }

    #[test]
    fn rotation_generator_matvec() {
        let mut ops = OpCounters::new();
        let y = rot().skew_matvec(&[1.0, 0.0], &mut ops).unwrap();
        assert_eq!(y.as_slice(), &[0.0, -1.0]);
        assert_eq!(ops.matvecs, 1);
        assert_eq!(ops.vector_updates, 0);
        assert_eq!(ops.inner_products, 0);
    }

    #[test]
    fn zero_matrix_matvec() {
        let s = SparseSkewMatrix::zeros(3).unwrap();
        let mut ops = OpCounters::new();
        let y = s.skew_matvec(&[1.0, 2.0, 3.0], &mut ops).unwrap();
        assert_eq!(y.as_slice(), &[0.0, 0.0, 0.0]);
        assert!(verify_skew(&s, 0.0));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mut ops = OpCounters::new();
        let err = rot().skew_matvec(&[1.0, 2.0, 3.0], &mut ops).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 2, found: 3 }));
        assert_eq!(ops.matvecs, 0);
    }

    #[test]
    fn violated_pair_fails_verification() {
        let s = SparseSkewMatrix::from_csr_unchecked(
            2,
            vec![0, 1, 2],
            vec![1, 0],
            vec![1.0, -0.5],
        )
        .unwrap();
        assert!(!verify_skew(&s, 1e-12));
        assert!(verify_skew(&rot(), 1e-12));
        assert!(verify_skew(&rot(), 0.0));
    }

    #[test]
    fn triplet_constructor_checks_tolerance() {
        let bad = [(0, 1, 1.0), (1, 0, -0.5)];
        assert!(matches!(
            SparseSkewMatrix::from_triplets(2, &bad, 1e-12),
            Err(Error::NotSkew { .. })
        ));
        let near = [(0, 1, 1.0), (1, 0, -1.0 - 1e-14)];
        let s = SparseSkewMatrix::from_triplets(2, &near, 1e-12).unwrap();
        assert!(verify_skew(&s, 0.0));
        let diag = [(0, 0, 1.0)];
        assert!(SparseSkewMatrix::from_triplets(2, &diag, 1e-12).is_err());
    }

    #[test]
    fn structure_validation() {
        assert!(SparseSkewMatrix::from_csr_unchecked(2, vec![0, 2, 2], vec![1, 0], vec![1.0, 2.0]).is_err());
        assert!(SparseSkewMatrix::from_strict_triangle(0, &[]).is_err());
        assert!(SparseSkewMatrix::from_strict_triangle(2, &[(0, 2, 1.0)]).is_err());
        assert!(SparseSkewMatrix::from_strict_triangle(2, &[(0, 1, f64::NAN)]).is_err());
    }

    #[test]
    fn fused_combine_matches_separate_ops() {
        let s = SparseSkewMatrix::from_strict_triangle(3, &[(0, 1, 2.0), (1, 2, -1.0), (0, 2, 0.5)]).unwrap();
        let x = [1.0, -2.0, 3.0];
        let mut y = [0.5, 0.25, -1.0];
        let mut ops = OpCounters::new();
        let sx = s.skew_matvec(&x, &mut ops).unwrap();
        let expected: Vec<f64> = sx.iter().zip(&y).map(|(a, b)| -0.5 * a + 3.0 * b).collect();
        s.matvec_combine(-0.5, &x, 3.0, &mut y, &mut ops);
        assert_eq!(y.to_vec(), expected);
        assert_eq!(ops.matvecs, 2);
        assert_eq!(ops.vector_updates, 1);
    }
}
