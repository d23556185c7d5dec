//! Test problems: the advection matrix family on an `n1 × n2` grid, the
//! transforms that reduce `(H + S) x = b` with `H` symmetric positive
//! definite to a unit-shift skew system, and dense condition numbers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::operators::{norm2, DenseVector, SparseSkewMatrix, SssOperator};

/// Largest dimension for which dense diagnostics are computed.
pub const DENSE_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdvectionConfig {
    pub n1: usize,
    pub n2: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub seed: u64,
}

impl AdvectionConfig {
    pub fn new(n1: usize, n2: usize, gamma: f64, alpha: f64, seed: u64) -> Self {
        Self { n1, n2, gamma, alpha, seed }
    }

    pub fn dim(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1 < 2 || self.n2 < 2 {
            return Err(Error::InvalidInput(format!(
                "grid must be at least 2x2, got {}x{}",
                self.n1, self.n2
            )));
        }
        if !self.gamma.is_finite() || !self.alpha.is_finite() {
            return Err(Error::InvalidInput("gamma and alpha must be finite".into()));
        }
        Ok(())
    }
}

/// The block-tridiagonal skew matrix with diagonal blocks
/// `tridiag(−1, 0, 1)/(2h1)` and off-diagonal blocks `±γ/(2h2)·I`,
/// `h1 = 1/n1`, `h2 = 1/n2`. Unknowns are ordered x-fastest.
pub fn advection_matrix(cfg: &AdvectionConfig) -> Result<SparseSkewMatrix> {
    cfg.validate()?;
    let (n1, n2) = (cfg.n1, cfg.n2);
    let cx = n1 as f64 / 2.0;
    let cy = cfg.gamma * n2 as f64 / 2.0;
    let mut upper = Vec::with_capacity(2 * n1 * n2);
    for i in 0..n2 {
        for m in 0..n1 {
            let k = i * n1 + m;
            if m + 1 < n1 {
                upper.push((k, k + 1, cx));
            }
            if i + 1 < n2 && cy != 0.0 {
                upper.push((k, k + n1, cy));
            }
        }
    }
    SparseSkewMatrix::from_strict_triangle(cfg.dim(), &upper)
}

/// Entries uniform on (−1, 1) from a seeded ChaCha8 stream, scaled to unit
/// 2-norm.
pub fn random_unit_vector(n: usize, seed: u64) -> DenseVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = norm2(&v);
    for e in &mut v {
        *e /= norm;
    }
    DenseVector::new(v).expect("finite by construction")
}

/// `(αI + S, b, x0 = 0)` for the advection family with a random unit `b`.
pub fn make_sss_system(cfg: &AdvectionConfig) -> Result<(SssOperator, DenseVector, DenseVector)> {
    let s = advection_matrix(cfg)?;
    let n = cfg.dim();
    Ok((SssOperator::new(cfg.alpha, s), random_unit_vector(n, cfg.seed), DenseVector::zeros(n)))
}

/// Splits `B` into its symmetric part `(B + Bᵀ)/2` and skew part `(B − Bᵀ)/2`.
pub fn hermitian_split(b: &DMatrix<f64>) -> Result<(DMatrix<f64>, SparseSkewMatrix)> {
    square(b)?;
    let n = b.nrows();
    let h = (b + b.transpose()) * 0.5;
    let mut upper = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (b[(i, j)] - b[(j, i)]);
            if v != 0.0 {
                upper.push((i, j, v));
            }
        }
    }
    Ok((h, SparseSkewMatrix::from_strict_triangle(n, &upper)?))
}

fn square(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::InvalidInput(format!("matrix must be square and nonempty ({}x{})", m.nrows(), m.ncols())));
    }
    Ok(())
}

/// Maps the solution `y` of a transformed system back to `x`.
#[derive(Debug, Clone, PartialEq)]
pub enum BackMap {
    /// `x = diag(d) y`, `d = D^{−1/2}`.
    Diagonal(Vec<f64>),
    /// `x = M y`, `M = H^{−1/2}`.
    Dense(DMatrix<f64>),
}

impl BackMap {
    pub fn apply(&self, y: &[f64]) -> Result<DenseVector> {
        match self {
            BackMap::Diagonal(d) => {
                check_dim(d.len(), y.len())?;
                DenseVector::new(d.iter().zip(y).map(|(di, yi)| di * yi).collect())
            }
            BackMap::Dense(m) => {
                check_dim(m.ncols(), y.len())?;
                DenseVector::new((m * DVector::from_column_slice(y)).as_slice().to_vec())
            }
        }
    }
}

/// Scales `(D + S) x = b` to `(I + D^{−1/2} S D^{−1/2}) y = D^{−1/2} b`,
/// `x = D^{−1/2} y`. The scaled matrix is exactly skew.
pub fn diagonal_scale_transform(
    d: &[f64],
    s: &SparseSkewMatrix,
    b: &[f64],
) -> Result<(SssOperator, DenseVector, BackMap)> {
    check_dim(s.n(), d.len())?;
    check_dim(s.n(), b.len())?;
    if let Some((i, &v)) = d.iter().enumerate().find(|(_, &v)| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidInput(format!("diagonal entry {i} is not positive ({v})")));
    }
    let inv_sqrt: Vec<f64> = d.iter().map(|v| 1.0 / v.sqrt()).collect();
    let upper: Vec<_> = s
        .triplets()
        .filter(|(i, j, _)| i < j)
        .map(|(i, j, v)| (i, j, v / (d[i] * d[j]).sqrt()))
        .collect();
    let scaled = SparseSkewMatrix::from_strict_triangle(s.n(), &upper)?;
    let b_scaled = DenseVector::new(b.iter().zip(&inv_sqrt).map(|(bi, di)| bi * di).collect())?;
    Ok((SssOperator::new(1.0, scaled), b_scaled, BackMap::Diagonal(inv_sqrt)))
}

/// Transforms `(H + S) x = b` to `(I + H^{−1/2} S H^{−1/2}) y = H^{−1/2} b`,
/// `x = H^{−1/2} y`, with `H^{−1/2}` from a dense eigendecomposition.
pub fn spd_split_transform(
    h: &DMatrix<f64>,
    s: &SparseSkewMatrix,
    b: &[f64],
) -> Result<(SssOperator, DenseVector, BackMap)> {
    square(h)?;
    let n = h.nrows();
    check_dim(n, s.n())?;
    check_dim(n, b.len())?;
    dense_limit(n)?;
    let h_scale = h.amax();
    if (h - h.transpose()).amax() > 1e-12 * h_scale {
        return Err(Error::InvalidInput("H is not symmetric".into()));
    }
    let eig = SymmetricEigen::new(h.clone());
    let lambda_min = eig.eigenvalues.min();
    if lambda_min <= 0.0 {
        return Err(Error::NotSpd(lambda_min));
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    let m = &eig.eigenvectors * d * eig.eigenvectors.transpose();
    let s_t = &m * s.to_dense() * &m;
    let tol = 1e-12 * s_t.amax().max(f64::MIN_POSITIVE);
    let scaled = SparseSkewMatrix::from_dense(&s_t, tol)?;
    let b_t = &m * DVector::from_column_slice(b);
    Ok((SssOperator::new(1.0, scaled), DenseVector::new(b_t.as_slice().to_vec())?, BackMap::Dense(m)))
}

fn dense_limit(n: usize) -> Result<()> {
    if n > DENSE_LIMIT {
        return Err(Error::InvalidInput(format!("dimension {n} exceeds the dense limit {DENSE_LIMIT}")));
    }
    Ok(())
}

/// `κ₂(A)` from the singular values of the dense operator; infinite when
/// `σ_min ≤ n·ε·σ_max`.
pub fn condition_number(a: &SssOperator) -> Result<f64> {
    dense_limit(a.dim())?;
    let sv = a.to_dense().singular_values();
    Ok(ratio(sv.max(), sv.min(), a.dim()))
}

/// `κ₂(A) = √((α² + s_max²)/(α² + s_min²))` from the eigenvalues `s²` of
/// `SᵀS`, using that `A` is normal.
pub fn condition_number_spectral(a: &SssOperator) -> Result<f64> {
    dense_limit(a.dim())?;
    let s = a.skew().to_dense();
    let eig = SymmetricEigen::new(s.transpose() * &s);
    let a2 = a.alpha() * a.alpha();
    let hi = (a2 + eig.eigenvalues.max().max(0.0)).sqrt();
    let lo = (a2 + eig.eigenvalues.min().max(0.0)).sqrt();
    Ok(ratio(hi, lo, a.dim()))
}

fn ratio(hi: f64, lo: f64, n: usize) -> f64 {
    if lo <= n as f64 * f64::EPSILON * hi {
        f64::INFINITY
    } else {
        hi / lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_by_four_example() {
        let s = advection_matrix(&AdvectionConfig::new(2, 2, 2.0, 0.0, 0)).unwrap();
        let want = DMatrix::from_row_slice(
            4,
            4,
            &[0., 1., 2., 0., -1., 0., 0., 2., -2., 0., 0., 1., 0., -2., -1., 0.],
        );
        assert_eq!(s.to_dense(), want);
    }

    #[test]
    fn stencil_count() {
        let s = advection_matrix(&AdvectionConfig::new(20, 20, 1.0, 0.0, 0)).unwrap();
        assert_eq!(s.nnz(), 1520);
        assert_eq!(s.max_skew_violation(), 0.0);
    }

    #[test]
    fn rhs_is_unit_and_seeded() {
        let cfg = AdvectionConfig::new(5, 4, 1.0, 1.0, 42);
        let (_, b1, x0) = make_sss_system(&cfg).unwrap();
        let (_, b2, _) = make_sss_system(&cfg).unwrap();
        assert!((b1.norm2() - 1.0).abs() <= 1e-15);
        assert_eq!(b1, b2);
        assert_eq!(x0.norm2(), 0.0);
        assert!(make_sss_system(&AdvectionConfig::new(1, 4, 1.0, 1.0, 0)).unwrap_err().is_usage());
    }

    #[test]
    fn split_example() {
        let b = DMatrix::from_row_slice(2, 2, &[2., 3., 1., 2.]);
        let (h, s) = hermitian_split(&b).unwrap();
        assert_eq!(h, DMatrix::from_row_slice(2, 2, &[2., 2., 2., 2.]));
        assert_eq!(s.to_dense(), DMatrix::from_row_slice(2, 2, &[0., 1., -1., 0.]));
    }

    #[test]
    fn diagonal_scaling_example() {
        let s = SparseSkewMatrix::from_strict_triangle(2, &[(0, 1, 1.0)]).unwrap();
        let (a, b, back) = diagonal_scale_transform(&[4.0, 4.0], &s, &[2.0, 0.0]).unwrap();
        assert_eq!(a.skew().get(0, 1), 0.25);
        assert_eq!(b.as_slice(), &[1.0, 0.0]);
        assert_eq!(back.apply(&[2.0, 4.0]).unwrap().as_slice(), &[1.0, 2.0]);
        assert!(diagonal_scale_transform(&[4.0, 0.0], &s, &[2.0, 0.0]).unwrap_err().is_usage());
    }

    #[test]
    fn rotation_condition_number() {
        let s = SparseSkewMatrix::from_strict_triangle(2, &[(0, 1, 1.0)]).unwrap();
        let a = SssOperator::new(1.0, s.clone());
        assert!((condition_number(&a).unwrap() - 1.0).abs() < 1e-14);
        assert!((condition_number_spectral(&a).unwrap() - 1.0).abs() < 1e-14);
        let singular = SssOperator::new(0.0, SparseSkewMatrix::zeros(3).unwrap());
        assert!(condition_number(&singular).unwrap().is_infinite());
    }

    #[test]
    fn not_spd_is_rejected() {
        let s = SparseSkewMatrix::zeros(2).unwrap();
        let h = DMatrix::from_row_slice(2, 2, &[1., 0., 0., -1.]);
        assert!(matches!(spd_split_transform(&h, &s, &[1.0, 1.0]), Err(Error::NotSpd(_))));
    }
}
