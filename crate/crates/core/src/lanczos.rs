//! The Lanczos recurrence for shifted skew-symmetric operators.
//!
//! For `A = αI + S` the nonsymmetric Lanczos process collapses to a single
//! coefficient sequence:
//!
//! ```text
//! q_j     = −p_j / β_j
//! p_{j+1} = S q_j − β_j q_{j−1}
//! β_{j+1} = ‖p_{j+1}‖₂
//! ```
//!
//! started from `p_1 = r_0`, `q_0 = 0`. The shift never enters the
//! recurrence; it only appears on the diagonal of the extended Ritz matrix
//! `T̃_j` in `A Q_j = Q_{j+1} T̃_j`.
//!
//! The state keeps two rotating buffers holding the unnormalised `p_j` and
//! `p_{j+1}`; `q_j` is `−p_j/β_j` and is folded into the next fused
//! matvec, so a step costs one matvec, one vector update and one norm.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operators::{DenseVector, OpCounters, SparseSkewMatrix};

/// Non-error terminations of the recurrence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LanczosSignal {
    /// The starting vector is zero; there is nothing to solve.
    AlreadyConverged,
    /// `β_{j+1}` fell to the breakdown threshold: the Krylov space is
    /// invariant and the projected problem is exact.
    LuckyBreakdown { beta: f64 },
}

/// Threshold below which `β_{j+1}` counts as zero:
/// `n · ε_mach · (|α| + ‖S‖₁)`.
pub fn breakdown_threshold(n: usize, alpha: f64, s: &SparseSkewMatrix) -> f64 {
    n as f64 * f64::EPSILON * (alpha.abs() + s.norm1_estimate())
}

#[derive(Debug, Clone)]
pub struct LanczosState {
    /// `p_j` (zero before the first step, standing in for `q_0 = 0`).
    lag: DenseVector,
    /// `p_{j+1}`.
    lead: DenseVector,
    beta_curr: f64,
    beta_next: f64,
    j: usize,
    threshold: Option<f64>,
}

/// Starts the recurrence from `p_1 = r0`, taking ownership of the buffer.
///
/// `r0` is expected to be a vector obtained from `ops.alloc`; one further
/// working vector is allocated for `q_0`. Computes `β_1 = ‖r0‖₂`.
pub fn lanczos_init(r0: DenseVector, ops: &mut OpCounters) -> Result<LanczosState, LanczosSignal> {
    let beta1 = ops.norm(&r0);
    if beta1 == 0.0 {
        return Err(LanczosSignal::AlreadyConverged);
    }
    let lag = ops.alloc(r0.len());
    Ok(LanczosState { lag, lead: r0, beta_curr: 0.0, beta_next: beta1, j: 0, threshold: None })
}

impl LanczosState {
    /// Overrides the lucky-breakdown threshold (default: [`breakdown_threshold`]
    /// with `α = 0`).
    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = Some(threshold);
        self
    }

    pub fn j(&self) -> usize {
        self.j
    }

    /// `β_j`.
    pub fn beta_curr(&self) -> f64 {
        self.beta_curr
    }

    /// `β_{j+1}`.
    pub fn beta_next(&self) -> f64 {
        self.beta_next
    }

    pub fn threshold(&self, s: &SparseSkewMatrix) -> f64 {
        self.threshold.unwrap_or_else(|| breakdown_threshold(s.n(), 0.0, s))
    }

    /// True once `β_{j+1}` is at or below the breakdown threshold.
    pub fn is_exhausted(&self, s: &SparseSkewMatrix) -> bool {
        self.beta_next <= self.threshold(s)
    }

    /// `p_{j+1}`.
    pub fn p_next(&self) -> &[f64] {
        &self.lead
    }

    /// The unnormalised `p_j`; `q_j = −p_j/β_j`.
    pub(crate) fn p_curr(&self) -> &[f64] {
        &self.lag
    }

    /// A copy of `q_j` (uncounted; zero before the first step).
    pub fn q_curr(&self) -> DenseVector {
        if self.j == 0 {
            return DenseVector::zeros(self.lag.len());
        }
        let inv = -1.0 / self.beta_curr;
        DenseVector::new(self.lag.iter().map(|v| v * inv).collect()).expect("finite basis vector")
    }

    /// The vector `q_{j+1} = −p_{j+1}/β_{j+1}` (uncounted).
    pub fn q_next(&self) -> DenseVector {
        let inv = -1.0 / self.beta_next;
        DenseVector::new(self.lead.iter().map(|v| v * inv).collect()).expect("finite basis vector")
    }

    /// Advances `j → j+1`: one fused matvec/update and one norm.
    pub fn step(&mut self, s: &SparseSkewMatrix, ops: &mut OpCounters) -> Result<(), LanczosSignal> {
        if self.is_exhausted(s) {
            return Err(LanczosSignal::LuckyBreakdown { beta: self.beta_next });
        }
        // p_{j+2} = −(1/β_{j+1}) S p_{j+1} + (β_{j+1}/β_j) p_j, written over p_j.
        let lag_scale = if self.j == 0 { 0.0 } else { self.beta_next / self.beta_curr };
        s.matvec_combine(-1.0 / self.beta_next, &self.lead, lag_scale, &mut self.lag, ops);
        std::mem::swap(&mut self.lag, &mut self.lead);
        self.beta_curr = self.beta_next;
        self.beta_next = ops.norm(&self.lead);
        self.j += 1;
        Ok(())
    }

    /// A step followed by two passes of full reorthogonalisation of
    /// `p_{j+1}` against `basis` (the vectors `q_1..q_j`). The extra work
    /// is not counted. Debug and oracle use only.
    pub fn step_reorthogonalized(
        &mut self,
        s: &SparseSkewMatrix,
        basis: &[DenseVector],
        ops: &mut OpCounters,
    ) -> Result<(), LanczosSignal> {
        self.step(s, ops)?;
        for _ in 0..2 {
            for q in basis {
                let c = q.dot(&self.lead);
                for (p, qi) in self.lead.iter_mut().zip(q.iter()) {
                    *p -= c * qi;
                }
            }
        }
        self.beta_next = self.lead.norm2();
        Ok(())
    }

    /// Hands the two working buffers back to the counter bookkeeping.
    pub(crate) fn release(self, ops: &mut OpCounters) {
        ops.release(self.lag);
        ops.release(self.lead);
    }
}

/// Basis and coefficients from a recorded Lanczos run.
#[derive(Debug, Clone)]
pub struct LanczosRun {
    /// `q_1 .. q_{m+1}` (the last one only when `β_{m+1} > 0`).
    pub q: Vec<DenseVector>,
    /// `β_1 .. β_{m+1}`.
    pub betas: Vec<f64>,
}

impl LanczosRun {
    /// Number of completed steps `m`.
    pub fn steps(&self) -> usize {
        self.betas.len() - 1
    }

    /// `Q_k` as a dense `n × k` matrix.
    pub fn basis_matrix(&self, k: usize) -> DMatrix<f64> {
        let n = self.q[0].len();
        DMatrix::from_fn(n, k, |i, c| self.q[c][i])
    }
}

/// Runs up to `steps` iterations from `r0`, storing every basis vector.
/// Stops early on lucky breakdown. Debug and oracle use only.
pub fn lanczos_basis(
    s: &SparseSkewMatrix,
    r0: &[f64],
    steps: usize,
    reorthogonalize: bool,
) -> Result<LanczosRun, LanczosSignal> {
    let mut ops = OpCounters::new();
    let mut start = ops.alloc(r0.len());
    start.copy_from_slice(r0);
    let mut state = lanczos_init(start, &mut ops)?;
    let mut q = Vec::with_capacity(steps + 1);
    let mut betas = vec![state.beta_next()];
    for _ in 0..steps {
        let res = if reorthogonalize {
            state.step_reorthogonalized(s, &q, &mut ops)
        } else {
            state.step(s, &mut ops)
        };
        if res.is_err() {
            break;
        }
        q.push(state.q_curr());
        betas.push(state.beta_next());
    }
    if !state.is_exhausted(s) {
        q.push(state.q_next());
    }
    Ok(LanczosRun { q, betas })
}

/// The `(j+1) × j` extended Ritz matrix `T̃_j`: `α` on the diagonal,
/// `β_{i+1}` above it, `−β_{i+1}` below it.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedRitz {
    pub alpha: f64,
    /// `β_2 .. β_{j+1}`.
    pub betas: Vec<f64>,
}

impl ExtendedRitz {
    pub fn j(&self) -> usize {
        self.betas.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let j = self.j();
        let mut t = DMatrix::zeros(j + 1, j);
        for c in 0..j {
            t[(c, c)] = self.alpha;
            t[(c + 1, c)] = -self.betas[c];
            if c + 1 < j {
                t[(c, c + 1)] = self.betas[c];
            }
        }
        t
    }
}

/// `betas` are `β_2 .. β_{j+1}`; all but the last must be positive.
pub fn assemble_extended_ritz(alpha: f64, betas: &[f64]) -> Result<ExtendedRitz> {
    if betas.is_empty() {
        return Err(Error::InvalidInput("extended Ritz matrix needs at least one coefficient".into()));
    }
    if betas[..betas.len() - 1].iter().any(|&b| b <= 0.0) || betas.iter().any(|&b| b < 0.0) {
        return Err(Error::InvalidInput("Lanczos coefficients must be positive".into()));
    }
    Ok(ExtendedRitz { alpha, betas: betas.to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rot() -> SparseSkewMatrix {
        SparseSkewMatrix::from_strict_triangle(2, &[(0, 1, 1.0)]).unwrap()
    }

    fn start(v: &[f64], ops: &mut OpCounters) -> Result<LanczosState, LanczosSignal> {
        let mut r0 = ops.alloc(v.len());
        r0.copy_from_slice(v);
        lanczos_init(r0, ops)
    }

    #[test]
    fn init_norms() {
        let mut ops = OpCounters::new();
        let st = start(&[1.0, 0.0], &mut ops).unwrap();
        assert_eq!(st.beta_next(), 1.0);
        assert_eq!(st.q_curr().as_slice(), &[0.0, 0.0]);
        let st = start(&[3.0, 4.0], &mut ops).unwrap();
        assert_eq!(st.beta_next(), 5.0);
        assert_eq!(start(&[0.0, 0.0], &mut ops).unwrap_err(), LanczosSignal::AlreadyConverged);
    }

    #[test]
    fn two_by_two_recurrence() {
        let s = rot();
        let mut ops = OpCounters::new();
        let mut st = start(&[1.0, 0.0], &mut ops).unwrap();
        let before = ops;
        st.step(&s, &mut ops).unwrap();
        let delta = ops.since(&before);
        assert_eq!((delta.matvecs, delta.vector_updates, delta.inner_products), (1, 1, 1));
        assert_eq!(st.q_curr().as_slice(), &[-1.0, 0.0]);
        assert_eq!(st.p_next(), &[0.0, 1.0]);
        assert_eq!(st.beta_next(), 1.0);

        st.step(&s, &mut ops).unwrap();
        assert_eq!(st.q_curr().as_slice(), &[0.0, -1.0]);
        assert_eq!(st.p_next(), &[0.0, 0.0]);
        assert_eq!(st.beta_next(), 0.0);
        assert!(st.is_exhausted(&s));
        assert!(matches!(st.step(&s, &mut ops), Err(LanczosSignal::LuckyBreakdown { .. })));
    }

    #[test]
    fn zero_operator_exhausts_immediately() {
        let s = SparseSkewMatrix::zeros(3).unwrap();
        let mut ops = OpCounters::new();
        let mut st = start(&[1.0, 0.0, 0.0], &mut ops).unwrap();
        st.step(&s, &mut ops).unwrap();
        assert_eq!(st.beta_next(), 0.0);
        assert!(st.is_exhausted(&s));
    }

    #[test]
    fn extended_ritz_layout() {
        let t = assemble_extended_ritz(2.0, &[1.0, 1.0, 1.0]).unwrap().to_dense();
        let expected = DMatrix::from_row_slice(4, 3, &[2.0, 1.0, 0.0, -1.0, 2.0, 1.0, 0.0, -1.0, 2.0, 0.0, 0.0, -1.0]);
        assert_eq!(t, expected);
        let t1 = assemble_extended_ritz(5.0, &[3.0]).unwrap().to_dense();
        assert_eq!(t1, DMatrix::from_row_slice(2, 1, &[5.0, -3.0]));
        let t0 = assemble_extended_ritz(0.0, &[1.0, 2.0]).unwrap().to_dense();
        assert!((0..2).all(|i| t0[(i, i)] == 0.0));
        assert!(assemble_extended_ritz(1.0, &[]).is_err());
        assert!(assemble_extended_ritz(1.0, &[0.0, 1.0]).is_err());
        assert!(assemble_extended_ritz(1.0, &[1.0, 0.0]).is_ok());
    }
}
