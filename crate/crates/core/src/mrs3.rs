//! Minimal residual solver for shifted skew-symmetric systems.
//!
//! Each iteration advances the skew Lanczos recurrence by one step, rotates
//! the new column `[0, β_j, α, −β_{j+1}]` of the extended Ritz matrix with
//! the two previous Givens rotations, and computes a new rotation that
//! annihilates its last entry. For this operator class the rotated column
//! has a structural zero on the first superdiagonal, so the search
//! directions obey a two-term recurrence
//!
//! ```text
//! w_j = (q_j − u_{j−2,j} w_{j−2}) / u_{j,j}
//! x_j = x_{j−1} + μ_j w_j
//! ```
//!
//! and the residual norm is available for free as `|ε_j|`, the last entry
//! of the rotated right-hand side. Steady-state cost per iteration: one
//! matvec, three vector updates, one inner product and five vectors.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result};
use crate::lanczos::{breakdown_threshold, lanczos_init, ExtendedRitz, LanczosSignal, LanczosState};
use crate::operators::{DenseVector, OpCounters, SssOperator};
use crate::report::{Confirm, SolveOptions, SolveReport, SolveStatus, Tracker};

/// Plane rotation acting on rows `k` and `k+1`:
/// `(y_k, y_l) ↦ (c·y_k + s·y_l, −s·y_k + c·y_l)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GivensRotation {
    pub c: f64,
    pub s: f64,
    pub k: usize,
}

impl GivensRotation {
    pub const IDENTITY: GivensRotation = GivensRotation { c: 1.0, s: 0.0, k: 0 };

    pub fn at(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn apply(&self, yk: f64, yl: f64) -> (f64, f64) {
        (self.c * yk + self.s * yl, -self.s * yk + self.c * yl)
    }
}

/// The rotation that maps `(yk, yl)` to `(√(yk²+yl²), 0)`; identity for
/// `(0, 0)`.
pub fn givens_from(yk: f64, yl: f64) -> GivensRotation {
    let r = yk.hypot(yl);
    if r == 0.0 {
        return GivensRotation::IDENTITY;
    }
    GivensRotation { c: yk / r, s: yl / r, k: 0 }
}

/// Non-error terminations specific to this solver and its oracles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mrs3Signal {
    /// The rotated diagonal entry `u_{j,j}` vanished.
    Singular { iteration: usize, diagonal: f64 },
    /// The closed-form Z oracle divides by a zero `Z_i`.
    OracleInapplicable { index: usize },
}

/// What an iteration left behind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Continue,
    /// `β_{j+1}` reached the lucky-breakdown threshold; no further
    /// iteration is possible.
    Exhausted,
}

/// Rolling solver state: Lanczos buffers, the last two rotations, the
/// rotated right-hand side tail and the two-term direction recurrence.
#[derive(Debug)]
pub struct Mrs3State {
    lanczos: LanczosState,
    alpha: f64,
    /// `G_{j−1}` and `G_j`.
    rot_window: [GivensRotation; 2],
    /// Rotated column `ũ_j^j` at rows `j−2, j−1, j, j+1`.
    u_col: [f64; 4],
    mu: f64,
    eps: f64,
    w_prev2: DenseVector,
    w_prev1: DenseVector,
    x: DenseVector,
    singular_tol: f64,
    trace: Option<Mrs3Trace>,
}

/// Full recurrence history, kept only in debug mode.
#[derive(Debug, Clone, Default)]
pub struct Mrs3Trace {
    /// `β_1 .. β_{j+1}`.
    pub betas: Vec<f64>,
    /// `G_1 .. G_j`.
    pub rotations: Vec<GivensRotation>,
    /// Rotated columns, rows `i−2, i−1, i, i+1` for `i = 1..j`.
    pub u_columns: Vec<[f64; 4]>,
    pub q: Vec<DenseVector>,
    pub w: Vec<DenseVector>,
    pub x: Vec<DenseVector>,
    pub x0: DenseVector,
    pub alpha: f64,
}

impl Mrs3State {
    /// Sets up the iteration for `A x = b` from `x0`. Returns `Ok(None)` when
    /// `b − A x0 = 0`.
    pub fn new(
        a: &SssOperator,
        b: &[f64],
        x0: &[f64],
        debug: bool,
        ops: &mut OpCounters,
    ) -> Result<Option<Self>> {
        let n = a.dim();
        check_dim(n, b.len())?;
        check_dim(n, x0.len())?;
        let mut x = ops.alloc(n);
        x.copy_from_slice(x0);
        let mut r0 = ops.alloc(n);
        a.residual_into(b, x0, &mut r0, ops);
        let lanczos = match lanczos_init(r0, ops) {
            Ok(st) => st.with_threshold(breakdown_threshold(n, a.alpha(), a.skew())),
            Err(_) => {
                ops.release(x);
                return Ok(None);
            }
        };
        let beta1 = lanczos.beta_next();
        let w_prev2 = ops.alloc(n);
        let w_prev1 = ops.alloc(n);
        let trace = debug.then(|| Mrs3Trace {
            betas: vec![beta1],
            x0: DenseVector::new(x0.to_vec()).expect("finite x0"),
            alpha: a.alpha(),
            ..Default::default()
        });
        Ok(Some(Self {
            lanczos,
            alpha: a.alpha(),
            rot_window: [GivensRotation::IDENTITY; 2],
            u_col: [0.0; 4],
            mu: 0.0,
            eps: -beta1,
            w_prev2,
            w_prev1,
            x,
            singular_tol: n as f64 * f64::EPSILON * a.scale(),
            trace,
        }))
    }

    pub fn j(&self) -> usize {
        self.lanczos.j()
    }

    /// Signed `ε_j`; `|ε_j| = ‖b − A x_j‖₂` in exact arithmetic.
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn x(&self) -> &DenseVector {
        &self.x
    }

    pub fn u_col(&self) -> [f64; 4] {
        self.u_col
    }

    /// `G_j` (identity before the first iteration).
    pub fn last_rotation(&self) -> GivensRotation {
        self.rot_window[1]
    }

    pub fn lanczos(&self) -> &LanczosState {
        &self.lanczos
    }

    pub fn trace(&self) -> Option<&Mrs3Trace> {
        self.trace.as_ref()
    }

    /// Releases working vectors and returns the iterate and trace.
    fn into_parts(self, ops: &mut OpCounters) -> (DenseVector, Option<Mrs3Trace>) {
        self.lanczos.release(ops);
        ops.release(self.w_prev2);
        ops.release(self.w_prev1);
        (self.x, self.trace)
    }
}

/// One iteration `j−1 → j`.
pub fn mrs3_iterate(state: &mut Mrs3State, a: &SssOperator, ops: &mut OpCounters) -> Result<Step, Mrs3Signal> {
    if let Err(LanczosSignal::LuckyBreakdown { .. }) = state.lanczos.step(a.skew(), ops) {
        return Ok(Step::Exhausted);
    }
    let j = state.lanczos.j();
    let beta_j = state.lanczos.beta_curr();
    let beta_next = state.lanczos.beta_next();

    // Column j of T̃ at rows j−2, j−1, j, j+1; rows ≤ 0 do not exist.
    let mut u = [0.0, if j >= 2 { beta_j } else { 0.0 }, state.alpha, -beta_next];
    let [g_jm2, g_jm1] = state.rot_window;
    if j >= 3 {
        (u[0], u[1]) = g_jm2.apply(u[0], u[1]);
    }
    if j >= 2 {
        (u[1], u[2]) = g_jm1.apply(u[1], u[2]);
    }
    let g_j = givens_from(u[2], u[3]).at(j);
    (u[2], u[3]) = g_j.apply(u[2], u[3]);
    if u[2] <= state.singular_tol {
        return Err(Mrs3Signal::Singular { iteration: j, diagonal: u[2] });
    }

    // Rotated right-hand side: G_j (ε_{j−1}, 0) = (μ_j, ε_j).
    let (mu, eps) = g_j.apply(state.eps, 0.0);

    // w_j = (q_j − u_{j−2,j} w_{j−2}) / u_{j,j}, with q_j = −p_j/β_j,
    // written over w_{j−2}.
    let inv_diag = 1.0 / u[2];
    ops.lincomb(
        -inv_diag / beta_j,
        state.lanczos.p_curr(),
        -u[0] * inv_diag,
        &mut state.w_prev2,
    );
    std::mem::swap(&mut state.w_prev2, &mut state.w_prev1);
    ops.axpy(mu, &state.w_prev1, &mut state.x);

    state.rot_window = [g_jm1, g_j];
    state.u_col = u;
    state.mu = mu;
    state.eps = eps;

    if let Some(trace) = state.trace.as_mut() {
        trace.betas.push(beta_next);
        trace.rotations.push(g_j);
        trace.u_columns.push(u);
        trace.q.push(state.lanczos.q_curr());
        trace.w.push(state.w_prev1.clone());
        trace.x.push(state.x.clone());
    }

    if state.lanczos.is_exhausted(a.skew()) {
        Ok(Step::Exhausted)
    } else {
        Ok(Step::Continue)
    }
}

pub const SOLVER_NAME: &str = "mrs3";

/// Solves `A x = b` from `x0`.
pub fn mrs3_solve(a: &SssOperator, b: &[f64], x0: &[f64], opts: SolveOptions) -> Result<SolveReport> {
    mrs3_solve_traced(a, b, x0, opts, false).map(|(report, _)| report)
}

/// As [`mrs3_solve`], optionally keeping the full recurrence trace.
pub fn mrs3_solve_traced(
    a: &SssOperator,
    b: &[f64],
    x0: &[f64],
    opts: SolveOptions,
    debug: bool,
) -> Result<(SolveReport, Option<Mrs3Trace>)> {
    let mut tracker = Tracker::new(a, b, opts)?;
    check_dim(a.dim(), x0.len())?;
    let mut ops = OpCounters::new();
    let Some(mut state) = Mrs3State::new(a, b, x0, debug, &mut ops)? else {
        tracker.record(0, 0.0, Some(x0));
        let x = DenseVector::new(x0.to_vec())?;
        let report = tracker.finish(SOLVER_NAME, SolveStatus::Converged, 0, ops, ops, None, x);
        return Ok((report, None));
    };
    tracker.record(0, state.eps.abs(), Some(&state.x));
    let setup = ops;

    let mut status = SolveStatus::MaxIterations;
    let mut breakdown = None;
    let mut iterations = 0;
    if tracker.check_converged(state.eps.abs(), &state.x) == Confirm::Yes {
        status = SolveStatus::Converged;
    } else {
        for j in 1..=opts.maxit {
            let step = match mrs3_iterate(&mut state, a, &mut ops) {
                Ok(step) => step,
                Err(Mrs3Signal::Singular { iteration, diagonal }) => {
                    status = SolveStatus::Singular;
                    breakdown = Some((iteration, format!("rotated diagonal u_jj = {diagonal:e} vanished")));
                    break;
                }
                Err(Mrs3Signal::OracleInapplicable { .. }) => unreachable!("oracle signal from solver"),
            };
            iterations = j;
            let res = state.eps.abs();
            tracker.record(j, res, Some(&state.x));
            match tracker.check_converged(res, &state.x) {
                Confirm::Yes => {
                    status = SolveStatus::Converged;
                    break;
                }
                Confirm::Drift => {
                    status = SolveStatus::EstimateDrift;
                    break;
                }
                Confirm::No => {}
            }
            if step == Step::Exhausted {
                status = SolveStatus::Exhausted;
                breakdown = Some((j + 1, format!("Krylov space exhausted (beta = {:e})", state.lanczos.beta_next())));
                break;
            }
        }
    }
    let (x, trace) = state.into_parts(&mut ops);
    let report = tracker.finish(SOLVER_NAME, status, iterations, ops, setup, breakdown, x);
    Ok((report, trace))
}

/// `Z_1 .. Z_{m+1}` and the alternating products `P_i` with
/// `Z_i = P_i + β_i²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZSequence {
    pub values: Vec<f64>,
    products: Vec<f64>,
    betas: Vec<f64>,
}

/// Closed-form oracle for the rotated Ritz diagonals. `betas` are
/// `β_2 .. β_{m+1}`.
///
/// `Z_1 = α²`, `Z_i = P_i + β_i²` with `P_2 = Z_1`, `P_3 = Z_2` and
/// `P_i = P_{i−2} · Z_{i−1}/Z_{i−2}`, which is the alternating product
/// `Z_{i−1} Z_{i−3} ⋯ / (Z_{i−2} Z_{i−4} ⋯)`.
pub fn z_sequence(alpha: f64, betas: &[f64]) -> Result<ZSequence, Mrs3Signal> {
    let m = betas.len();
    // index k holds Z_{k+1}, P_{k+1}
    let mut z = Vec::with_capacity(m + 1);
    let mut p = Vec::with_capacity(m + 1);
    z.push(alpha * alpha);
    p.push(alpha * alpha);
    for i in 2..=m + 1 {
        let beta = betas[i - 2];
        let pi = match i {
            2 => z[0],
            3 => z[1],
            _ => {
                let denom = z[i - 3];
                if denom == 0.0 {
                    return Err(Mrs3Signal::OracleInapplicable { index: i - 2 });
                }
                p[i - 3] * z[i - 2] / denom
            }
        };
        p.push(pi);
        z.push(pi + beta * beta);
    }
    Ok(ZSequence { values: z, products: p, betas: betas.to_vec() })
}

impl ZSequence {
    /// `Z_i` (1-based).
    pub fn z(&self, i: usize) -> f64 {
        self.values[i - 1]
    }

    /// Predicted `u_{j,j} = √Z_{j+1}`.
    pub fn diagonal(&self, j: usize) -> f64 {
        self.z(j + 1).sqrt()
    }

    /// Predicted `(c_i, s_i) = (√(P_{i+1}/Z_{i+1}), −β_{i+1}/√Z_{i+1})`
    /// for `α > 0`.
    pub fn rotation(&self, i: usize) -> (f64, f64) {
        let zi1 = self.z(i + 1);
        let c = (self.products[i] / zi1).sqrt();
        let s = -self.betas[i - 1] / zi1.sqrt();
        (c, s)
    }
}

/// Solution of the rotated least-squares problem.
#[derive(Debug, Clone)]
pub struct XiRecovery {
    /// `ξ̂_j`, the coefficients of the correction in the Lanczos basis.
    pub xi: DenseVector,
    /// `|ε_j|`, the last entry of the rotated right-hand side.
    pub residual: f64,
}

/// Rebuilds `U_j ξ = v_j` from the extended Ritz matrix and the recorded
/// rotations `G_1..G_j`, and solves it by back substitution. Debug only.
pub fn recover_xi(ritz: &ExtendedRitz, rotations: &[GivensRotation], r0_norm: f64) -> Result<XiRecovery, Mrs3Signal> {
    let j = ritz.j();
    assert!(rotations.len() >= j, "need one rotation per column");
    let mut u: DMatrix<f64> = ritz.to_dense();
    let mut v = DVector::zeros(j + 1);
    v[0] = -r0_norm;
    for (i, g) in rotations.iter().take(j).enumerate() {
        for c in 0..j {
            let (top, bottom) = g.apply(u[(i, c)], u[(i + 1, c)]);
            u[(i, c)] = top;
            u[(i + 1, c)] = bottom;
        }
        let (top, bottom) = g.apply(v[i], v[i + 1]);
        v[i] = top;
        v[i + 1] = bottom;
    }
    let scale = u.amax();
    let mut xi = vec![0.0; j];
    for r in (0..j).rev() {
        let diag = u[(r, r)];
        if diag.abs() <= f64::EPSILON * scale {
            return Err(Mrs3Signal::Singular { iteration: r + 1, diagonal: diag });
        }
        let tail: f64 = ((r + 1)..j).map(|c| u[(r, c)] * xi[c]).sum();
        xi[r] = (v[r] - tail) / diag;
    }
    Ok(XiRecovery { xi: DenseVector::new(xi).expect("finite coefficients"), residual: v[j].abs() })
}

impl Mrs3Trace {
    /// The rotated upper-triangular `U_j` (including the theoretically zero
    /// superdiagonal entries as computed).
    pub fn u_matrix(&self) -> DMatrix<f64> {
        let j = self.u_columns.len();
        let mut u = DMatrix::zeros(j, j);
        for (c, col) in self.u_columns.iter().enumerate() {
            for (off, &v) in col.iter().take(3).enumerate() {
                // rows c−2, c−1, c (0-based)
                if let Some(r) = (c + off).checked_sub(2) {
                    u[(r, c)] = v;
                }
            }
        }
        u
    }

    /// `max |W_j U_j − Q_j|`.
    pub fn w_recurrence_error(&self) -> f64 {
        let j = self.w.len();
        if j == 0 {
            return 0.0;
        }
        let n = self.w[0].len();
        let w = DMatrix::from_fn(n, j, |i, c| self.w[c][i]);
        let q = DMatrix::from_fn(n, j, |i, c| self.q[c][i]);
        (w * self.u_matrix() - q).amax()
    }

    /// `max_i |x_0 + Q_i ξ̂_i − x_i|` over the recorded iterations, using
    /// [`recover_xi`] on the recorded coefficients and rotations.
    pub fn xi_recovery_error(&self) -> Result<f64, Mrs3Signal> {
        let mut worst = 0.0f64;
        for (i, x_i) in self.x.iter().enumerate() {
            worst = worst.max(self.xi_error_at(i + 1, x_i)?);
        }
        Ok(worst)
    }

    fn xi_error_at(&self, j: usize, x_j: &DenseVector) -> Result<f64, Mrs3Signal> {
        let ritz = ExtendedRitz { alpha: self.alpha, betas: self.betas[1..=j].to_vec() };
        let rec = recover_xi(&ritz, &self.rotations, self.betas[0])?;
        let mut x = self.x0.clone();
        for (c, &coef) in rec.xi.iter().enumerate() {
            for (xi, qi) in x.iter_mut().zip(self.q[c].iter()) {
                *xi += coef * qi;
            }
        }
        Ok(x.max_abs_diff(x_j))
    }
}
