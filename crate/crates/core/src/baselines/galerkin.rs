//! Methods for systems with a definite symmetric part `H = αI`: the
//! three-term generalized conjugate gradient method and the two-term
//! Concus–Golub–Widlund (CGW) method. Both solve `H z = r` as `z = r/α`.

use crate::error::{check_dim, Error, Result};
use crate::operators::{OpCounters, SssOperator, Transpose};
use crate::report::{Confirm, SolveOptions, SolveReport, SolveStatus, Tracker};

fn require_shift(a: &SssOperator, solver: &str) -> Result<()> {
    if a.alpha() == 0.0 {
        return Err(Error::InvalidInput(format!("{solver} requires a nonzero shift (alpha = 0 given)")));
    }
    Ok(())
}

/// Generalized CG from `x_{−1} = x_0 = 0`.
///
/// For `α < 0` the iteration runs on `−A x = −b`, whose symmetric part
/// `−αI` is positive definite; residual norms are unchanged by the sign flip.
pub fn gencg_solve(a: &SssOperator, b: &[f64], opts: SolveOptions) -> Result<SolveReport> {
    require_shift(a, "gencg")?;
    let mut t = Tracker::new(a, b, opts)?;
    let n = a.dim();
    let sign = a.alpha().signum();
    let h = a.alpha().abs();
    let mut ops = OpCounters::new();

    let mut x = ops.alloc(n);
    let mut x_prev = ops.alloc(n);
    let mut r = ops.alloc(n);
    // r_0 = b − A·0 = b
    ops.copy(b, &mut r);
    let mut rr = ops.dot(&r, &r);
    let mut rho_prev = rr / h;
    let mut omega_prev = 1.0;
    t.record(0, rr.sqrt(), Some(&x));
    let setup = ops;

    let mut status = SolveStatus::MaxIterations;
    let mut breakdown = None;
    let mut iterations = 0;
    if t.check_converged(rr.sqrt(), &x) == Confirm::Yes {
        status = SolveStatus::Converged;
    } else {
        for j in 1..=opts.maxit {
            // ρ_{j−1} = (H v, v) with v = (sign·r)/|α|
            let rho = rr / h;
            let omega = if j == 1 { 1.0 } else { 1.0 / (1.0 + (rho / rho_prev) / omega_prev) };
            if !omega.is_finite() || omega == 0.0 {
                status = SolveStatus::Breakdown;
                breakdown = Some((j, format!("omega = {omega:e} is degenerate")));
                break;
            }
            // x_{j} = ω(v + x_{j−1}) + (1 − ω) x_{j−2}, written over x_{j−2}
            ops.lincomb3(omega * sign / h, &r, omega, &x, 1.0 - omega, &mut x_prev);
            std::mem::swap(&mut x, &mut x_prev);
            a.residual_into(b, &x, &mut r, &mut ops);
            rr = ops.dot(&r, &r);
            rho_prev = rho;
            omega_prev = omega;
            iterations = j;

            let res = rr.sqrt();
            t.record(j, res, Some(&x));
            match t.check_converged(res, &x) {
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
            if t.stagnated(res) {
                status = SolveStatus::Stagnated;
                break;
            }
        }
    }
    ops.release(x_prev);
    ops.release(r);
    Ok(t.finish("gencg", status, iterations, ops, setup, breakdown, x))
}

/// CGW: preconditioned CG with `H = αI` and a negated `β_j`.
///
/// Per iteration: one matvec, three vector updates (`x`, `r`, `p`), two
/// inner products (`(Ap, r)` and `(r, r)`), four vectors.
pub fn cgw_solve(a: &SssOperator, b: &[f64], x0: &[f64], opts: SolveOptions) -> Result<SolveReport> {
    require_shift(a, "cgw")?;
    let mut t = Tracker::new(a, b, opts)?;
    check_dim(a.dim(), x0.len())?;
    let n = a.dim();
    let alpha = a.alpha();
    let mut ops = OpCounters::new();

    let mut x = ops.alloc(n);
    x.copy_from_slice(x0);
    let mut r = ops.alloc(n);
    a.residual_into(b, x0, &mut r, &mut ops);
    let mut p = ops.alloc(n);
    let mut ap = ops.alloc(n);
    // z_0 = r_0/α, p_0 = z_0
    ops.lincomb(1.0 / alpha, &r, 0.0, &mut p);
    let mut rr = ops.dot(&r, &r);
    t.record(0, rr.sqrt(), Some(&x));
    let setup = ops;

    let mut status = SolveStatus::MaxIterations;
    let mut breakdown = None;
    let mut iterations = 0;
    if t.check_converged(rr.sqrt(), &x) == Confirm::Yes {
        status = SolveStatus::Converged;
    } else {
        for j in 1..=opts.maxit {
            a.apply_into(&p, &mut ap, Transpose::No, &mut ops);
            // (r, z) / (Ap, z) with z = r/α; the 1/α cancels.
            let ap_r = ops.dot(&ap, &r);
            let step = rr / ap_r;
            if ap_r.abs() <= f64::EPSILON * rr.abs() || !step.is_finite() {
                status = SolveStatus::Breakdown;
                breakdown = Some((j, format!("(A p, z) = {:e} vanished", ap_r / alpha)));
                break;
            }
            ops.axpy(step, &p, &mut x);
            ops.axpy(-step, &ap, &mut r);
            let rr_new = ops.dot(&r, &r);
            let beta = -rr_new / rr;
            ops.lincomb(1.0 / alpha, &r, beta, &mut p);
            rr = rr_new;
            iterations = j;

            let res = rr.sqrt();
            t.record(j, res, Some(&x));
            match t.check_converged(res, &x) {
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
            if t.stagnated(res) {
                status = SolveStatus::Stagnated;
                break;
            }
        }
    }
    for v in [r, p, ap] {
        ops.release(v);
    }
    Ok(t.finish("cgw", status, iterations, ops, setup, breakdown, x))
}
