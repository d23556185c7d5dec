//! Bi-CGSTAB in its classical form with shadow residual `r̂ = r_0`.

use super::stop_status;
use crate::error::{check_dim, Result};
use crate::operators::{OpCounters, SssOperator, Transpose};
use crate::report::{vanishes, SolveOptions, SolveReport, SolveStatus, Tracker};

/// Per iteration: two matvecs, four updates (`p`, `s`, `x`, `r`), five inner
/// products (`ρ`, `(r̂, v)`, `(t, s)`, `(t, t)`, `‖r‖`), seven vectors.
pub fn bicgstab_solve(a: &SssOperator, b: &[f64], x0: &[f64], opts: SolveOptions) -> Result<SolveReport> {
    let mut t = Tracker::new(a, b, opts)?;
    check_dim(a.dim(), x0.len())?;
    let n = a.dim();
    let mut ops = OpCounters::new();

    let mut x = ops.alloc(n);
    x.copy_from_slice(x0);
    let mut r = ops.alloc(n);
    a.residual_into(b, x0, &mut r, &mut ops);
    let mut r_hat = ops.alloc(n);
    ops.copy(&r, &mut r_hat);
    let mut p = ops.alloc(n);
    let mut v = ops.alloc(n);
    let mut s = ops.alloc(n);
    let mut tv = ops.alloc(n);
    let mut res = ops.norm(&r);
    let r_hat_norm = res;
    t.record(0, res, Some(&x));
    let setup = ops;

    let (mut rho_prev, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut status = SolveStatus::MaxIterations;
    let mut breakdown = None;
    let mut iterations = 0;
    if let Some(st) = stop_status(&mut t, res, &x).filter(|st| *st == SolveStatus::Converged) {
        status = st;
    } else {
        for j in 1..=opts.maxit {
            let rho = ops.dot(&r_hat, &r);
            if vanishes(rho, r_hat_norm * res) {
                status = SolveStatus::Breakdown;
                breakdown = Some((j, format!("rho = (r_hat, r) = {rho:e} vanished")));
                break;
            }
            if j == 1 {
                ops.copy(&r, &mut p);
            } else {
                let beta = (rho / rho_prev) * (alpha / omega);
                ops.lincomb3(1.0, &r, -beta * omega, &v, beta, &mut p);
            }
            a.apply_into(&p, &mut v, Transpose::No, &mut ops);
            let rv = ops.dot(&r_hat, &v);
            // Near-zero (r̂, A p) is left to the ρ and ω tests: the iteration
            // routinely recovers from it on well-conditioned problems.
            if rv == 0.0 || !rv.is_finite() {
                status = SolveStatus::Breakdown;
                breakdown = Some((j, format!("(r_hat, A p) = {rv:e} vanished")));
                break;
            }
            alpha = rho / rv;
            ops.lincomb3(1.0, &r, -alpha, &v, 0.0, &mut s);
            a.apply_into(&s, &mut tv, Transpose::No, &mut ops);
            let ts = ops.dot(&tv, &s);
            let tt = ops.dot(&tv, &tv);
            if tt == 0.0 {
                // s = 0: x + α p is exact.
                ops.axpy(alpha, &p, &mut x);
                ops.copy(&s, &mut r);
                omega = 0.0;
            } else {
                omega = ts / tt;
                ops.lincomb3(alpha, &p, omega, &s, 1.0, &mut x);
                ops.lincomb3(1.0, &s, -omega, &tv, 0.0, &mut r);
            }
            res = ops.norm(&r);
            rho_prev = rho;
            iterations = j;

            t.record(j, res, Some(&x));
            if let Some(st) = stop_status(&mut t, res, &x) {
                status = st;
                break;
            }
            if vanishes(omega, 1.0) {
                status = SolveStatus::Breakdown;
                breakdown = Some((j + 1, format!("omega = {omega:e} vanished")));
                break;
            }
        }
    }
    for w in [r, r_hat, p, v, s, tv] {
        ops.release(w);
    }
    Ok(t.finish("bicgstab", status, iterations, ops, setup, breakdown, x))
}
