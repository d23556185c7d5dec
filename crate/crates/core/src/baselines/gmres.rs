//! GMRES with modified Gram–Schmidt Arnoldi and Givens rotations, full or
//! restarted every `m` iterations.

use crate::error::{check_dim, Error, Result};
use crate::mrs3::{givens_from, GivensRotation};
use crate::operators::{norm2, DenseVector, OpCounters, SssOperator, Transpose};
use crate::report::{Confirm, SolveOptions, SolveReport, SolveStatus, Tracker};

/// Solves the `k × k` upper-triangular system stored column-wise in `h`.
fn back_substitute(h: &[Vec<f64>], g: &[f64]) -> Vec<f64> {
    let k = g.len();
    let mut y = g.to_vec();
    for i in (0..k).rev() {
        for l in i + 1..k {
            y[i] -= h[l][i] * y[l];
        }
        y[i] /= h[i][i];
    }
    y
}

/// `x + Σ y_i v_i` without touching the counters (for audits).
fn peek(x: &[f64], basis: &[DenseVector], y: &[f64]) -> Vec<f64> {
    let mut out = x.to_vec();
    for (v, yi) in basis.iter().zip(y) {
        for (o, vi) in out.iter_mut().zip(v.iter()) {
            *o += yi * vi;
        }
    }
    out
}

/// GMRES; `restart = None` keeps the whole Krylov basis.
pub fn gmres_solve(
    a: &SssOperator,
    b: &[f64],
    x0: &[f64],
    opts: SolveOptions,
    restart: Option<usize>,
) -> Result<SolveReport> {
    if restart == Some(0) {
        return Err(Error::InvalidInput("restart length must be at least 1".into()));
    }
    let mut t = Tracker::new(a, b, opts)?;
    check_dim(a.dim(), x0.len())?;
    let n = a.dim();
    let name = match restart {
        Some(m) => format!("gmres{m}"),
        None => "gmres".to_string(),
    };
    let cycle_len = restart.unwrap_or(usize::MAX).min(n.max(1));
    let lucky = n as f64 * f64::EPSILON * a.scale();
    let mut ops = OpCounters::new();

    let mut x = ops.alloc(n);
    x.copy_from_slice(x0);
    let mut r = ops.alloc(n);
    a.residual_into(b, x0, &mut r, &mut ops);
    let mut res = ops.norm(&r);
    t.record(0, res, Some(&x));
    let setup = ops;

    let mut status = SolveStatus::MaxIterations;
    let mut iterations = 0;
    let mut breakdown = None;
    let mut done = match t.check_converged(res, &x) {
        Confirm::Yes => {
            status = SolveStatus::Converged;
            true
        }
        _ => false,
    };

    while !done && iterations < opts.maxit {
        // New cycle from r = b − A x, ‖r‖ = res.
        let mut basis: Vec<DenseVector> = Vec::new();
        let mut v = ops.alloc(n);
        ops.lincomb(1.0 / res, &r, 0.0, &mut v);
        basis.push(v);
        let mut h: Vec<Vec<f64>> = Vec::new();
        let mut rots: Vec<GivensRotation> = Vec::new();
        let mut g = vec![res];
        let mut end_cycle = false;

        while !end_cycle {
            let k = h.len();
            let mut w = ops.alloc(n);
            a.apply_into(&basis[k], &mut w, Transpose::No, &mut ops);
            let mut col = vec![0.0; k + 2];
            for (i, vi) in basis.iter().enumerate() {
                col[i] = ops.dot(vi, &w);
                ops.axpy(-col[i], vi, &mut w);
            }
            col[k + 1] = ops.norm(&w);
            let h_next = col[k + 1];
            let happy = col[k + 1] <= lucky * norm2(&col[..=k]).max(f64::MIN_POSITIVE) || col[k + 1] == 0.0;
            for (i, rot) in rots.iter().enumerate() {
                let (p, q) = rot.apply(col[i], col[i + 1]);
                col[i] = p;
                col[i + 1] = q;
            }
            let rot = givens_from(col[k], col[k + 1]);
            let (p, _) = rot.apply(col[k], col[k + 1]);
            col[k] = p;
            col.truncate(k + 1);
            let (gk, gk1) = rot.apply(g[k], 0.0);
            g[k] = gk;
            g.push(gk1);
            rots.push(rot);
            h.push(col);
            iterations += 1;
            res = gk1.abs();

            if h[k][k] == 0.0 {
                // Singular least-squares block: no progress is possible.
                status = SolveStatus::Breakdown;
                breakdown = Some((iterations, format!("Hessenberg diagonal {} vanished", k + 1)));
                ops.release(w);
                h.pop();
                g.truncate(k + 1);
                done = true;
                break;
            }

            let need_x = t.opts.record_iterates
                || t.opts.audit_every.is_some_and(|m| iterations % m == 0)
                || res <= t.threshold();
            let x_peek = need_x.then(|| peek(&x, &basis, &back_substitute(&h, &g[..=k])));
            t.record(iterations, res, x_peek.as_deref());
            if res <= t.threshold() {
                match t.check_converged(res, x_peek.as_deref().expect("formed above")) {
                    Confirm::Yes => {
                        status = SolveStatus::Converged;
                        done = true;
                    }
                    Confirm::Drift => {
                        status = SolveStatus::EstimateDrift;
                        done = true;
                    }
                    Confirm::No => {}
                }
            }
            if !done && t.stagnated(res) {
                status = SolveStatus::Stagnated;
                done = true;
            }

            if happy || done || h.len() >= cycle_len || iterations >= opts.maxit {
                ops.release(w);
                end_cycle = true;
            } else {
                ops.scale(1.0 / h_next, &mut w);
                basis.push(w);
            }
        }

        let k = h.len();
        if k > 0 {
            let y = back_substitute(&h, &g[..k]);
            for (vi, yi) in basis.iter().zip(&y) {
                ops.axpy(*yi, vi, &mut x);
            }
        }
        for v in basis {
            ops.release(v);
        }
        if !done {
            a.residual_into(b, &x, &mut r, &mut ops);
            res = ops.norm(&r);
            if let Confirm::Yes = t.check_converged(res, &x) {
                status = SolveStatus::Converged;
                done = true;
            }
        }
    }
    ops.release(r);
    Ok(t.finish(&name, status, iterations, ops, setup, breakdown, x))
}
