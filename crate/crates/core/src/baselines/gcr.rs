//! Generalized conjugate residual: the truncated form that keeps only the
//! previous direction (Orthomin(1)) and the full form that orthogonalizes
//! against every earlier direction.
//!
//! For `A = αI + S` the truncated form produces the same iterates as the
//! full one, because the dropped coefficients `(v_i, A r_j)`, `i < j`,
//! vanish. For `α = 0` both break down in the second iteration:
//! `γ_1 = (r_0, S r_0)/β_1 = 0`, which forces `β_2 = 0`.

use crate::error::{check_dim, Result};
use crate::operators::{norm2, DenseVector, OpCounters, SssOperator, Transpose};
use crate::report::{Confirm, SolveOptions, SolveReport, SolveStatus, Tracker};

/// Orthogonality measurements gathered by [`full_gcr_solve_diagnosed`].
#[derive(Debug, Clone, Default)]
pub struct GcrDiagnostics {
    /// For each iteration `j+1 ≥ 2`, `max_{i<j} |(v_i, A r_j)|`: the
    /// coefficients the truncated recurrence drops.
    pub omitted_coefficients: Vec<f64>,
    /// `max |(v_j, v_i)|` over `i < j`.
    pub max_vv: f64,
    /// `max |(r_j, v_i)|` over `i ≤ j`.
    pub max_rv: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Variant {
    Truncated,
    Full,
}

pub fn trunc_gcr_solve(a: &SssOperator, b: &[f64], x0: &[f64], opts: SolveOptions) -> Result<SolveReport> {
    gcr(a, b, x0, opts, Variant::Truncated).map(|(r, _)| r)
}

pub fn full_gcr_solve(a: &SssOperator, b: &[f64], x0: &[f64], opts: SolveOptions) -> Result<SolveReport> {
    gcr(a, b, x0, opts, Variant::Full).map(|(r, _)| r)
}

/// Full GCR with the orthogonality diagnostics of every iteration.
pub fn full_gcr_solve_diagnosed(
    a: &SssOperator,
    b: &[f64],
    x0: &[f64],
    opts: SolveOptions,
) -> Result<(SolveReport, GcrDiagnostics)> {
    gcr(a, b, x0, opts, Variant::Full)
}

/// `|γ_j|` below this multiple of `n·ε·‖r_{j−1}‖` counts as zero.
const GAMMA_FACTOR: f64 = 2.0;

fn gcr(
    a: &SssOperator,
    b: &[f64],
    x0: &[f64],
    opts: SolveOptions,
    variant: Variant,
) -> Result<(SolveReport, GcrDiagnostics)> {
    let name = match variant {
        Variant::Truncated => "trunc-gcr",
        Variant::Full => "full-gcr",
    };
    let mut t = Tracker::new(a, b, opts)?;
    check_dim(a.dim(), x0.len())?;
    let n = a.dim();
    let eps_n = GAMMA_FACTOR * n as f64 * f64::EPSILON;
    let mut diag = GcrDiagnostics::default();
    let mut ops = OpCounters::new();

    let mut x = ops.alloc(n);
    x.copy_from_slice(x0);
    let mut r = ops.alloc(n);
    a.residual_into(b, x0, &mut r, &mut ops);
    let mut res = ops.norm(&r);
    t.record(0, res, Some(&x));

    // Truncated: one previous (s, v) pair. Full: all of them.
    let mut s_hist: Vec<DenseVector> = Vec::new();
    let mut v_hist: Vec<DenseVector> = Vec::new();
    let mut s = ops.alloc(n);
    let mut v_prev = ops.alloc(n);
    let mut av = ops.alloc(n);
    let setup = ops;

    let mut status = SolveStatus::MaxIterations;
    let mut breakdown = None;
    let mut iterations = 0;
    let mut gamma_vanished: Option<usize> = None;

    if t.check_converged(res, &x) == Confirm::Yes {
        status = SolveStatus::Converged;
    } else {
        for j in 1..=opts.maxit {
            a.apply_into(&r, &mut av, Transpose::No, &mut ops);
            let r_prev_norm = res;

            match variant {
                Variant::Truncated => {
                    let mu = ops.dot(&v_prev, &av);
                    ops.lincomb(1.0, &r, -mu, &mut s);
                    ops.axpy(-mu, &v_prev, &mut av);
                }
                Variant::Full => {
                    if v_hist.len() >= 2 {
                        let omitted = v_hist[..v_hist.len() - 1]
                            .iter()
                            .map(|vi| vi.dot(&av).abs())
                            .fold(0.0, f64::max);
                        diag.omitted_coefficients.push(omitted);
                    }
                    ops.copy(&r, &mut s);
                    for (si, vi) in s_hist.iter().zip(&v_hist) {
                        let c = ops.dot(vi, &av);
                        ops.axpy(-c, vi, &mut av);
                        ops.axpy(-c, si, &mut s);
                    }
                }
            }

            let beta = ops.norm(&av);
            let beta_floor = eps_n * a.scale() * r_prev_norm;
            if beta <= beta_floor || !beta.is_finite() {
                status = SolveStatus::Breakdown;
                let why = match gamma_vanished {
                    Some(k) => format!("gamma_{k} vanished, so beta_{j} = {beta:e} vanished"),
                    None => format!("beta_{j} = {beta:e} vanished"),
                };
                breakdown = Some((j, why));
                break;
            }
            if let Some(k) = gamma_vanished {
                status = SolveStatus::Breakdown;
                breakdown = Some((j, format!("gamma_{k} vanished (beta_{j} = {beta:e} is rounding noise)")));
                break;
            }
            ops.scale(1.0 / beta, &mut s);
            ops.scale(1.0 / beta, &mut av);

            let gamma = ops.dot(&r, &av);
            ops.axpy(gamma, &s, &mut x);
            ops.axpy(-gamma, &av, &mut r);
            res = ops.norm(&r);
            iterations = j;

            if gamma.abs() <= eps_n * r_prev_norm {
                gamma_vanished = Some(j);
            }

            match variant {
                Variant::Truncated => std::mem::swap(&mut v_prev, &mut av),
                Variant::Full => {
                    let mut s_keep = ops.alloc(n);
                    s_keep.copy_from_slice(&s);
                    let mut v_keep = ops.alloc(n);
                    v_keep.copy_from_slice(&av);
                    for vi in &v_hist {
                        diag.max_vv = diag.max_vv.max(vi.dot(&v_keep).abs());
                    }
                    s_hist.push(s_keep);
                    v_hist.push(v_keep);
                    for vi in &v_hist {
                        diag.max_rv = diag.max_rv.max(vi.dot(&r).abs());
                    }
                }
            }

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
    for v in s_hist.into_iter().chain(v_hist) {
        ops.release(v);
    }
    for v in [r, s, v_prev, av] {
        ops.release(v);
    }
    debug_assert!(norm2(&x).is_finite());
    Ok((t.finish(name, status, iterations, ops, setup, breakdown, x), diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::SparseSkewMatrix;

    fn two_by_two(alpha: f64) -> SssOperator {
        SssOperator::new(alpha, SparseSkewMatrix::from_strict_triangle(2, &[(0, 1, 1.0)]).unwrap())
    }

    #[test]
    fn pure_skew_breaks_down_in_second_iteration() {
        let a = two_by_two(0.0);
        for solve in [trunc_gcr_solve, full_gcr_solve] {
            let rep = solve(&a, &[1.0, 0.0], &[0.0, 0.0], SolveOptions::new(1e-12, 10)).unwrap();
            assert_eq!(rep.status, SolveStatus::Breakdown);
            assert_eq!(rep.breakdown_iteration, Some(2));
            assert_eq!(rep.iterations, 1);
            assert!(rep.breakdown_detail.unwrap().contains("gamma_1"));
        }
    }

    #[test]
    fn shifted_two_by_two_converges() {
        let a = two_by_two(1.0);
        for solve in [trunc_gcr_solve, full_gcr_solve] {
            let rep = solve(&a, &[1.0, 0.0], &[0.0, 0.0], SolveOptions::new(1e-12, 10)).unwrap();
            assert_eq!(rep.status, SolveStatus::Converged);
            assert_eq!(rep.iterations, 2);
            assert!(rep.x.max_abs_diff(&[0.5, 0.5]) < 1e-14);
        }
    }
}
