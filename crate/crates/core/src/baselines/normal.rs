//! Methods based on the normal equations: CGNR (CG on `AᵀA x = Aᵀb`) and
//! the Huang–Wathen–Li method for pure skew systems, which produces the
//! same iterates as CGNR in exact arithmetic.

use super::stop_status;
use crate::error::{check_dim, Result};
use crate::operators::{OpCounters, SparseSkewMatrix, SssOperator, Transpose};
use crate::report::{vanishes, SolveOptions, SolveReport, SolveStatus, Tracker};

/// CGNR. Per iteration: two matvecs (`A p`, `Aᵀ r`), three updates, three
/// inner products, five vectors.
pub fn cgnr_solve(a: &SssOperator, b: &[f64], x0: &[f64], opts: SolveOptions) -> Result<SolveReport> {
    let mut t = Tracker::new(a, b, opts)?;
    check_dim(a.dim(), x0.len())?;
    let n = a.dim();
    let floor = (n as f64 * f64::EPSILON * a.scale()).powi(2);
    let mut ops = OpCounters::new();

    let mut x = ops.alloc(n);
    x.copy_from_slice(x0);
    let mut r = ops.alloc(n);
    a.residual_into(b, x0, &mut r, &mut ops);
    let mut z = ops.alloc(n);
    let mut p = ops.alloc(n);
    let mut w = ops.alloc(n);
    let mut res = ops.norm(&r);
    t.record(0, res, Some(&x));
    let mut status = SolveStatus::MaxIterations;
    let mut breakdown = None;
    let mut iterations = 0;

    a.apply_into(&r, &mut z, Transpose::Yes, &mut ops);
    ops.copy(&z, &mut p);
    let mut zz = ops.dot(&z, &z);
    let setup = ops;

    if let Some(s) = stop_status(&mut t, res, &x).filter(|s| *s == SolveStatus::Converged) {
        status = s;
    } else {
        for j in 1..=opts.maxit {
            a.apply_into(&p, &mut w, Transpose::No, &mut ops);
            let ww = ops.dot(&w, &w);
            // ‖p‖ ≥ ‖z‖ in CG, so this is a conservative floor for ‖A p‖².
            if ww <= floor * zz || !ww.is_finite() {
                status = SolveStatus::Breakdown;
                breakdown = Some((j, format!("(A p, A p) = {ww:e} vanished")));
                break;
            }
            let step = zz / ww;
            ops.axpy(step, &p, &mut x);
            ops.axpy(-step, &w, &mut r);
            a.apply_into(&r, &mut z, Transpose::Yes, &mut ops);
            let zz_new = ops.dot(&z, &z);
            ops.lincomb(1.0, &z, zz_new / zz, &mut p);
            zz = zz_new;
            res = ops.norm(&r);
            iterations = j;

            t.record(j, res, Some(&x));
            if let Some(s) = stop_status(&mut t, res, &x) {
                status = s;
                break;
            }
        }
    }
    for v in [r, z, p, w] {
        ops.release(v);
    }
    Ok(t.finish("cgnr", status, iterations, ops, setup, breakdown, x))
}

/// HWL for `S x = b`, including the explicit residual recomputation each
/// iteration. Per iteration: four matvecs (`A p`, `A x`, `A r`, `A² p`).
pub fn hwl_solve(s: &SparseSkewMatrix, b: &[f64], x0: &[f64], opts: SolveOptions) -> Result<SolveReport> {
    let a = SssOperator::new(0.0, s.clone());
    let mut t = Tracker::new(&a, b, opts)?;
    check_dim(a.dim(), x0.len())?;
    let n = a.dim();
    let mut ops = OpCounters::new();

    let mut x = ops.alloc(n);
    x.copy_from_slice(x0);
    let mut r = ops.alloc(n);
    a.residual_into(b, x0, &mut r, &mut ops);
    let mut p = ops.alloc(n);
    a.apply_into(&r, &mut p, Transpose::No, &mut ops);
    let mut ap = ops.alloc(n);
    let mut a2p = ops.alloc(n);
    let mut ar = ops.alloc(n);
    let mut res = ops.norm(&r);
    t.record(0, res, Some(&x));
    let setup = ops;

    let mut status = SolveStatus::MaxIterations;
    let mut breakdown = None;
    let mut iterations = 0;
    if let Some(s) = stop_status(&mut t, res, &x).filter(|s| *s == SolveStatus::Converged) {
        status = s;
    } else {
        for j in 1..=opts.maxit {
            a.apply_into(&p, &mut ap, Transpose::No, &mut ops);
            let apap = ops.dot(&ap, &ap);
            let pp = ops.dot(&p, &p);
            if vanishes(apap, (n as f64 * a.scale()).powi(2) * f64::EPSILON * pp) {
                status = SolveStatus::Breakdown;
                breakdown = Some((j, format!("(A p, A p) = {apap:e} vanished")));
                break;
            }
            let step = ops.dot(&r, &ap) / apap;
            ops.axpy(step, &p, &mut x);
            a.residual_into(b, &x, &mut r, &mut ops);
            a.apply_into(&r, &mut ar, Transpose::No, &mut ops);
            a.apply_into(&ap, &mut a2p, Transpose::No, &mut ops);
            let beta = ops.dot(&a2p, &ar) / apap;
            ops.lincomb(1.0, &ar, beta, &mut p);
            res = ops.norm(&r);
            iterations = j;

            t.record(j, res, Some(&x));
            if let Some(s) = stop_status(&mut t, res, &x) {
                status = s;
                break;
            }
        }
    }
    for v in [r, p, ap, a2p, ar] {
        ops.release(v);
    }
    Ok(t.finish("hwl", status, iterations, ops, setup, breakdown, x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rot() -> SparseSkewMatrix {
        SparseSkewMatrix::from_strict_triangle(2, &[(0, 1, 1.0)]).unwrap()
    }

    #[test]
    fn cgnr_two_by_two_one_iteration() {
        let a = SssOperator::new(1.0, rot());
        let rep = cgnr_solve(&a, &[1.0, 0.0], &[0.0, 0.0], SolveOptions::new(1e-12, 10)).unwrap();
        assert_eq!(rep.status, SolveStatus::Converged);
        assert_eq!(rep.iterations, 1);
        assert!(rep.x.max_abs_diff(&[0.5, 0.5]) < 1e-15);
        let d = rep.loop_counters();
        assert_eq!((d.matvecs, d.vector_updates, d.inner_products), (2, 3, 3));
        assert_eq!(rep.counters.peak_vectors, 5);
    }

    #[test]
    fn hwl_two_by_two_one_iteration() {
        let rep = hwl_solve(&rot(), &[1.0, 0.0], &[0.0, 0.0], SolveOptions::new(1e-12, 10)).unwrap();
        assert_eq!(rep.status, SolveStatus::Converged);
        assert_eq!(rep.iterations, 1);
        // S x = b with S = [[0,1],[−1,0]], b = (1,0) has the solution (0, 1).
        assert!(rep.x.max_abs_diff(&[0.0, 1.0]) < 1e-15);
    }

    #[test]
    fn zero_rhs_needs_no_iterations() {
        let a = SssOperator::new(0.0, rot());
        let opts = SolveOptions::new(1e-12, 10);
        let rep = cgnr_solve(&a, &[0.0, 0.0], &[0.0, 0.0], opts).unwrap();
        assert_eq!((rep.status, rep.iterations), (SolveStatus::Converged, 0));
        let rep = hwl_solve(&rot(), &[0.0, 0.0], &[0.0, 0.0], opts).unwrap();
        assert_eq!((rep.status, rep.iterations), (SolveStatus::Converged, 0));
        assert_eq!(rep.residual_history, vec![0.0]);
    }
}
