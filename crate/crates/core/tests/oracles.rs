//! Solver outputs checked against dense reference computations.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sss_krylov::baselines::{
    cgw_solve, full_gcr_solve, full_gcr_solve_diagnosed, gmres_solve, trunc_gcr_solve,
};
use sss_krylov::lanczos::lanczos_basis;
use sss_krylov::mrs3::mrs3_solve;
use sss_krylov::problems::{
    condition_number, diagonal_scale_transform, hermitian_split, make_sss_system, spd_split_transform,
    AdvectionConfig,
};
use sss_krylov::{OpCounters, SolveOptions, SolveStatus, SparseSkewMatrix, SssOperator, Transpose};

fn random_skew(n: usize, rng: &mut ChaCha8Rng) -> SparseSkewMatrix {
    let mut upper = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            upper.push((i, j, rng.random_range(-1.0..1.0)));
        }
    }
    SparseSkewMatrix::from_strict_triangle(n, &upper).unwrap()
}

fn random_unit(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

fn grid(alpha: f64, gamma: f64) -> (SssOperator, Vec<f64>, Vec<f64>) {
    let (a, b, x0) = make_sss_system(&AdvectionConfig::new(20, 20, gamma, alpha, 1)).unwrap();
    (a, b.into_vec(), x0.into_vec())
}

/// Dense Arnoldi with two passes of Gram–Schmidt; returns the Hessenberg
/// matrix `H_{k+1,k}`.
fn dense_arnoldi(a: &DMatrix<f64>, r0: &[f64], k: usize) -> DMatrix<f64> {
    let n = a.nrows();
    let mut v: Vec<DVector<f64>> = vec![DVector::from_column_slice(r0).normalize()];
    let mut h = DMatrix::zeros(k + 1, k);
    for j in 0..k {
        let mut w = a * &v[j];
        for _ in 0..2 {
            for (i, vi) in v.iter().enumerate() {
                let c = vi.dot(&w);
                h[(i, j)] += c;
                w -= vi * c;
            }
        }
        h[(j + 1, j)] = w.norm();
        v.push(w / h[(j + 1, j)]);
        assert!(v.len() <= n + 1);
    }
    h
}

#[test]
fn lanczos_coefficients_match_dense_arnoldi() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for alpha in [0.0, 0.3, 5.0] {
        let s = random_skew(12, &mut rng);
        let r0 = random_unit(12, &mut rng);
        let a = SssOperator::new(alpha, s.clone());
        let k = 8;
        let h = dense_arnoldi(&a.to_dense(), &r0, k);
        let run = lanczos_basis(&s, &r0, k, false).unwrap();
        for j in 0..k {
            // Hessenberg column j: α on the diagonal, β_{j+2} below, β_{j+1}
            // above (up to the sign convention of the basis).
            assert!((h[(j, j)] - alpha).abs() < 1e-12, "diagonal {j}");
            assert!((h[(j + 1, j)] - run.betas[j + 1]).abs() < 1e-10, "subdiagonal {j}");
            if j >= 1 {
                assert!((h[(j - 1, j)].abs() - run.betas[j]).abs() < 1e-10, "superdiagonal {j}");
            }
            for i in 0..j.saturating_sub(1) {
                assert!(h[(i, j)].abs() < 1e-10, "entry ({i}, {j}) should vanish");
            }
        }
    }
}

/// `min ‖b − A x‖` over `x ∈ K_j`, from an orthonormal Krylov basis.
fn dense_minimal_residuals(a: &SssOperator, b: &[f64], steps: usize) -> Vec<f64> {
    let run = lanczos_basis(a.skew(), b, steps, true).unwrap();
    let ad = a.to_dense();
    let bv = DVector::from_column_slice(b);
    (1..=run.steps())
        .map(|j| {
            let q = run.basis_matrix(j);
            let aq = &ad * &q;
            let y = aq.clone().svd(true, true).solve(&bv, 1e-14).unwrap();
            (&bv - aq * y).norm()
        })
        .collect()
}

#[test]
fn mrs3_residuals_are_least_squares_optimal() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for alpha in [0.0, 1e-2, 1.0] {
        let a = SssOperator::new(alpha, random_skew(10, &mut rng));
        let b = random_unit(10, &mut rng);
        let rep = mrs3_solve(&a, &b, &[0.0; 10], SolveOptions::new(1e-13, 10)).unwrap();
        let oracle = dense_minimal_residuals(&a, &b, rep.iterations);
        for (j, want) in oracle.iter().enumerate() {
            assert!((rep.residual_history[j + 1] - want).abs() < 1e-9, "alpha {alpha}, j {}", j + 1);
        }
    }
}

#[test]
fn mrs3_two_by_two_pure_skew_reaches_dense_solution() {
    let s = SparseSkewMatrix::from_strict_triangle(2, &[(0, 1, 1.0)]).unwrap();
    let a = SssOperator::new(0.0, s);
    let rep = mrs3_solve(&a, &[1.0, 0.0], &[0.0, 0.0], SolveOptions::new(1e-12, 10)).unwrap();
    assert_eq!(rep.status, SolveStatus::Converged);
    assert!(rep.iterations <= 2);
    let exact = a.to_dense().lu().solve(&DVector::from_column_slice(&[1.0, 0.0])).unwrap();
    assert!(rep.x.max_abs_diff(exact.as_slice()) < 1e-14);
}

#[test]
fn full_gmres_matches_mrs3_on_even_random_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for alpha in [0.1, 1.0, 4.0] {
        let a = SssOperator::new(alpha, random_skew(20, &mut rng));
        let b = random_unit(20, &mut rng);
        let opts = SolveOptions::new(1e-10, 60);
        let m = mrs3_solve(&a, &b, &[0.0; 20], opts).unwrap();
        let g = gmres_solve(&a, &b, &[0.0; 20], opts, None).unwrap();
        for (x, y) in m.residual_history.iter().zip(&g.residual_history) {
            assert!((x - y).abs() <= 1e-8, "alpha {alpha}: {x} vs {y}");
        }
    }
}

#[test]
fn restarted_gmres_cannot_keep_up() {
    let (a, b, x0) = grid(1e-3, 1.0);
    let opts = SolveOptions::new(1e-8, 400);
    assert_eq!(mrs3_solve(&a, &b, &x0, opts).unwrap().status, SolveStatus::Converged);
    let g3 = gmres_solve(&a, &b, &x0, opts, Some(3)).unwrap();
    assert_ne!(g3.status, SolveStatus::Converged);
}

#[test]
fn truncated_gcr_tracks_mrs3_on_the_grid() {
    let (a, b, x0) = grid(10.0, 1.0);
    let opts = SolveOptions::new(1e-10, 400);
    let m = mrs3_solve(&a, &b, &x0, opts).unwrap();
    let t = trunc_gcr_solve(&a, &b, &x0, opts).unwrap();
    assert_eq!(m.iterations, t.iterations);
    for (x, y) in m.residual_history.iter().zip(&t.residual_history) {
        assert!((x - y).abs() <= 1e-8);
    }
}

#[test]
fn full_gcr_orthogonality_and_truncation() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = SssOperator::new(0.5, random_skew(20, &mut rng));
    let b = random_unit(20, &mut rng);
    let opts = SolveOptions::new(1e-12, 20).record_iterates(true);
    let (full, diag) = full_gcr_solve_diagnosed(&a, &b, &[0.0; 20], opts).unwrap();
    let trunc = trunc_gcr_solve(&a, &b, &[0.0; 20], opts).unwrap();
    assert!(diag.max_vv <= 1e-10, "(v_j, v_i) = {}", diag.max_vv);
    assert!(diag.max_rv <= 1e-10, "(r_j, v_i) = {}", diag.max_rv);
    assert!(diag.omitted_coefficients.iter().all(|&c| c <= 1e-10));
    for (x, y) in full.iterates.iter().zip(&trunc.iterates) {
        assert!(x.max_abs_diff(y) <= 1e-9);
    }
    let two = SssOperator::new(1.0, SparseSkewMatrix::from_strict_triangle(2, &[(0, 1, 1.0)]).unwrap());
    let rep = full_gcr_solve(&two, &[1.0, 0.0], &[0.0, 0.0], SolveOptions::new(1e-12, 10)).unwrap();
    assert_eq!((rep.status, rep.iterations), (SolveStatus::Converged, 2));
}

#[test]
fn cgw_two_by_two_matches_galerkin_relation() {
    let two = SssOperator::new(1.0, SparseSkewMatrix::from_strict_triangle(2, &[(0, 1, 1.0)]).unwrap());
    let opts = SolveOptions::new(1e-12, 10);
    let g = cgw_solve(&two, &[1.0, 0.0], &[0.0, 0.0], opts).unwrap();
    let m = mrs3_solve(&two, &[1.0, 0.0], &[0.0, 0.0], opts).unwrap();
    let c = m.residual_history[1] / m.residual_history[0];
    assert!((c - 0.5f64.sqrt()).abs() < 1e-15);
    assert!((g.residual_history[1] - m.residual_history[1] / (1.0 - c * c).sqrt()).abs() < 1e-14);
}

#[test]
fn galerkin_peaks_sit_on_minimal_residual_plateaus() {
    let (a, b, x0) = grid(1e-3, 100.0);
    let opts = SolveOptions::new(1e-10, 400);
    let m = mrs3_solve(&a, &b, &x0, opts).unwrap().residual_history;
    let g = cgw_solve(&a, &b, &x0, opts).unwrap().residual_history;
    let len = m.len().min(g.len());
    let mut peaks = 0;
    for j in 1..len - 1 {
        if g[j] > 1.5 * g[j - 1] && g[j] > 1.5 * g[j + 1] {
            peaks += 1;
            let stalls = (j.saturating_sub(1)..=(j + 1).min(len - 1)).any(|k| k >= 1 && m[k] / m[k - 1] >= 0.999);
            assert!(stalls, "peak at {j} without a plateau");
        }
        assert!(m[j] <= g[j]);
    }
    assert!(peaks > 0, "expected peaks in the Galerkin history");
}

#[test]
fn condition_number_grows_as_the_shift_shrinks() {
    let mut last = 0.0;
    for alpha in [10.0, 1.0, 1e-3, 1e-6] {
        let (a, _, _) = grid(alpha, 1.0);
        let k = condition_number(&a).unwrap();
        assert!(k >= last);
        last = k;
    }
}

#[test]
fn spd_split_with_diagonal_h_equals_diagonal_scaling() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s = random_skew(8, &mut rng);
    let b = random_unit(8, &mut rng);
    let d: Vec<f64> = (0..8).map(|_| rng.random_range(0.5..4.0)).collect();
    let (a1, b1, m1) = diagonal_scale_transform(&d, &s, &b).unwrap();
    let h = DMatrix::from_diagonal(&DVector::from_vec(d));
    let (a2, b2, m2) = spd_split_transform(&h, &s, &b).unwrap();
    assert!((a1.skew().to_dense() - a2.skew().to_dense()).amax() < 1e-13);
    assert!(b1.max_abs_diff(&b2) < 1e-13);
    let y = vec![1.0; 8];
    assert!(m1.apply(&y).unwrap().max_abs_diff(&m2.apply(&y).unwrap()) < 1e-13);
    let id = spd_split_transform(&DMatrix::identity(8, 8), &s, &b).unwrap();
    assert!((id.0.skew().to_dense() - s.to_dense()).amax() < 1e-15);
}

#[test]
fn hermitian_split_of_symmetric_and_skew_matrices() {
    let sym = DMatrix::from_row_slice(2, 2, &[1., 2., 2., 3.]);
    let (h, s) = hermitian_split(&sym).unwrap();
    assert_eq!(h, sym);
    assert_eq!(s.nnz(), 0);
    let skew = DMatrix::from_row_slice(2, 2, &[0., 2., -2., 0.]);
    let (h, s) = hermitian_split(&skew).unwrap();
    assert_eq!(h.amax(), 0.0);
    assert_eq!(s.to_dense(), skew);
}

type SkewCase = (usize, Vec<(usize, usize, f64)>, Vec<f64>, f64);

fn skew_strategy() -> impl Strategy<Value = SkewCase> {
    (2usize..12).prop_flat_map(|n| {
        let entry = (0..n, 0..n, -10.0f64..10.0).prop_filter("off-diagonal", |(i, j, _)| i != j);
        (
            Just(n),
            prop::collection::vec(entry, 0..3 * n),
            prop::collection::vec(-5.0f64..5.0, n),
            -3.0f64..3.0,
        )
    })
}

proptest! {
    #[test]
    fn skew_structure_properties((n, entries, x, alpha) in skew_strategy()) {
        let s = SparseSkewMatrix::from_strict_triangle(n, &entries).unwrap();
        let d = s.to_dense();
        prop_assert_eq!(&d, &(-d.transpose()));
        let mut ops = OpCounters::new();
        let sx = s.skew_matvec(&x, &mut ops).unwrap();
        let quad: f64 = x.iter().zip(sx.iter()).map(|(a, b)| a * b).sum();
        let scale = d.amax() * x.iter().map(|v| v * v).sum::<f64>() + 1.0;
        prop_assert!(quad.abs() <= 1e-12 * scale);

        let a = SssOperator::new(alpha, s);
        let ad = a.to_dense();
        let comm = &ad.transpose() * &ad - &ad * ad.transpose();
        prop_assert!(comm.amax() <= 1e-10 * (1.0 + ad.amax() * ad.amax()));
        let ax = a.apply(&x, Transpose::No, &mut ops).unwrap();
        let atx = a.apply(&x, Transpose::Yes, &mut ops).unwrap();
        let want = &ad * DVector::from_column_slice(&x);
        let want_t = ad.transpose() * DVector::from_column_slice(&x);
        prop_assert!(ax.max_abs_diff(want.as_slice()) <= 1e-12 * (1.0 + want.amax()));
        prop_assert!(atx.max_abs_diff(want_t.as_slice()) <= 1e-12 * (1.0 + want_t.amax()));
    }

    #[test]
    fn mrs3_history_is_monotone((n, entries, b, alpha) in skew_strategy()) {
        let s = SparseSkewMatrix::from_strict_triangle(n, &entries).unwrap();
        let a = SssOperator::new(alpha, s);
        prop_assume!(b.iter().any(|&v| v != 0.0));
        let rep = mrs3_solve(&a, &b, &vec![0.0; n], SolveOptions::new(1e-10, 4 * n)).unwrap();
        prop_assert_eq!(rep.residual_history.len(), rep.iterations + 1);
        for w in rep.residual_history.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
        if rep.status == SolveStatus::Converged {
            let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!(rep.true_final_residual <= 1e-10 * (1.0 + bn));
        }
    }
}
