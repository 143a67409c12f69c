use proptest::prelude::*;

use super::*;
use crate::matlin::random::{gaussian_matrix, random_psd, rng};
use crate::matlin::real::min_eigenvalue;

fn opts() -> SolveOptions {
    SolveOptions::default()
}

/// minimize t s.t. tI - diag(1, 3) = Z, Z PSD
fn lambda_max_program() -> ConicProgram {
    let mut p = ConicProgram::new(Sense::Minimize);
    let t = p.add_free(1);
    let z = p.add_psd(2);
    p.set_objective(LinExpr::new().scalar(t, 0, 1.0));
    p.constrain(LinExpr::new().psd(z, 0, 0, 1.0).scalar(t, 0, -1.0), -1.0);
    p.constrain(LinExpr::new().psd(z, 1, 1, 1.0).scalar(t, 0, -1.0), -3.0);
    p.constrain(LinExpr::new().psd(z, 0, 1, 1.0), 0.0);
    p
}

#[test]
fn lambda_max_of_diagonal() {
    let p = lambda_max_program();
    let s = solve(&p, &opts()).unwrap();
    assert_eq!(s.status, Status::Optimal);
    assert!((s.primal_value - 3.0).abs() < 1e-7, "{}", s.primal_value);
    assert!((s.dual_value - 3.0).abs() < 1e-7);
    let rep = verify_certificate(&p, &s, &opts()).unwrap();
    assert!(rep.certified, "{:?}", rep.violations);
    assert!(rep.residuals.primal_eq <= 1e-8 && rep.residuals.dual_eq <= 1e-8);
}

#[test]
fn trace_over_unit_sum_is_unbounded() {
    // W(t) = diag(1, 0) + t [[1, -1], [-1, 1]] keeps Tr(WJ) = 1 with Tr(W) = 1 + 2t.
    let mut p = ConicProgram::new(Sense::Maximize);
    let w = p.add_psd(2);
    p.set_objective(LinExpr::new().psd(w, 0, 0, 1.0).psd(w, 1, 1, 1.0));
    p.constrain(
        LinExpr::new().psd(w, 0, 0, 1.0).psd(w, 1, 1, 1.0).psd(w, 0, 1, 2.0),
        1.0,
    );
    let s = solve(&p, &opts()).unwrap();
    assert_eq!(s.status, Status::Unbounded);
    let rep = verify_certificate(&p, &s, &opts()).unwrap();
    assert!(rep.certified, "{:?}", rep.violations);
}

#[test]
fn min_trace_over_unit_sum() {
    // W = [[a, b], [b, d]], a + d + 2b = 1, b^2 <= ad <= ((a + d) / 2)^2 gives a + d >= 1/2.
    let mut p = ConicProgram::new(Sense::Minimize);
    let w = p.add_psd(2);
    p.set_objective(LinExpr::new().psd(w, 0, 0, 1.0).psd(w, 1, 1, 1.0));
    p.constrain(
        LinExpr::new().psd(w, 0, 0, 1.0).psd(w, 1, 1, 1.0).psd(w, 0, 1, 2.0),
        1.0,
    );
    let s = solve(&p, &opts()).unwrap();
    assert_eq!(s.status, Status::Optimal);
    assert!((s.primal_value - 0.5).abs() < 1e-7);
    let wm = s.matrix(w);
    for r in 0..2 {
        for c in 0..2 {
            assert!((wm[(r, c)] - 0.25).abs() < 1e-4);
        }
    }
}

#[test]
fn infeasible_scalar_bounds() {
    // x >= 0 and x + s = -1 with s >= 0
    let mut p = ConicProgram::new(Sense::Minimize);
    let x = p.add_nonneg(2);
    p.set_objective(LinExpr::new().scalar(x, 0, 1.0));
    p.constrain(LinExpr::new().scalar(x, 0, 1.0).scalar(x, 1, 1.0), -1.0);
    let s = solve(&p, &opts()).unwrap();
    assert_eq!(s.status, Status::Infeasible);
    assert!((s.y[0] + 1.0).abs() < 1e-6, "ray {:?}", s.y);
    let rep = verify_certificate(&p, &s, &opts()).unwrap();
    assert!(rep.certified, "{:?}", rep.violations);
}

#[test]
fn lp_vertex() {
    // max x + y s.t. x + 2y <= 4, 3x + y <= 6 → (8/5, 6/5)
    let mut p = ConicProgram::new(Sense::Maximize);
    let v = p.add_nonneg(4);
    p.set_objective(LinExpr::new().scalar(v, 0, 1.0).scalar(v, 1, 1.0));
    p.constrain(
        LinExpr::new().scalar(v, 0, 1.0).scalar(v, 1, 2.0).scalar(v, 2, 1.0),
        4.0,
    );
    p.constrain(
        LinExpr::new().scalar(v, 0, 3.0).scalar(v, 1, 1.0).scalar(v, 3, 1.0),
        6.0,
    );
    let s = solve(&p, &opts()).unwrap();
    assert_eq!(s.status, Status::Optimal);
    assert!((s.primal_value - 2.8).abs() < 1e-7);
    assert!((s.vector(v)[0] - 1.6).abs() < 1e-6 && (s.vector(v)[1] - 1.2).abs() < 1e-6);
    // dual of a maximization: min b^T y with A^T y - c >= 0
    assert!(s.dual_value >= s.primal_value - 1e-7);
}

#[test]
fn free_variable_shift() {
    let mut p = ConicProgram::new(Sense::Minimize);
    let z = p.add_free(1);
    let w = p.add_nonneg(1);
    p.set_objective(LinExpr::new().scalar(z, 0, 1.0));
    p.constrain(LinExpr::new().scalar(z, 0, 1.0).scalar(w, 0, -1.0), 2.0);
    let s = solve(&p, &opts()).unwrap();
    assert_eq!(s.status, Status::Optimal);
    assert!((s.vector(z)[0] - 2.0).abs() < 1e-7);
}

#[test]
fn corrupted_solution_is_flagged() {
    let p = lambda_max_program();
    let mut s = solve(&p, &opts()).unwrap();
    if let BlockValue::Matrix(m) = &mut s.primal[1] {
        m[(0, 0)] += 1e-3;
    }
    let rep = verify_certificate(&p, &s, &opts()).unwrap();
    assert!(!rep.certified);
    assert!(!rep.violations.is_empty());
}

#[test]
fn stalled_solution_makes_no_claim() {
    let p = lambda_max_program();
    let s = solve(&p, &SolveOptions { iter_cap: 2, ..opts() }).unwrap();
    assert_eq!(s.status, Status::Stalled);
    let rep = verify_certificate(&p, &s, &opts()).unwrap();
    assert!(!rep.certified);
    assert!(rep.gap.is_finite() && rep.gap > 0.0);
}

#[test]
fn shape_mismatch_is_an_error() {
    let p = lambda_max_program();
    let mut s = solve(&p, &opts()).unwrap();
    s.y.pop();
    assert!(verify_certificate(&p, &s, &opts()).is_err());
}

#[test]
fn malformed_programs_are_rejected() {
    let mut p = ConicProgram::new(Sense::Minimize);
    let x = p.add_psd(2);
    p.constrain(LinExpr::new().psd(x, 0, 2, 1.0), 1.0);
    assert!(matches!(solve(&p, &opts()), Err(Error::MalformedProgram(_))));
    let mut p = ConicProgram::new(Sense::Minimize);
    p.add_psd(MAX_TOTAL_DIM + 1);
    assert!(matches!(solve(&p, &opts()), Err(Error::DimensionCap { .. })));
}

/// Random SDP with a strictly feasible primal point and strictly feasible dual slack.
fn random_sdp(seed: u64, n: usize, m: usize) -> ConicProgram {
    let mut r = rng(seed);
    let x0 = random_psd(n, n, true, &mut r).real_part();
    let mut s0 = random_psd(n, n, true, &mut r).real_part();
    for i in 0..n {
        s0[(i, i)] += 0.1;
    }
    let y0 = gaussian_matrix(m, 1, true, &mut r);
    let mut p = ConicProgram::new(Sense::Minimize);
    let x = p.add_psd(n);
    let mut c = s0;
    for k in 0..m {
        let g = gaussian_matrix(n, n, true, &mut r).re();
        let mut a = g.clone();
        a.add_scaled(1.0, &g.transpose());
        let mut e = LinExpr::new();
        for i in 0..n {
            for j in i..n {
                e.push_psd(x, i, j, if i == j { a[(i, j)] } else { 2.0 * a[(i, j)] });
            }
        }
        p.constrain(e, a.inner(&x0));
        c.add_scaled(y0[(k, 0)].re, &a);
    }
    let mut obj = LinExpr::new();
    for i in 0..n {
        for j in i..n {
            obj.push_psd(x, i, j, if i == j { c[(i, j)] } else { 2.0 * c[(i, j)] });
        }
    }
    p.set_objective(obj);
    p
}

#[test]
fn solve_is_deterministic() {
    let p = random_sdp(11, 5, 6);
    let a = solve(&p, &opts()).unwrap();
    let b = solve(&p, &opts()).unwrap();
    assert_eq!(a, b);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_sdps_solve_and_verify(seed in 0u64..100_000, n in 1usize..=6, m in 1usize..=8) {
        let m = m.min(n * (n + 1) / 2);
        let p = random_sdp(seed, n, m);
        let s = solve(&p, &opts()).unwrap();
        prop_assert_eq!(s.status, Status::Optimal);
        let rep = verify_certificate(&p, &s, &opts()).unwrap();
        prop_assert!(rep.certified, "{:?}", rep.violations);
        prop_assert!(s.primal_value >= s.dual_value - 1e-8 * (1.0 + s.primal_value.abs()));
        prop_assert!(min_eigenvalue(s.matrix(BlockId(0))).unwrap() >= -1e-8);
    }
}
