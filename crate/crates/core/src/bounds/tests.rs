use proptest::prelude::*;

use super::*;
use crate::gram::{build_gram_set, FiniteFunction, GramSet};
use crate::matlin::random::{gaussian_matrix, random_hermitian, rng};
use crate::matlin::{general_op_norm, spectral, CMatrix, C64};

fn gram(spec: &str) -> GramSet {
    build_gram_set(&FiniteFunction::builtin(spec).unwrap()).unwrap()
}

fn small_builtins() -> Vec<&'static str> {
    vec!["ID:1", "CONST:1", "OR:2", "AND:2", "PARITY:2", "ID:2", "CONST:2"]
}

#[test]
fn gamma2_of_all_ones_and_identity() {
    for n in [1, 3, 5] {
        let j = gamma2(HermMat::ones(n).matrix(), 0).unwrap();
        assert!((j.value - 1.0).abs() < 1e-7, "J_{n}: {}", j.value);
        assert!(j.is_certified());
        let i = gamma2(HermMat::identity(n).matrix(), 0).unwrap();
        assert!((i.value - 1.0).abs() < 1e-7, "I_{n}: {}", i.value);
        assert!(i.is_certified());
    }
}

/// Any n×n matrix with unimodular entries and orthogonal rows has γ2 = √n:
/// `‖A‖ = √n` and rows of norm √n give `√n <= γ2 <= √n`.
#[test]
fn gamma2_of_unimodular_orthogonal_matrices() {
    let h2 = CMatrix::from_real_fn(2, 2, |r, c| if r == 1 && c == 1 { -1.0 } else { 1.0 });
    let rep = gamma2(&h2, 1).unwrap();
    assert!((rep.value - 2f64.sqrt()).abs() < 1e-7, "{}", rep.value);
    assert!(rep.is_certified());

    let w = 2.0 * std::f64::consts::PI / 3.0;
    let f3 = CMatrix::from_fn(3, 3, |r, c| C64::from_polar(1.0, w * (r * c) as f64));
    let rep = gamma2(&f3, 1).unwrap();
    assert!(rep.factorization().unwrap().complex);
    assert!((rep.value - 3f64.sqrt()).abs() < 1e-6, "{}", rep.value);
    assert!(rep.is_certified(), "{:?}", (rep.lower, rep.upper));
}

#[test]
fn gamma2_of_rectangular_rank_one() {
    let a = CMatrix::from_real_fn(2, 4, |r, c| [1.0, -1.0][r] * [0.5, 1.0, -1.0, 2.0][c]);
    // γ2(u v^T) = max|u| max|v|
    let rep = gamma2(&a, 3).unwrap();
    assert!((rep.value - 2.0).abs() < 1e-7, "{}", rep.value);
    assert!(rep.is_certified());
}

#[test]
fn gamma2_of_complement_of_f_is_at_most_two() {
    for spec in ["ID:1", "OR:2", "AND:3", "PARITY:3", "MAJ:3", "OR:3"] {
        let g = gram(spec);
        let rep = gamma2(g.j_minus(&g.f).unwrap().matrix(), 5).unwrap();
        assert!(rep.value <= 2.0 + 1e-6, "{spec}: {}", rep.value);
        assert!(rep.is_certified(), "{spec}: {:?}", (rep.lower, rep.upper));
    }
}

#[test]
fn gamma2_report_round_trips() {
    let rep = gamma2(HermMat::ones(3).matrix(), 9).unwrap();
    let json = serde_json::to_string(&rep).unwrap();
    let back: BoundReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, rep);
    assert_eq!(witness_digest(&back.witness).unwrap(), rep.witness_digest);
}

#[test]
fn adv_of_one_bit_identity_is_one() {
    let g = gram("ID:1");
    let rep = adv(&g.f, &g.deltas, 0).unwrap();
    assert!((rep.value - 1.0).abs() < 1e-7, "{}", rep.value);
    assert!(rep.is_certified());
    let w = rep.additive().unwrap();
    let norm_v: f64 = w.v.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!((norm_v - 1.0).abs() < 1e-10);
}

#[test]
fn adv_of_constant_is_zero() {
    let g = gram("CONST:2");
    let rep = adv(&g.f, &g.deltas, 0).unwrap();
    assert!(rep.value.abs() < 1e-9);
    assert!(rep.upper.unwrap().abs() < 1e-7);
    assert!(rep.is_certified());
}

#[test]
fn adv_certified_with_factor_of_two_bracket() {
    for spec in small_builtins() {
        let g = gram(spec);
        let full = adv(&g.f, &g.deltas, 0).unwrap();
        assert!(full.is_certified(), "{spec}: {:?}", (full.lower, full.upper));
        assert!(full.upper.unwrap() >= full.value - 1e-6, "{spec}");
        let pm = adv_pm(&g.f, &g.f, &g.deltas, 0).unwrap();
        assert!(pm.is_certified(), "{spec}");
        assert!(pm.value <= full.value + 1e-4, "{spec}: {} > {}", pm.value, full.value);
        assert!(
            full.value <= 2.0 * pm.value + 1e-4,
            "{spec}: {} > 2 * {}",
            full.value,
            pm.value
        );
    }
}

#[test]
fn adv_rejects_complex_and_non_unit_diagonal() {
    let g = gram("ID:1");
    let bad = HermMat::diag(&[2.0, 1.0]);
    assert!(matches!(adv(&bad, &g.deltas, 0), Err(Error::Precondition(_))));
    let z = CMatrix::from_fn(2, 2, |r, c| match (r, c) {
        (0, 1) => C64::new(0.0, 0.5),
        (1, 0) => C64::new(0.0, -0.5),
        _ => C64::new(1.0, 0.0),
    });
    let complex = HermMat::new(z).unwrap();
    assert!(matches!(adv(&complex, &g.deltas, 0), Err(Error::Precondition(_))));
    assert!(madv_fixed_c(&complex, &g.deltas, 2.0).is_err());
}

fn permuted(m: &HermMat, perm: &[usize]) -> HermMat {
    HermMat::from_real_fn(m.dim(), |x, y| m.re(perm[x], perm[y])).unwrap()
}

#[test]
fn bounds_are_invariant_under_relabeling() {
    let g = gram("OR:2");
    let perm = [2, 0, 3, 1];
    let pf = permuted(&g.f, &perm);
    let pd: Vec<HermMat> = g.deltas.iter().map(|d| permuted(d, &perm)).collect();
    let a = adv(&g.f, &g.deltas, 0).unwrap();
    let b = adv(&pf, &pd, 0).unwrap();
    assert!((a.value - b.value).abs() <= 1e-9, "{} vs {}", a.value, b.value);
    let ma = madv_fixed_c(&g.f, &g.deltas, 1.7).unwrap();
    let mb = madv_fixed_c(&pf, &pd, 1.7).unwrap();
    assert!((ma.value - mb.value).abs() <= 1e-9, "{} vs {}", ma.value, mb.value);
}

/// `W = [[a, b], [b, a]]` with `2a + 2b = 1`: the LMIs reduce to
/// `|b| <= a (c - 1) / c`, so the optimum is `a = c/2`, `b = -(c - 1)/2`.
#[test]
fn madv_one_bit_identity_closed_form() {
    let g = gram("ID:1");
    for c in [1.1, 1.5, 2.0, 4.0] {
        let rep = madv_fixed_c(&g.f, &g.deltas, c).unwrap();
        assert!(rep.is_certified());
        assert!((rep.value - 1.0).abs() < 1e-6, "c={c}: {}", rep.value);
        let w = &rep.multiplicative().unwrap().w;
        assert!((w.re(0, 0) - c / 2.0).abs() < 1e-6);
        assert!((w.re(0, 1) + (c - 1.0) / 2.0).abs() < 1e-6);
    }
}

#[test]
fn madv_of_constant_is_zero() {
    let g = gram("CONST:2");
    for c in [1.2, 3.0] {
        let rep = madv_fixed_c(&g.f, &g.deltas, c).unwrap();
        assert!(rep.value.abs() < 1e-8, "{}", rep.value);
    }
    let sweep = madv_sweep(&g.f, &g.deltas, &SweepOptions::default()).unwrap();
    assert!(sweep.value.abs() < 1e-6);
}

#[test]
fn madv_rejects_bad_c() {
    let g = gram("ID:1");
    for c in [1.0, 0.5, f64::NAN, f64::INFINITY] {
        assert!(matches!(madv_fixed_c(&g.f, &g.deltas, c), Err(Error::Precondition(_))));
    }
}

#[test]
fn madv_objective_nondecreasing_in_c() {
    for spec in small_builtins() {
        let g = gram(spec);
        let mut prev = 0.0;
        for c in [1.05, 1.3, 2.0, 3.5, 8.0] {
            let obj = madv_fixed_c(&g.f, &g.deltas, c)
                .unwrap()
                .multiplicative()
                .unwrap()
                .objective;
            assert!(obj >= prev - 1e-8, "{spec} c={c}: {obj} < {prev}");
            assert!(obj >= 1.0 - 1e-8);
            prev = obj;
        }
    }
}

#[test]
fn madv_witness_gamma_form() {
    let g = gram("OR:2");
    let rep = madv_fixed_c(&g.f, &g.deltas, 1.5).unwrap();
    let mw = rep.multiplicative().unwrap();
    let (gamma, v) = mw.gamma_form().unwrap();
    let back = gamma.hadamard_outer(&crate::matlin::complexify(&v));
    assert!(back.max_abs_diff(&mw.w).unwrap() < 1e-12);
    assert!(spectral(&gamma).unwrap().min_eigenvalue() > -1e-8);
}

#[test]
fn madv_sweep_dominates_grid_and_identity_is_flat() {
    let g = gram("ID:1");
    let s = madv_sweep(&g.f, &g.deltas, &SweepOptions::default()).unwrap();
    assert!((s.value - 1.0).abs() < 1e-6);
    let grid = s.params["grid"].as_array().unwrap();
    assert_eq!(grid.len(), 60);
    for row in grid {
        assert!(s.value >= row[1].as_f64().unwrap());
    }

    let g = gram("OR:2");
    let a = adv(&g.f, &g.deltas, 0).unwrap().value;
    let point = madv_fixed_c(&g.f, &g.deltas, 1.0 + 1.0 / a).unwrap().value;
    let s = madv_sweep(&g.f, &g.deltas, &SweepOptions::default()).unwrap();
    assert!(s.value >= point - 1e-6, "{} < {point}", s.value);
    let again = madv_sweep(&g.f, &g.deltas, &SweepOptions::default()).unwrap();
    assert_eq!(
        serde_json::to_string(&s).unwrap(),
        serde_json::to_string(&again).unwrap()
    );
}

#[test]
fn madv_sweep_against_additive_bound() {
    for spec in small_builtins() {
        let g = gram(spec);
        let a = adv(&g.f, &g.deltas, 0).unwrap().value;
        let s = madv_sweep(&g.f, &g.deltas, &SweepOptions::default()).unwrap().value;
        assert!(s >= a / 2.0 - 1e-3, "{spec}: sweep {s} < adv/2 = {}", a / 2.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn gamma2_dominates_hadamard_ratio(seed in 0u64..10_000, n in 1usize..=6) {
        let mut r = rng(seed);
        let a = random_hermitian(n, seed % 2 == 0, &mut r);
        let b = gaussian_matrix(n, n, seed % 3 == 0, &mut r);
        let rep = gamma2(a.matrix(), seed).unwrap();
        prop_assert!(rep.lower.unwrap() <= rep.value + 1e-6);
        prop_assert!(rep.value - rep.lower.unwrap() <= 1e-4, "{:?}", (rep.lower, rep.value));
        let ab = general_op_norm(&a.matrix().hadamard(&b).unwrap()).unwrap();
        let nb = general_op_norm(&b).unwrap();
        prop_assert!(ab <= rep.value * nb * (1.0 + 1e-6), "{ab} > {} * {nb}", rep.value);
    }
}
