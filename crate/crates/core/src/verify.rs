//! Verification suites. Each suite runs the properties promised by one
//! area of the library on the builtin corpus and on seeded random
//! instances, and records every comparison as a named [`Check`].
//!
//! Instances are generated sequentially from the seed, so a suite report
//! is a pure function of `(suite, seed)`.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    adv, adv_pm, gamma2, madv_fixed_c, madv_sweep, BoundReport, SweepOptions, ADV_CERT_TOL, GAMMA2_CONFIDENCE,
};
use crate::check::Check;
use crate::conic::{self, verify_certificate, ConicProgram, LinExpr, Sense, SolveOptions, Status};
use crate::dpt::{self, DptParams, ErrorMode, JointSignDistribution};
use crate::error::{Error, Result};
use crate::gram::{
    build_gram_set, builtin_corpus, parity_phase_check, tensor_instance, FiniteFunction, GramSet, SigmaChoice,
};
use crate::matlin::random::{
    gaussian_matrix, random_gram, random_hermitian, random_psd, random_simplex, random_unit_vector, rng,
};
use crate::matlin::{general_op_norm, psd_check, spectral, state_fidelity, CMatrix, HermMat};
use crate::outcond::{self, ClassicalDistribution, SupportBounds};
use crate::witness::{self, StructuredTarget};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Preliminaries,
    Adversary,
    Witness,
    Outcond,
    Dpt,
    All,
}

impl Suite {
    pub const PARTS: [Suite; 5] = [
        Suite::Preliminaries,
        Suite::Adversary,
        Suite::Witness,
        Suite::Outcond,
        Suite::Dpt,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Suite::Preliminaries => "preliminaries",
            Suite::Adversary => "adversary",
            Suite::Witness => "witness",
            Suite::Outcond => "outcond",
            Suite::Dpt => "dpt",
            Suite::All => "all",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::PARTS
            .into_iter()
            .chain([Suite::All])
            .find(|p| p.label() == s)
            .ok_or_else(|| Error::Precondition(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteCheck {
    pub suite: String,
    pub claim: String,
    pub instance: String,
    #[serde(flatten)]
    pub check: Check,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// A measured deviation from a stated property that is recorded rather
/// than counted as a failure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Note {
    pub claim: String,
    pub instance: String,
    pub message: String,
    pub values: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub passed: usize,
    pub failed: usize,
    pub checks: Vec<SuiteCheck>,
    pub notes: Vec<Note>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

struct Recorder {
    suite: &'static str,
    checks: Vec<SuiteCheck>,
    notes: Vec<Note>,
}

impl Recorder {
    fn push(&mut self, claim: &str, instance: impl Into<String>, check: Check) {
        self.checks.push(SuiteCheck {
            suite: self.suite.into(),
            claim: claim.into(),
            instance: instance.into(),
            check,
            error: None,
        });
    }

    fn extend(&mut self, claim: &str, instance: &str, checks: impl IntoIterator<Item = Check>) {
        for c in checks {
            self.push(claim, instance, c);
        }
    }

    /// Unwraps `r`, recording a failed check when it is an error.
    fn ok<T>(&mut self, claim: &str, instance: impl Into<String>, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.checks.push(SuiteCheck {
                    suite: self.suite.into(),
                    claim: claim.into(),
                    instance: instance.into(),
                    check: Check::new("error", -1.0, 0.0),
                    error: Some(e.to_string()),
                });
                None
            }
        }
    }

    fn note(&mut self, claim: &str, instance: &str, message: &str, values: &[(&str, f64)]) {
        self.notes.push(Note {
            claim: claim.into(),
            instance: instance.into(),
            message: message.into(),
            values: values.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        });
    }
}

/// Runs one suite (or all of them, in order) from `seed`.
pub fn run_suite(suite: Suite, seed: u64) -> Result<SuiteReport> {
    let parts: Vec<Suite> = if suite == Suite::All {
        Suite::PARTS.to_vec()
    } else {
        vec![suite]
    };
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    for part in parts {
        let mut rec = Recorder {
            suite: part.label(),
            checks: Vec::new(),
            notes: Vec::new(),
        };
        let mut g = rng(seed ^ hash_label(part.label()));
        match part {
            Suite::Preliminaries => preliminaries(&mut rec, &mut g, seed)?,
            Suite::Adversary => adversary(&mut rec, seed)?,
            Suite::Witness => witness_suite(&mut rec, seed)?,
            Suite::Outcond => outcond_suite(&mut rec, &mut g, seed)?,
            Suite::Dpt => dpt_suite(&mut rec, &mut g)?,
            Suite::All => unreachable!(),
        }
        checks.extend(rec.checks);
        notes.extend(rec.notes);
    }
    let passed = checks.iter().filter(|c| c.check.passed).count();
    Ok(SuiteReport {
        suite: suite.label().into(),
        seed,
        failed: checks.len() - passed,
        passed,
        checks,
        notes,
    })
}

fn hash_label(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf29ce484222325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100000001b3))
}

fn gram(spec: &str) -> Result<GramSet> {
    build_gram_set(&FiniteFunction::builtin(spec)?)
}

fn choices(g: &GramSet) -> Vec<SigmaChoice> {
    if g.sigma_f.is_some() {
        vec![SigmaChoice::F, SigmaChoice::SigmaF]
    } else {
        vec![SigmaChoice::F]
    }
}

fn lambda_for(choice: SigmaChoice) -> f64 {
    match choice {
        SigmaChoice::F => 1.0,
        SigmaChoice::SigmaF => 2.0,
    }
}

fn rel_slack(bound: f64, value: f64) -> f64 {
    (bound - value) / bound.abs().max(1.0)
}

fn preliminaries(rec: &mut Recorder, g: &mut ChaCha8Rng, seed: u64) -> Result<()> {
    for i in 0..100 {
        let n = 1 + i % 8;
        let real = i % 2 == 0;
        let a = random_psd(n, 1 + i % n, real, g);
        let b = random_psd(n, n, real, g);
        let min = psd_check(&a.hadamard(&b)?, 0.0)?.min_eigenvalue;
        rec.push(
            "hadamard_psd_closure",
            format!("random#{i} n={n}"),
            Check::new("min_eigenvalue", min, 1e-9),
        );
    }

    for i in 0..100 {
        let n = 2 + i % 7;
        let real = i % 3 != 0;
        let a = gaussian_matrix(n, n, real, g);
        let b = gaussian_matrix(n, n, real, g);
        let inst = format!("random#{i} n={n} real={real}");
        let Some(r) = rec.ok(
            "gamma2_hadamard_bound",
            inst.clone(),
            gamma2(&a, seed.wrapping_add(i as u64)),
        ) else {
            continue;
        };
        let bound = r.value * general_op_norm(&b)?;
        let lhs = general_op_norm(&a.hadamard(&b)?)?;
        rec.push(
            "gamma2_hadamard_bound",
            inst.clone(),
            Check::new("norm_at_most_gamma2_times_norm", rel_slack(bound, lhs), 1e-6),
        );
        if i < 50 {
            let gap = r.upper.unwrap_or(r.value) - r.lower.unwrap_or(f64::NEG_INFINITY);
            rec.push(
                "gamma2_two_sided",
                inst,
                Check::new("primal_minus_dual", GAMMA2_CONFIDENCE - gap, 0.0),
            );
        }
    }

    for n in 1..=4 {
        if let Some(r) = rec.ok("gamma2_of_j", format!("J{n}"), gamma2(HermMat::ones(n).matrix(), seed)) {
            rec.push(
                "gamma2_of_j",
                format!("J{n}"),
                Check::equal("value", r.value, 1.0, 1e-6),
            );
        }
    }

    for spec in builtin_corpus(3) {
        let gs = gram(&spec)?;
        if gs.sigma_f.is_none() {
            continue;
        }
        let jm = gs.j_minus(&gs.f)?;
        if let Some(r) = rec.ok("gamma2_j_minus_f", spec.clone(), gamma2(jm.matrix(), seed)) {
            rec.push(
                "gamma2_j_minus_f",
                spec.clone(),
                Check::new("at_most_2", 2.0 - r.value, 1e-6),
            );
        }
    }

    for i in 0..20 {
        let n = 1 + i % 8;
        let a = random_hermitian(n, i % 2 == 0, g);
        let sd = spectral(&a)?;
        let scale = 1.0 + a.max_abs();
        let inst = format!("random#{i} n={n}");
        rec.push(
            "spectral",
            inst.clone(),
            Check::new("reconstruction", -sd.reconstruct().max_abs_diff(&a)? / scale, 1e-10),
        );
        let u = &sd.eigenvectors;
        let gram_u = u.adjoint().matmul(u)?.sub(&CMatrix::identity(n))?.max_abs();
        rec.push("spectral", inst, Check::new("orthonormality", -gram_u, 1e-10));
    }

    let fid_corpus: Vec<String> = builtin_corpus(2);
    for (i, spec) in fid_corpus.iter().enumerate() {
        let gs = gram(spec)?;
        let Some(sf) = gs.sigma_f.clone() else { continue };
        let n = gs.dim();
        let rho = random_gram(n, 1 + i % n.max(1), i % 2 == 0, g);
        let u = random_unit_vector(n, false, g);
        let j = HermMat::ones(n);
        let f0 = state_fidelity(&rho.hadamard_outer(&u), &sf.hadamard_outer(&u))?;
        let mix = |m: &HermMat| -> Result<HermMat> { Ok(j.add(m)?.scale(0.5).hadamard_outer(&u)) };
        let f1 = state_fidelity(&mix(&rho)?, &mix(&sf)?)?;
        rec.push("fidelity_range", spec.clone(), Check::new("at_least_0", f0, 1e-12));
        rec.push("fidelity_range", spec.clone(), Check::new("at_most_1", 1.0 - f0, 1e-9));
        rec.push(
            "fidelity_mixing",
            spec.clone(),
            Check::new("concavity", f1 - 0.5 - f0 / 2.0, 1e-8),
        );
    }

    let opts = SolveOptions::default();
    for i in 0..6 {
        let n = 2 + i;
        let c = random_hermitian(n, true, g);
        let mut p = ConicProgram::new(Sense::Minimize);
        let x = p.add_psd(n);
        let mut obj = LinExpr::new();
        let mut tr = LinExpr::new();
        for r in 0..n {
            tr.push_psd(x, r, r, 1.0);
            for col in r..n {
                obj.push_psd(x, r, col, if r == col { c.re(r, r) } else { 2.0 * c.re(r, col) });
            }
        }
        p.set_objective(obj);
        p.constrain(tr, 1.0);
        conic_checks(
            rec,
            &format!("min_eigenvalue#{i} n={n}"),
            &p,
            &opts,
            psd_check(&c, 0.0)?.min_eigenvalue,
        )?;

        let cost: Vec<f64> = (0..n).map(|_| g.gen_range(-1.0..1.0)).collect();
        let mut lp = ConicProgram::new(Sense::Minimize);
        let v = lp.add_nonneg(n);
        let mut obj = LinExpr::new();
        let mut tot = LinExpr::new();
        for (k, ck) in cost.iter().enumerate() {
            obj.push_scalar(v, k, *ck);
            tot.push_scalar(v, k, 1.0);
        }
        lp.set_objective(obj);
        lp.constrain(tot, 1.0);
        conic_checks(
            rec,
            &format!("simplex_lp#{i} n={n}"),
            &lp,
            &opts,
            cost.iter().copied().fold(f64::INFINITY, f64::min),
        )?;
    }

    for spec in builtin_corpus(3) {
        let gs = gram(&spec)?;
        let mut mats: Vec<&HermMat> = vec![&gs.f];
        mats.extend(gs.sigma_f.iter());
        mats.extend(gs.deltas.iter());
        let diag_ok = mats
            .iter()
            .all(|m| (0..m.dim()).all(|x| m.get(x, x) == crate::matlin::C64::new(1.0, 0.0)));
        rec.push(
            "gram_unit_diagonal",
            spec.clone(),
            Check::new("exact_ones", if diag_ok { 0.0 } else { -1.0 }, 0.0),
        );
        let lf = witness::lambda_of(&gs.f);
        rec.push(
            "gram_idempotence",
            spec.clone(),
            Check::equal("lambda_F", lf.unwrap_or(f64::NAN).min(1e9), 1.0, 0.0),
        );
        if let Some(sf) = &gs.sigma_f {
            let ls = witness::lambda_of(sf).unwrap_or(f64::NAN).min(1e9);
            let want = if gs.f.max_abs_diff(&gs.j)? == 0.0 { 1.0 } else { 2.0 };
            rec.push(
                "gram_idempotence",
                spec.clone(),
                Check::equal("lambda_sigma_f", ls, want, 0.0),
            );
        }
        for (i, d) in gs.deltas.iter().enumerate() {
            let binary = (0..d.dim()).all(|x| (0..d.dim()).all(|y| matches!(d.re(x, y), v if v == 0.0 || v == 1.0)));
            rec.push(
                "gram_query_matrices",
                spec.clone(),
                Check::new(format!("delta_{i}_binary"), if binary { 0.0 } else { -1.0 }, 0.0),
            );
            rec.push(
                "gram_query_matrices",
                spec.clone(),
                Check::new(format!("delta_{i}_psd"), psd_check(d, 0.0)?.min_eigenvalue, 1e-9),
            );
        }
    }
    for spec in builtin_corpus(2) {
        let f = FiniteFunction::builtin(&spec)?;
        if let Some(ok) = rec.ok("parity_phase_tensor", spec.clone(), parity_phase_check(&f, 2)) {
            rec.push(
                "parity_phase_tensor",
                spec,
                Check::new("k2_matches", if ok { 0.0 } else { -1.0 }, 0.0),
            );
        }
    }
    Ok(())
}

fn conic_checks(rec: &mut Recorder, inst: &str, p: &ConicProgram, opts: &SolveOptions, oracle: f64) -> Result<()> {
    let Some(s) = rec.ok("conic", inst, conic::solve(p, opts)) else {
        return Ok(());
    };
    rec.push(
        "conic",
        inst,
        Check::new("optimal", if s.status == Status::Optimal { 0.0 } else { -1.0 }, 0.0),
    );
    rec.push(
        "conic",
        inst,
        Check::equal("value_matches_oracle", s.primal_value, oracle, 1e-6),
    );
    let cert = verify_certificate(p, &s, opts)?;
    rec.push(
        "conic",
        inst,
        Check::new("certificate_round_trip", if cert.certified { 0.0 } else { -1.0 }, 0.0),
    );
    rec.push(
        "conic",
        inst,
        Check::new("weak_duality_gap", opts.gap_tol - cert.gap, 0.0),
    );
    let again = conic::solve(p, opts)?;
    let same = serde_json::to_vec(&s)? == serde_json::to_vec(&again)?;
    rec.push(
        "conic",
        inst,
        Check::new("deterministic", if same { 0.0 } else { -1.0 }, 0.0),
    );
    Ok(())
}

fn permuted(m: &HermMat, perm: &[usize]) -> HermMat {
    HermMat::hermitize(CMatrix::from_fn(m.dim(), m.dim(), |x, y| m.get(perm[x], perm[y])))
}

fn adversary(rec: &mut Recorder, seed: u64) -> Result<()> {
    let sweep = SweepOptions::default();
    for spec in builtin_corpus(2) {
        let gs = gram(&spec)?;
        for choice in choices(&gs) {
            let sigma = gs.sigma(choice)?;
            let inst = format!("{spec} sigma={}", choice.label());
            let Some(a) = rec.ok("adv_certified", inst.clone(), adv(sigma, &gs.deltas, seed)) else {
                continue;
            };
            let (lo, up) = (a.lower.unwrap_or(a.value), a.upper.unwrap_or(f64::INFINITY));
            rec.push(
                "adv_certified",
                inst.clone(),
                Check::new("upper_minus_lower", ADV_CERT_TOL * (1.0 + lo) - (up - lo), 0.0),
            );
            rec.push(
                "adv_certified",
                inst.clone(),
                Check::new("upper_at_least_lower", up - lo, 1e-6),
            );
            rec.push(
                "adv_certified",
                inst.clone(),
                Check::new("feasible", -a.residuals["constraint_violation"], 1e-8),
            );
            if choice == SigmaChoice::F {
                if let Some(pm) = rec.ok(
                    "adv_factor_of_two",
                    inst.clone(),
                    adv_pm(sigma, &gs.f, &gs.deltas, seed),
                ) {
                    let tol = 1e-4 * (1.0 + a.value);
                    rec.push(
                        "adv_factor_of_two",
                        inst.clone(),
                        Check::new("adv_pm_at_most_adv", a.value - pm.value, tol),
                    );
                    rec.push(
                        "adv_factor_of_two",
                        inst.clone(),
                        Check::new("adv_at_most_twice_adv_pm", 2.0 * pm.value - a.value, tol),
                    );
                }
            }
            let lambda = lambda_for(choice);
            if let Some(s) = rec.ok(
                "madv_sweep_halving",
                inst.clone(),
                madv_sweep(sigma, &gs.deltas, &sweep),
            ) {
                rec.push(
                    "madv_sweep_halving",
                    inst.clone(),
                    Check::new("sweep_at_least_half_lambda_adv", s.value - lambda * a.value / 2.0, 1e-3),
                );
            }
            let mut last = f64::NEG_INFINITY;
            for c in [1.1, 1.5, 2.0, 4.0] {
                let Some(r) = rec.ok(
                    "madv_objective_monotone",
                    inst.clone(),
                    madv_fixed_c(sigma, &gs.deltas, c),
                ) else {
                    break;
                };
                let obj = r.params["objective"].as_f64().unwrap_or(f64::NAN);
                rec.push(
                    "madv_objective_monotone",
                    inst.clone(),
                    Check::new(format!("c={c}"), obj - last, 1e-7),
                );
                last = obj;
            }
        }
    }

    let id1 = gram("ID:1")?;
    for c in [1.1, 1.5, 2.0, 4.0] {
        if let Some(r) = rec.ok(
            "madv_closed_form",
            format!("ID:1 c={c}"),
            madv_fixed_c(&id1.f, &id1.deltas, c),
        ) {
            rec.push(
                "madv_closed_form",
                format!("ID:1 c={c}"),
                Check::equal("value", r.value, 1.0, 1e-6),
            );
        }
    }

    for spec in ["OR:2", "AND:2", "EQ:2"] {
        let gs = gram(spec)?;
        let n = gs.dim();
        let perm: Vec<usize> = (0..n).map(|x| (x * 3 + 1) % n).collect();
        let perm = if is_permutation(&perm) {
            perm
        } else {
            (0..n).rev().collect()
        };
        let pf = permuted(&gs.f, &perm);
        let pd: Vec<HermMat> = gs.deltas.iter().map(|d| permuted(d, &perm)).collect();
        let pair =
            |r1: Result<BoundReport>, r2: Result<BoundReport>| -> Result<(f64, f64)> { Ok((r1?.value, r2?.value)) };
        if let Some((x, y)) = rec.ok(
            "permutation_invariance",
            spec,
            pair(adv(&gs.f, &gs.deltas, seed), adv(&pf, &pd, seed)),
        ) {
            rec.push("permutation_invariance", spec, Check::equal("adv", y, x, 1e-9));
        }
        if let Some((x, y)) = rec.ok(
            "permutation_invariance",
            spec,
            pair(madv_fixed_c(&gs.f, &gs.deltas, 2.0), madv_fixed_c(&pf, &pd, 2.0)),
        ) {
            rec.push("permutation_invariance", spec, Check::equal("madv_c2", y, x, 1e-9));
        }
    }
    Ok(())
}

fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    p.iter().all(|&x| x < p.len() && !std::mem::replace(&mut seen[x], true))
}

fn witness_suite(rec: &mut Recorder, seed: u64) -> Result<()> {
    for spec in builtin_corpus(2) {
        let gs = gram(&spec)?;
        for choice in choices(&gs) {
            let sigma = gs.sigma(choice)?;
            let inst = format!("{spec} sigma={}", choice.label());
            let Some((target, a)) = rec.ok(
                "witness_target",
                inst.clone(),
                StructuredTarget::compute(sigma, &gs.deltas, seed),
            ) else {
                continue;
            };
            let Some(aw) = a.additive() else { continue };
            let Some(nw) = rec.ok(
                "witness_normalize",
                inst.clone(),
                witness::normalize_witness(aw, &target, &gs.deltas),
            ) else {
                continue;
            };
            rec.extend("witness_normalize", &inst, nw.checks.clone());

            let (d, lambda) = (target.d, target.lambda);
            let mut gammas = vec![1e-3];
            if d > 0.0 {
                gammas.push(1.0 / (d * lambda));
            }
            gammas.push(1.0);
            let mut tensor_bundle = None;
            for (gi, &gamma) in gammas.iter().enumerate() {
                let label = format!("{inst} gamma={gamma:.6}");
                let Some(b) = rec.ok(
                    "bundle_conditions",
                    label.clone(),
                    witness::build_mult_witness(&nw.gamma_prime, &target, &gs.deltas, gamma),
                ) else {
                    continue;
                };
                rec.extend("bundle_conditions", &label, b.checks.clone());
                if let Some(mw) = rec.ok(
                    "bundle_conditions",
                    label.clone(),
                    b.as_multiplicative(sigma, &gs.deltas),
                ) {
                    rec.push(
                        "bundle_conditions",
                        label.clone(),
                        Check::new("w_form_lmi", -mw.lmi_residual, 1e-8),
                    );
                    rec.push(
                        "bundle_conditions",
                        label.clone(),
                        Check::new("w_form_normalization", -mw.normalization_residual, 1e-8),
                    );
                }
                if let Some(sdp) = rec.ok(
                    "sdp_dominates_bundle",
                    label.clone(),
                    madv_fixed_c(sigma, &gs.deltas, b.c),
                ) {
                    rec.push(
                        "sdp_dominates_bundle",
                        label.clone(),
                        Check::new("sdp_at_least_bundle", sdp.value - b.value, 1e-6),
                    );
                    if d > 0.0 && gi == 1 {
                        let want = lambda * target.adv / 2.0;
                        if choice == SigmaChoice::F {
                            rec.push(
                                "madv_halving",
                                label.clone(),
                                Check::new("madv_at_least_half_lambda_adv", rel_slack(sdp.value, want), 1e-3),
                            );
                        } else if sdp.value < want * (1.0 - 1e-3) {
                            rec.note(
                                "madv_halving",
                                &label,
                                "at c = 1 + 1/(d lambda) the SDP optimum is below lambda*Adv/2 for the phase target",
                                &[
                                    ("madv", sdp.value),
                                    ("half_lambda_adv", want),
                                    ("bundle_value", b.value),
                                ],
                            );
                        }
                    }
                }
                if gi == gammas.len() / 2 {
                    tensor_bundle = Some(b);
                }
            }

            if choice == SigmaChoice::F && target.adv > 0.0 {
                if let Some(lb) = rec.ok(
                    "limit_witness",
                    inst.clone(),
                    witness::build_limit_witness(aw, sigma, &gs.deltas, 1e-4),
                ) {
                    rec.extend("limit_witness", &inst, lb.checks.clone());
                    rec.push(
                        "limit_witness",
                        inst.clone(),
                        Check::new("ratio_near_adv", 1e-3 * target.adv - (lb.ratio - target.adv).abs(), 0.0),
                    );
                }
            }

            let Some(b) = tensor_bundle else { continue };
            for k in 1..=3 {
                let tl = format!("{inst} k={k}");
                let Some(ti) = rec.ok("tensor_lmis", tl.clone(), tensor_instance(&gs, choice, k)) else {
                    continue;
                };
                if let Some(tr) = rec.ok("tensor_lmis", tl.clone(), witness::tensor_witness_check(&b, &ti)) {
                    rec.extend("tensor_lmis", &tl, tr.checks);
                }
            }
        }
    }
    Ok(())
}

fn outcond_suite(rec: &mut Recorder, g: &mut ChaCha8Rng, seed: u64) -> Result<()> {
    for i in 0..50 {
        let count = 2 + i % 5;
        let dim = 2 + (i / 5) % 5;
        let real = i % 2 == 0;
        let pair = outcond::random_pair(count, dim, real, g);
        let inst = format!("random#{i} count={count} dim={dim} real={real}");
        let Some(a) = rec.ok("fidelity_alignment", inst.clone(), outcond::best_alignment(&pair)) else {
            continue;
        };
        let Some(f) = rec.ok(
            "fidelity_alignment",
            inst.clone(),
            outcond::min_vec_fidelity(&pair.rho(), &pair.sigma(), seed),
        ) else {
            continue;
        };
        rec.push(
            "fidelity_alignment",
            inst.clone(),
            Check::new("agree", 2e-3 - (a.value - f.value).abs(), 0.0),
        );
        rec.push(
            "fidelity_alignment",
            inst.clone(),
            Check::new("bracket", f.value - a.value, 1e-6),
        );
        rec.push(
            "fidelity_alignment",
            inst.clone(),
            Check::new("contraction_attains_value", a.achieved - a.value, 1e-6),
        );
        rec.push(
            "fidelity_alignment",
            inst,
            Check::new("unitary_dilation", -a.unitary_defect, 1e-6),
        );
    }

    for i in 0..100 {
        let n = 1 + i % 6;
        let values: Vec<f64> = (0..n).map(|_| g.gen_range(0.1..5.0)).collect();
        let probs = random_simplex(n, g);
        let delta: f64 = g.gen_range(0.05..=1.0);
        let inst = format!("random#{i} n={n} delta={delta:.4}");
        let p = ClassicalDistribution::new(values, probs)?;
        let Some(r) = rec.ok(
            "expectation_fidelity",
            inst.clone(),
            outcond::min_expectation_under_fidelity(&p, delta),
        ) else {
            continue;
        };
        rec.push("expectation_fidelity", inst.clone(), r.check.clone());
        if i % 10 == 0 {
            let lower = delta * g.gen_range(0.3..1.0);
            if let Some(r2) = rec.ok(
                "expectation_monotone",
                inst.clone(),
                outcond::min_expectation_under_fidelity(&p, lower),
            ) {
                rec.push(
                    "expectation_monotone",
                    inst,
                    Check::new("smaller_delta_smaller_min", r.numerical - r2.numerical, 1e-7),
                );
            }
        }
    }

    for i in 0..100 {
        let a0: f64 = g.gen_range(0.1..3.0);
        let a1 = a0 + g.gen_range(0.0..3.0);
        let abar = g.gen_range(a0..=a1);
        let sb = SupportBounds::new(a0, a1, abar)?;
        let inst = format!("random#{i} a0={a0:.4} a1={a1:.4} abar={abar:.4}");
        if let Some(lp) = rec.ok(
            "bound_expectation_lp",
            inst.clone(),
            outcond::inv_expectation_lp(&sb, 50),
        ) {
            rec.push(
                "bound_expectation_lp",
                inst.clone(),
                Check::equal("lp_equals_closed", lp, outcond::inv_expectation_bound(&sb), 1e-8),
            );
        }
        let delta = g.gen_range(0.0..=1.0);
        let (k1, k2) = (1 + (i % 3) as u32, 1 + (i % 4) as u32);
        let prod =
            outcond::product_expectation_bound(delta, &sb, k1)? * outcond::product_expectation_bound(delta, &sb, k2)?;
        let joint = outcond::product_expectation_bound(delta, &sb, k1 + k2)?;
        rec.push(
            "product_expectation_multiplicative",
            inst,
            Check::equal("k_additive", joint, prod, 1e-12 * (1.0 + prod)),
        );
    }

    for i in 0..10 {
        let pair = outcond::random_pair(4, 3, i % 2 == 0, g);
        let inst = format!("random#{i}");
        if let Some(s) = rec.ok(
            "gamma2_error_sandwich",
            inst.clone(),
            outcond::gamma2_error_sandwich(&pair, seed),
        ) {
            rec.extend("gamma2_error_sandwich", &inst, s.checks);
        }
    }
    Ok(())
}

fn dpt_suite(rec: &mut Recorder, g: &mut ChaCha8Rng) -> Result<()> {
    let fair = JointSignDistribution::product(&[0.0; 4])?;
    let r = dpt::unger_check(&fair, 1.0, 0.0, 1.0)?;
    rec.push("unger_fair_coins", "k=4", Check::equal("tail", r.tail, 1.0 / 16.0, 0.0));
    rec.push(
        "unger_fair_coins",
        "k=4",
        Check::equal("bound", r.bound, (-4.0 * 2f64.ln()).exp(), 1e-15),
    );
    rec.push(
        "unger_fair_coins",
        "k=4",
        Check::equal("bound_is_one_sixteenth", r.bound, 1.0 / 16.0, 1e-15),
    );

    let biased = JointSignDistribution::product(&[0.2; 6])?;
    let r = dpt::unger_check(&biased, 1.0, 0.2, 0.6)?;
    rec.push(
        "unger_biased",
        "k=6",
        Check::new("tail_at_most_bound", r.bound - r.tail, 1e-12),
    );

    for i in 0..100 {
        let k = 1 + i % 10;
        let beta: f64 = g.gen_range(0.0..0.8);
        let lam = g.gen_range(beta..=1.0);
        let parts: Vec<(f64, JointSignDistribution)> = {
            let m = 1 + i % 3;
            let w = random_simplex(m, g);
            w.into_iter()
                .map(|wi| {
                    let b: Vec<f64> = (0..k).map(|_| g.gen_range(-beta..=beta)).collect();
                    Ok((wi, JointSignDistribution::product(&b)?))
                })
                .collect::<Result<_>>()?
        };
        let dist = JointSignDistribution::mixture(&parts)?;
        let r = dpt::unger_check(&dist, 1.0, beta, lam)?;
        let inst = format!("random#{i} k={k} beta={beta:.4} lambda={lam:.4}");
        rec.push(
            "unger_lemma",
            inst.clone(),
            Check::new("hypothesis", -r.worst_moment_slack, 1e-12),
        );
        rec.push(
            "unger_lemma",
            inst,
            Check::new("tail_at_most_bound", r.bound - r.tail, 1e-12),
        );
    }

    for (k, cap_k, delta, mu) in [
        (8u32, 4u32, 0.36f64, 0.9f64),
        (10, 10, 0.25, 0.9),
        (6, 3, 0.5, 0.95),
        (4, 8, 0.81, 1.0),
    ] {
        let beta = delta.sqrt();
        let c = (k as f64 / cap_k as f64).exp();
        let dist = JointSignDistribution::product(&vec![beta; k as usize])?;
        let r = dpt::unger_check(&dist, c, beta, 2.0 * mu - 1.0)?;
        let p = DptParams {
            k,
            delta,
            cap_k,
            mu,
            ..Default::default()
        };
        let (tail, _) = dpt::threshold_tail(&p)?;
        let inst = format!("k={k} K={cap_k} delta={delta} mu={mu}");
        rec.push(
            "threshold_chain",
            inst.clone(),
            Check::equal("lemma_bound_equals_tail", r.bound, tail, 1e-12),
        );
        rec.push(
            "threshold_chain",
            inst,
            Check::new("tail_at_most_bound", r.bound - r.tail, 1e-12),
        );
    }

    let (m, q) = dpt::sdpt_bounds(&DptParams::new(5, 2.0 / 3.0), 1.3, Some(7.0))?;
    rec.push("sdpt_zero", "delta=2/3", Check::equal("mult", m, 0.0, 0.0));
    rec.push(
        "sdpt_zero",
        "delta=2/3",
        Check::equal("main", q.unwrap_or(f64::NAN), 0.0, 0.0),
    );
    let (x, _) = dpt::xor_bounds(&DptParams::new(8, 1.0), 1.0, None)?;
    rec.push(
        "xor_arithmetic",
        "k=8 delta=1 adv=1",
        Check::equal("value", x, 1.0, 0.0),
    );

    for i in 0..20 {
        let p = DptParams {
            k: 1 + i,
            delta: g.gen_range(0.0..=1.0),
            gamma: g.gen_range(0.01..3.0),
            d: g.gen_range(0.0..4.0),
            lambda: 2.0,
            cap_k: 1 + g.gen_range(0..10),
            ..Default::default()
        };
        let inst = format!("random#{i}");
        let a = dpt::product_sigma_bound(&p)?.value;
        let (b, _) = dpt::phase_sdpt_bound(&p, p.d)?;
        rec.push(
            "product_sigma_phase_reduction",
            inst.clone(),
            Check::equal("identical", a, b.value, 1e-12 * (1.0 + a.abs())),
        );
        let p1 = DptParams { mu: 1.0, ..p };
        let (tail, cor) = dpt::threshold_tail(&p1)?;
        rec.push(
            "threshold_corollary",
            inst.clone(),
            Check::equal("mu_1", tail, cor, 1e-12 * (1.0 + cor)),
        );
        if p.d > 0.0 && p.delta > 0.0 {
            let pp = DptParams {
                gamma: 1.0 / (p.delta * p.d),
                ..p
            };
            let (gen, special) = dpt::phase_sdpt_bound(&pp, p.d)?;
            rec.push(
                "phase_specialization",
                inst,
                Check::new("general_at_least_special", gen.value - special, 1e-9),
            );
        }
    }

    for i in 0..100 {
        let (a, b, mu): (f64, f64, f64) = (g.gen(), g.gen(), g.gen_range(0.01..0.99));
        let mid = dpt::relent((a + b) / 2.0, mu)?;
        let avg = (dpt::relent(a, mu)? + dpt::relent(b, mu)?) / 2.0;
        rec.push(
            "relent_convexity",
            format!("random#{i}"),
            Check::new("midpoint", avg - mid, 1e-14),
        );
    }

    let mut deltas: Vec<f64> = (0..100).map(|_| g.gen_range(2.0 / 3.0..=1.0)).collect();
    deltas.sort_by(f64::total_cmp);
    let mut prev = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (i, &delta) in deltas.iter().enumerate() {
        let k = 1 + (i as u32 % 20);
        let adv = 1.7;
        let (s1, _) = dpt::sdpt_bounds(&DptParams::new(k, delta), adv, None)?;
        let (s2, _) = dpt::sdpt_bounds(&DptParams::new(2 * k, delta), adv, None)?;
        let (x1, _) = dpt::xor_bounds(&DptParams::new(k, delta), adv, None)?;
        let (x2, _) = dpt::xor_bounds(&DptParams::new(2 * k, delta), adv, None)?;
        let inst = format!("sample#{i} delta={delta:.6}");
        rec.push(
            "calculators_linear_in_k",
            inst.clone(),
            Check::equal("sdpt", s2, 2.0 * s1, 0.0),
        );
        rec.push(
            "calculators_linear_in_k",
            inst.clone(),
            Check::equal("xor", x2, 2.0 * x1, 0.0),
        );
        let (s, _) = dpt::sdpt_bounds(&DptParams::new(4, delta), adv, None)?;
        let (x, _) = dpt::xor_bounds(&DptParams::new(4, delta), adv, None)?;
        rec.push(
            "calculators_monotone_in_delta",
            inst.clone(),
            Check::new("sdpt", s - prev.0, 0.0),
        );
        rec.push(
            "calculators_monotone_in_delta",
            inst,
            Check::new("xor", x - prev.1, 0.0),
        );
        prev = (s, x);
    }

    for (mode, eps, want) in [
        (ErrorMode::CoherentToNoncoherentTarget, 0.75, 0.5),
        (ErrorMode::PhaseUpper, 0.75, 0.25),
        (ErrorMode::PhaseLower, 0.75, 0.4375),
        (ErrorMode::PhaseLower, 0.0, 0.0),
    ] {
        let v = dpt::error_convert(mode, eps)?;
        rec.push(
            "error_conversion",
            format!("{mode:?} eps={eps}"),
            Check::equal("value", v, want, 1e-15),
        );
    }
    Ok(())
}
