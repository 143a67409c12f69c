//! Explicit witness transformations: from an additive adversary matrix to a
//! normalized witness with `Γ'∘(J-σ) = λΓ'`, to multiplicative witnesses
//! `Γ_m` at `c = 1 + γ`, and the tensor-power check of `Γ_m^{⊗k}`.
//!
//! Every transformation re-verifies the properties it is supposed to
//! guarantee and records them as [`Check`]s with the measured slack.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{adv, gamma2, AdditiveWitness, BoundReport, MultiplicativeWitness};
pub use crate::check::{all_passed, Check};
use crate::error::{Error, Result};
use crate::gram::{TensorInstance, DIM_CAP};
use crate::matlin::{psd_check, spectral, CMatrix, HermMat, C64};

/// Residual threshold for accepting `(J-σ)∘(J-σ) = λ(J-σ)`.
pub const LAMBDA_TOL: f64 = 1e-9;
/// Tolerance of every matrix inequality checked here.
pub const LMI_TOL: f64 = 1e-8;

/// λ with `(J-σ)∘(J-σ) = λ(J-σ)` entrywise to [`LAMBDA_TOL`], or `None`.
/// For `σ = J` every λ works and 1 is returned.
pub fn lambda_of(sigma: &HermMat) -> Option<f64> {
    let n = sigma.dim();
    let m = CMatrix::from_fn(n, n, |x, y| C64::new(1.0, 0.0) - sigma.get(x, y));
    let (mut num, mut den) = (0.0, 0.0);
    for x in 0..n {
        for y in 0..n {
            let e = m[(x, y)];
            num += (e.conj() * e * e).re;
            den += e.norm_sqr();
        }
    }
    if den == 0.0 {
        return Some(1.0);
    }
    let lambda = num / den;
    let residual = (0..n)
        .flat_map(|x| (0..n).map(move |y| (x, y)))
        .map(|(x, y)| (m[(x, y)] * m[(x, y)] - m[(x, y)] * lambda).norm())
        .fold(0.0, f64::max);
    (residual <= LAMBDA_TOL).then_some(lambda)
}

fn j_minus(m: &HermMat) -> HermMat {
    HermMat::ones(m.dim()).sub(m).expect("same dimension")
}

fn op_norm(m: &HermMat) -> Result<f64> {
    Ok(spectral(m)?.op_norm())
}

fn min_eig(m: &HermMat) -> Result<f64> {
    Ok(psd_check(m, 0.0)?.min_eigenvalue)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuredTarget {
    pub sigma: HermMat,
    pub lambda: f64,
    /// `γ2(J-σ)`
    pub g2: f64,
    /// `Adv(σ)`
    pub adv: f64,
    /// `Adv(σ) / γ2(J-σ)`, zero when `σ = J`.
    pub d: f64,
    /// Both `Adv` and `γ2` were certified by their independent bounds.
    pub certified: bool,
}

impl StructuredTarget {
    /// Builds the target from already computed reports.
    pub fn from_reports(sigma: &HermMat, adv_report: &BoundReport, g2_report: &BoundReport) -> Result<Self> {
        let lambda = lambda_of(sigma)
            .ok_or_else(|| Error::Precondition("(J - sigma)∘(J - sigma) is not a multiple of J - sigma".into()))?;
        let g2 = g2_report.value;
        let adv = adv_report.value;
        let d = if g2 > 1e-12 { adv / g2 } else { 0.0 };
        Ok(StructuredTarget {
            sigma: sigma.clone(),
            lambda,
            g2,
            adv,
            d,
            certified: adv_report.is_certified() && g2_report.is_certified(),
        })
    }

    /// Runs `adv` and `γ2(J-σ)` and returns the target with the additive report.
    pub fn compute(sigma: &HermMat, deltas: &[HermMat], seed: u64) -> Result<(Self, BoundReport)> {
        let a = adv(sigma, deltas, seed)?;
        let g = gamma2(j_minus(sigma).matrix(), seed)?;
        Ok((Self::from_reports(sigma, &a, &g)?, a))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizedWitness {
    /// `Γ' = (Γ∘(J-σ)) / γ2(J-σ)`
    pub gamma_prime: HermMat,
    pub checks: Vec<Check>,
}

/// Additive feasibility slack `1 - max_i ‖Γ∘(J-Δ_i)‖`.
fn additive_slack(gamma: &HermMat, deltas: &[HermMat]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for d in deltas {
        worst = worst.max(op_norm(&gamma.hadamard(&j_minus(d))?)?);
    }
    Ok(1.0 - worst)
}

pub fn normalize_witness(
    w: &AdditiveWitness,
    target: &StructuredTarget,
    deltas: &[HermMat],
) -> Result<NormalizedWitness> {
    let input_slack = additive_slack(&w.gamma, deltas)?;
    if input_slack < -LMI_TOL {
        return Err(Error::Precondition(format!(
            "input witness violates the additive constraints by {:.3e}",
            -input_slack
        )));
    }
    let jms = j_minus(&target.sigma);
    let gp = if target.g2 > 1e-12 {
        w.gamma.hadamard(&jms)?.scale(1.0 / target.g2)
    } else {
        HermMat::zeros(w.gamma.dim())
    };
    let norm = op_norm(&gp)?;
    let structure = gp.hadamard(&jms)?.max_abs_diff(&gp.scale(target.lambda))?;
    let objective = op_norm(&gp.hadamard(&jms)?)?;
    let checks = vec![
        Check::new("input_feasible", input_slack, LMI_TOL),
        Check::new("norm_at_most_d", target.d - norm, LMI_TOL),
        Check::new("structure", -structure, LAMBDA_TOL),
        Check::new("feasible", additive_slack(&gp, deltas)?, LMI_TOL),
        Check::new(
            "objective_at_least_lambda_d",
            objective - target.lambda * target.d,
            1e-6,
        ),
    ];
    Ok(NormalizedWitness {
        gamma_prime: gp,
        checks,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultWitnessBundle {
    pub gamma_m: HermMat,
    pub v: Vec<f64>,
    pub gamma: f64,
    pub c: f64,
    pub lambda: f64,
    pub d: f64,
    /// `ln(Tr(Γ_m(σ∘vv*))) / ln c`
    pub value: f64,
    pub checks: Vec<Check>,
    /// Propagated from an uncertified additive or γ2 value.
    pub uncertified: bool,
}

impl MultWitnessBundle {
    /// `W = Γ_m∘vv*`, the multiplicative SDP variable.
    pub fn w(&self) -> HermMat {
        self.gamma_m.hadamard_outer(&crate::matlin::complexify(&self.v))
    }

    pub fn passed(&self) -> bool {
        all_passed(&self.checks)
    }

    /// Re-evaluates `W` against the multiplicative SDP's constraints.
    pub fn as_multiplicative(&self, sigma: &HermMat, deltas: &[HermMat]) -> Result<MultiplicativeWitness> {
        MultiplicativeWitness::evaluate(self.w(), sigma, deltas, self.c)
    }
}

/// Principal eigenvector of `m` after choosing the sign of `m` whose top
/// eigenvalue is its norm. Returns `(sign, eigenvalue, vector)`.
fn principal(m: &HermMat) -> Result<(f64, f64, Vec<f64>)> {
    if !m.is_real(1e-12) {
        return Err(Error::Precondition("witness transformations need real matrices".into()));
    }
    let sd = spectral(m)?;
    let n = sd.eigenvalues.len();
    let (top, bottom) = (sd.eigenvalues[0], sd.eigenvalues[n - 1]);
    let (sign, value, col) = if -bottom > top {
        (-1.0, -bottom, n - 1)
    } else {
        (1.0, top, 0)
    };
    let v = sd.vector(col).iter().map(|z| z.re).collect();
    Ok((sign, value, v))
}

fn lmi_checks(gm: &HermMat, deltas: &[HermMat], c: f64, label: &str, checks: &mut Vec<Check>) -> Result<()> {
    for (i, d) in deltas.iter().enumerate() {
        let gd = gm.hadamard(d)?;
        checks.push(Check::new(
            format!("{label}upper_{i}"),
            min_eig(&gm.scale(c).sub(&gd)?)?,
            LMI_TOL,
        ));
        checks.push(Check::new(
            format!("{label}lower_{i}"),
            min_eig(&gd.sub(&gm.scale(1.0 / c))?)?,
            LMI_TOL,
        ));
    }
    Ok(())
}

/// `Γ_m = I + γ(dI - Γ')` with `v` the principal eigenvector of `Γ'`.
pub fn build_mult_witness(
    gamma_prime: &HermMat,
    target: &StructuredTarget,
    deltas: &[HermMat],
    gamma: f64,
) -> Result<MultWitnessBundle> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Precondition(format!("gamma must be positive (got {gamma})")));
    }
    let d = target.d;
    let lambda = target.lambda;
    if op_norm(gamma_prime)? > d + LMI_TOL {
        return Err(Error::Precondition("‖Γ'‖ exceeds d".into()));
    }
    let (sign, top, v) = principal(gamma_prime)?;
    if top < 0.0 {
        return Err(Error::Precondition(
            "principal eigenvalue of the witness is negative after sign normalization".into(),
        ));
    }
    let gp = gamma_prime.scale(sign);
    let n = gp.dim();
    let gm = HermMat::identity(n).scale(1.0 + gamma * d).sub(&gp.scale(gamma))?;
    let c = 1.0 + gamma;
    let vc = crate::matlin::complexify(&v);
    let expected = 1.0 + lambda * gamma * d;
    let objective = target.sigma.hadamard_outer(&vc).trace_product(&gm)?;
    let mut checks = vec![
        Check::equal("normalization", gm.quad_form(&vc), 1.0, 1e-8),
        Check::equal("objective", objective, expected, 1e-7),
        Check::new("at_least_identity", min_eig(&gm.shift(-1.0))?, LMI_TOL),
        Check::new(
            "at_most_1_plus_2_gamma_d",
            min_eig(&HermMat::identity(n).scale(1.0 + 2.0 * gamma * d).sub(&gm)?)?,
            LMI_TOL,
        ),
    ];
    lmi_checks(&gm, deltas, c, "lmi_", &mut checks)?;
    Ok(MultWitnessBundle {
        gamma_m: gm,
        v,
        gamma,
        c,
        lambda,
        d,
        value: expected.ln() / c.ln(),
        checks,
        uncertified: !target.certified,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitBundle {
    pub gamma_m: HermMat,
    pub v: Vec<f64>,
    pub gamma: f64,
    pub c: f64,
    /// `‖Γ'‖`
    pub d: f64,
    /// Additive value `‖Γ∘(J-σ)‖`.
    pub b: f64,
    /// `ln((1+γd)/(1+γ(d-b))) / ln(1+γ)`
    pub ratio: f64,
    pub checks: Vec<Check>,
}

/// `Γ' = Γ - Tr((Γ∘σ)vv*) I`, `Γ_m = (I + γ(dI - Γ')) / (1 + γ(d - b))`.
pub fn build_limit_witness(
    w: &AdditiveWitness,
    sigma: &HermMat,
    deltas: &[HermMat],
    gamma: f64,
) -> Result<LimitBundle> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Precondition(format!("gamma must be positive (got {gamma})")));
    }
    let slack = additive_slack(&w.gamma, deltas)?;
    if slack < -LMI_TOL {
        return Err(Error::Precondition(format!(
            "input witness violates the additive constraints by {:.3e}",
            -slack
        )));
    }
    let (sign, b, v) = principal(&w.gamma.hadamard(&j_minus(sigma))?)?;
    if b < 0.0 {
        return Err(Error::Precondition(
            "principal eigenvalue of Γ∘(J-σ) is negative".into(),
        ));
    }
    let gamma_adv = w.gamma.scale(sign);
    let vc = crate::matlin::complexify(&v);
    let shift = gamma_adv.hadamard(sigma)?.quad_form(&vc);
    let gp = gamma_adv.shift(-shift);
    let d = op_norm(&gp)?;
    let n = gp.dim();
    let scale = 1.0 + gamma * (d - b);
    let gm = HermMat::identity(n)
        .scale(1.0 + gamma * d)
        .sub(&gp.scale(gamma))?
        .scale(1.0 / scale);
    let c = 1.0 + gamma;
    let expected = (1.0 + gamma * d) / scale;
    let mut checks = vec![
        Check::equal("normalization", gm.quad_form(&vc), 1.0, 1e-8),
        Check::equal(
            "objective",
            sigma.hadamard_outer(&vc).trace_product(&gm)?,
            expected,
            1e-7,
        ),
        Check::new("psd", min_eig(&gm)?, LMI_TOL),
    ];
    lmi_checks(&gm, deltas, c, "lmi_", &mut checks)?;
    Ok(LimitBundle {
        gamma_m: gm,
        v,
        gamma,
        c,
        d,
        b,
        ratio: expected.ln() / c.ln(),
        checks,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorReport {
    pub k: usize,
    pub c: f64,
    pub dim: usize,
    pub normalization: f64,
    pub objective: f64,
    /// `(1 + λγd)^k`
    pub expected_objective: f64,
    pub checks: Vec<Check>,
}

impl TensorReport {
    pub fn passed(&self) -> bool {
        all_passed(&self.checks)
    }

    /// Smallest LMI slack over all `(p, q)`.
    pub fn min_lmi_slack(&self) -> f64 {
        self.checks
            .iter()
            .filter(|c| c.name.starts_with("lmi_"))
            .map(|c| c.slack)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Checks `c^{-1} Γ_m^{⊗k} ⪯ Γ_m^{⊗k}∘Δ_{p,q} ⪯ c Γ_m^{⊗k}` for every `(p, q)`
/// with the bundle's own `c`, plus normalization and objective of the
/// tensor-power witness against `σ^{⊗k}`.
pub fn tensor_witness_check(bundle: &MultWitnessBundle, inst: &TensorInstance) -> Result<TensorReport> {
    let k = inst.k;
    let base = bundle.gamma_m.dim();
    let dim = inst.dim();
    if dim > DIM_CAP {
        return Err(Error::DimensionCap { dim, cap: DIM_CAP });
    }
    if base.pow(k as u32) != dim {
        return Err(Error::dims(base.pow(k as u32), dim));
    }
    let gk = bundle.gamma_m.kron_pow(k);
    let vk = kron_vec(&bundle.v, k);
    let vc = crate::matlin::complexify(&vk);
    let normalization = gk.quad_form(&vc);
    let objective = inst.sigma_k.hadamard_outer(&vc).trace_product(&gk)?;
    let expected = (1.0 + bundle.lambda * bundle.gamma * bundle.d).powi(k as i32);
    let c = bundle.c;
    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|p| (0..inst.deltas[p].len()).map(move |q| (p, q)))
        .collect();
    let lmi: Vec<Result<[Check; 2]>> = pairs
        .par_iter()
        .map(|&(p, q)| {
            let gd = gk.hadamard(&inst.deltas[p][q])?;
            Ok([
                Check::new(format!("lmi_upper_{p}_{q}"), min_eig(&gk.scale(c).sub(&gd)?)?, LMI_TOL),
                Check::new(
                    format!("lmi_lower_{p}_{q}"),
                    min_eig(&gd.sub(&gk.scale(1.0 / c))?)?,
                    LMI_TOL,
                ),
            ])
        })
        .collect();
    let mut checks = vec![
        Check::equal("normalization", normalization, 1.0, 1e-8),
        Check::equal("objective", objective / expected, 1.0, 1e-6),
    ];
    for pair in lmi {
        checks.extend(pair?);
    }
    Ok(TensorReport {
        k,
        c,
        dim,
        normalization,
        objective,
        expected_objective: expected,
        checks,
    })
}

fn kron_vec(v: &[f64], k: usize) -> Vec<f64> {
    let mut out = vec![1.0];
    for _ in 0..k {
        out = out.iter().flat_map(|a| v.iter().map(move |b| a * b)).collect();
    }
    out
}
