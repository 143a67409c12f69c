//! Closed-form calculators for the direct product, XOR and threshold
//! bounds, error-parameter conversions, and an exhaustive checker for the
//! threshold lemma on explicit joint sign distributions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `k` accepted by [`JointSignDistribution`].
pub const SIGN_K_CAP: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DptParams {
    pub k: u32,
    pub delta: f64,
    pub gamma: f64,
    pub d: f64,
    pub lambda: f64,
    /// Number of algorithms in the threshold theorem.
    #[serde(rename = "K")]
    pub cap_k: u32,
    pub mu: f64,
}

impl Default for DptParams {
    fn default() -> Self {
        DptParams {
            k: 1,
            delta: 1.0,
            gamma: 1.0,
            d: 1.0,
            lambda: 1.0,
            cap_k: 1,
            mu: 1.0,
        }
    }
}

impl DptParams {
    pub fn new(k: u32, delta: f64) -> Self {
        DptParams {
            k,
            delta,
            ..Default::default()
        }
    }

    fn check_k(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Precondition("k must be positive".into()));
        }
        Ok(())
    }

    fn check_delta(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::Precondition(format!(
                "delta must lie in [0, 1] (got {})",
                self.delta
            )));
        }
        Ok(())
    }

    fn check_gamma(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Precondition(format!(
                "gamma must be positive (got {})",
                self.gamma
            )));
        }
        Ok(())
    }

    fn check_d(&self) -> Result<()> {
        if !(self.d >= 0.0 && self.d.is_finite()) {
            return Err(Error::Precondition(format!("d must be nonnegative (got {})", self.d)));
        }
        Ok(())
    }
}

/// A bound value and whether it is vacuous (not positive).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub value: f64,
    pub vacuous: bool,
}

impl BoundValue {
    fn new(value: f64) -> Self {
        BoundValue {
            value,
            vacuous: !(value > 0.0),
        }
    }
}

/// `x ln(x / y)` with `0 ln 0 = 0`.
fn xlog(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (x / y).ln()
    }
}

/// Binary relative entropy `D(λ‖μ) = λ ln(λ/μ) + (1-λ) ln((1-λ)/(1-μ))`.
pub fn relent(lam: f64, mu: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&lam) {
        return Err(Error::Precondition(format!("lambda must lie in [0, 1] (got {lam})")));
    }
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::Precondition(format!("mu must lie in (0, 1) (got {mu})")));
    }
    Ok(xlog(lam, mu) + xlog(1.0 - lam, 1.0 - mu))
}

/// [`relent`] extended to `μ ∈ {0, 1}` where the divergence is finite.
fn relent_closed(lam: f64, mu: f64) -> Result<f64> {
    if lam == mu {
        return Ok(0.0);
    }
    if (mu == 1.0 && lam == 1.0) || (mu == 0.0 && lam == 0.0) {
        return Ok(0.0);
    }
    relent(lam, mu)
}

/// `k ln(δ(1+2γd) / (1+γd(2-λ))) / (2 ln(1+γ))`
pub fn product_sigma_bound(p: &DptParams) -> Result<BoundValue> {
    p.check_k()?;
    p.check_delta()?;
    p.check_gamma()?;
    p.check_d()?;
    if !(p.lambda > 0.0 && p.lambda <= 2.0) {
        return Err(Error::Precondition(format!(
            "lambda must lie in (0, 2] (got {})",
            p.lambda
        )));
    }
    let gd = p.gamma * p.d;
    let num = p.delta * (1.0 + 2.0 * gd);
    let den = 1.0 + gd * (2.0 - p.lambda);
    Ok(BoundValue::new(
        p.k as f64 * (num / den).ln() / (2.0 * (1.0 + p.gamma).ln()),
    ))
}

/// `(k ln(3δ/2)/8 · adv, k ln(3δ/2)/8000 · q14)` for `2/3 <= δ <= 1`.
pub fn sdpt_bounds(p: &DptParams, adv: f64, q14: Option<f64>) -> Result<(f64, Option<f64>)> {
    p.check_k()?;
    if !(2.0 / 3.0..=1.0).contains(&p.delta) {
        return Err(Error::Precondition(format!(
            "delta must lie in [2/3, 1] (got {}); smaller values give a negative bound",
            p.delta
        )));
    }
    check_nonneg("adv", adv)?;
    if let Some(q) = q14 {
        check_nonneg("q14", q)?;
    }
    let base = p.k as f64 * (1.5 * p.delta).ln();
    Ok((base / 8.0 * adv, q14.map(|q| base / 8000.0 * q)))
}

/// `(kδ/8 · adv, kδ/8000 · q14)`
pub fn xor_bounds(p: &DptParams, adv: f64, q14: Option<f64>) -> Result<(f64, Option<f64>)> {
    p.check_k()?;
    p.check_delta()?;
    check_nonneg("adv", adv)?;
    if let Some(q) = q14 {
        check_nonneg("q14", q)?;
    }
    let base = p.k as f64 * p.delta;
    Ok((base / 8.0 * adv, q14.map(|q| base / 8000.0 * q)))
}

/// General value `k ln(δ(1+2γd)) / (2 ln(1+γ))` with `d = adv`, and the
/// specialization `kδ/4 · adv` at `γ = 1/(δd)`.
pub fn phase_sdpt_bound(p: &DptParams, adv: f64) -> Result<(BoundValue, f64)> {
    p.check_k()?;
    p.check_delta()?;
    p.check_gamma()?;
    check_nonneg("adv", adv)?;
    let general = p.k as f64 * (p.delta * (1.0 + 2.0 * p.gamma * adv)).ln() / (2.0 * (1.0 + p.gamma).ln());
    Ok((BoundValue::new(general), p.k as f64 * p.delta * adv / 4.0))
}

/// `(e^{k/K - k D(μ‖(1+√δ)/2)}, (e^{1/K}(1+√δ)/2)^k)` for `(1+√δ)/2 <= μ <= 1`.
pub fn threshold_tail(p: &DptParams) -> Result<(f64, f64)> {
    p.check_k()?;
    p.check_delta()?;
    if p.cap_k == 0 {
        return Err(Error::Precondition("K must be positive".into()));
    }
    let q = (1.0 + p.delta.sqrt()) / 2.0;
    if !(p.mu >= q && p.mu <= 1.0) {
        return Err(Error::Precondition(format!(
            "mu must lie in [(1+sqrt(delta))/2, 1] = [{q}, 1] (got {})",
            p.mu
        )));
    }
    let k = p.k as f64;
    let kk = p.cap_k as f64;
    let tail = (k / kk - k * relent_closed(p.mu, q)?).exp();
    let corollary = ((1.0 / kk).exp() * q).powf(k);
    Ok((tail, corollary))
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0 && v.is_finite()) {
        return Err(Error::Precondition(format!("{name} must be nonnegative (got {v})")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMode {
    /// `ε ↦ 1 - sqrt(1-ε)`
    CoherentToNoncoherentTarget,
    /// `ε ↦ (1 - sqrt(1-ε)) / 2`
    PhaseUpper,
    /// `ε ↦ (1 - sqrt(1-ε)) / 2 + ε/4`
    PhaseLower,
}

impl std::str::FromStr for ErrorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coherent_to_noncoherent_target" => Ok(ErrorMode::CoherentToNoncoherentTarget),
            "phase_upper" => Ok(ErrorMode::PhaseUpper),
            "phase_lower" => Ok(ErrorMode::PhaseLower),
            other => Err(Error::Precondition(format!("unknown error-conversion mode {other:?}"))),
        }
    }
}

pub fn error_convert(mode: ErrorMode, eps: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::Precondition(format!("eps must lie in [0, 1] (got {eps})")));
    }
    let base = 1.0 - (1.0 - eps).sqrt();
    Ok(match mode {
        ErrorMode::CoherentToNoncoherentTarget => base,
        ErrorMode::PhaseUpper => base / 2.0,
        ErrorMode::PhaseLower => base / 2.0 + eps / 4.0,
    })
}

/// Distribution over `{-1, +1}^k`. Outcome index bit `i` set means `Y_i = +1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointSignDistribution {
    pub k: usize,
    pub probs: Vec<f64>,
}

impl JointSignDistribution {
    pub fn new(k: usize, probs: Vec<f64>) -> Result<Self> {
        if k == 0 || k > SIGN_K_CAP {
            return Err(Error::Precondition(format!("k must lie in 1..={SIGN_K_CAP} (got {k})")));
        }
        if probs.len() != 1 << k {
            return Err(Error::dims(1usize << k, probs.len()));
        }
        if probs.iter().any(|&p| !(p >= 0.0)) || (neumaier(probs.iter().copied()) - 1.0).abs() > 1e-12 {
            return Err(Error::Precondition(
                "probabilities must be nonnegative and sum to 1".into(),
            ));
        }
        Ok(JointSignDistribution { k, probs })
    }

    /// Independent signs with `E[Y_i] = biases[i]`.
    pub fn product(biases: &[f64]) -> Result<Self> {
        if biases.iter().any(|b| !(-1.0..=1.0).contains(b)) {
            return Err(Error::Precondition("biases must lie in [-1, 1]".into()));
        }
        let k = biases.len();
        let probs = (0..1usize << k)
            .map(|o| {
                (0..k)
                    .map(|i| {
                        let plus = (1.0 + biases[i]) / 2.0;
                        if o >> i & 1 == 1 {
                            plus
                        } else {
                            1.0 - plus
                        }
                    })
                    .product()
            })
            .collect();
        Self::new(k, probs)
    }

    /// Convex combination of distributions over the same `k`.
    pub fn mixture(parts: &[(f64, JointSignDistribution)]) -> Result<Self> {
        let k = parts.first().map(|p| p.1.k).unwrap_or(0);
        if parts.iter().any(|p| p.1.k != k) {
            return Err(Error::Precondition("mixture components differ in k".into()));
        }
        let probs = (0..1usize << k)
            .map(|o| neumaier(parts.iter().map(|(w, d)| w * d.probs[o])))
            .collect();
        Self::new(k, probs)
    }

    /// `E[Π_{i∈S} Y_i]` with `S` given as a bit mask.
    pub fn moment(&self, s: usize) -> f64 {
        neumaier(self.probs.iter().enumerate().map(|(o, &p)| {
            // Y_i = -1 exactly when bit i of o is clear.
            let minus = (s & !o).count_ones();
            if minus.is_multiple_of(2) {
                p
            } else {
                -p
            }
        }))
    }
}

/// Compensated (Neumaier) sum.
pub fn neumaier(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in xs {
        let t = sum + x;
        comp += if sum.abs() >= x.abs() {
            (sum - t) + x
        } else {
            (x - t) + sum
        };
        sum = t;
    }
    sum + comp
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UngerReport {
    pub k: usize,
    /// Subsets checked (`2^k`).
    pub subsets: usize,
    /// Largest `E[Π_S Y_i] - C β^{|S|}`.
    pub worst_moment_slack: f64,
    /// First subset (bit mask) violating the hypothesis.
    pub violating: Option<usize>,
    /// `Pr[Σ Y_i >= λk]`
    pub tail: f64,
    /// `C e^{-k D(1/2+λ/2 ‖ 1/2+β/2)}`
    pub bound: f64,
    /// `None` when the hypothesis fails and the conclusion is untested.
    pub conclusion_holds: Option<bool>,
}

impl UngerReport {
    pub fn hypothesis_holds(&self) -> bool {
        self.violating.is_none()
    }
}

/// Enumerates all `2^k` moments and the exact tail, and compares the tail
/// with the threshold-lemma bound when every moment is at most `C β^{|S|}`.
pub fn unger_check(dist: &JointSignDistribution, c: f64, beta: f64, lam: f64) -> Result<UngerReport> {
    if !(0.0 <= beta && beta <= lam && lam <= 1.0) {
        return Err(Error::Precondition(format!(
            "need 0 <= beta <= lambda <= 1 (got beta = {beta}, lambda = {lam})"
        )));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Precondition(format!("C must be positive (got {c})")));
    }
    let k = dist.k;
    let n = 1usize << k;
    let slacks: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|s| dist.moment(s) - c * beta.powi(s.count_ones() as i32))
        .collect();
    let violating = slacks.iter().position(|&v| v > 1e-12);
    let worst_moment_slack = slacks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let threshold = lam * k as f64;
    let tail = neumaier(dist.probs.iter().enumerate().filter_map(|(o, &p)| {
        let plus = o.count_ones() as f64;
        (2.0 * plus - k as f64 >= threshold - 1e-12).then_some(p)
    }));
    let bound = c * (-(k as f64) * relent_closed(0.5 + lam / 2.0, 0.5 + beta / 2.0)?).exp();
    Ok(UngerReport {
        k,
        subsets: n,
        worst_moment_slack,
        violating,
        tail,
        bound,
        conclusion_holds: violating.is_none().then_some(tail <= bound + 1e-12),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn relent_values() {
        assert_eq!(relent(0.5, 0.5).unwrap(), 0.0);
        assert!((relent(1.0, 0.5).unwrap() - 2f64.ln()).abs() < 1e-15);
        // 0.75 ln 1.5 + 0.25 ln 0.5
        assert!((relent(0.75, 0.5).unwrap() - 0.130812035941137).abs() < 1e-12);
        assert!(relent(0.5, 0.0).is_err() && relent(0.5, 1.0).is_err() && relent(1.2, 0.5).is_err());
    }

    #[test]
    fn relent_midpoint_convexity() {
        let mut g = crate::matlin::random::rng(3);
        for _ in 0..100 {
            let (a, b, mu): (f64, f64, f64) = (g.gen(), g.gen(), g.gen_range(0.01..0.99));
            let mid = relent((a + b) / 2.0, mu).unwrap();
            assert!(mid <= (relent(a, mu).unwrap() + relent(b, mu).unwrap()) / 2.0 + 1e-14);
        }
    }

    #[test]
    fn product_sigma_reduces_to_phase_formula() {
        let p = DptParams {
            k: 5,
            delta: 0.9,
            gamma: 0.7,
            d: 1.3,
            lambda: 2.0,
            ..Default::default()
        };
        let a = product_sigma_bound(&p).unwrap().value;
        let (b, _) = phase_sdpt_bound(&p, p.d).unwrap();
        assert!((a - b.value).abs() < 1e-12);
        let doubled = product_sigma_bound(&DptParams { k: 10, ..p }).unwrap().value;
        assert_eq!(doubled, 2.0 * a);
    }

    #[test]
    fn product_sigma_zero_and_vacuous() {
        // δ(1+2γd) = 1+γd(2-λ) with γd = 1, λ = 1: δ = 2/3.
        let p = DptParams {
            k: 3,
            delta: 2.0 / 3.0,
            gamma: 0.5,
            d: 2.0,
            lambda: 1.0,
            ..Default::default()
        };
        let v = product_sigma_bound(&p).unwrap();
        assert!(v.value.abs() < 1e-15 && v.vacuous);
        let low = product_sigma_bound(&DptParams { delta: 0.1, ..p }).unwrap();
        assert!(low.value < 0.0 && low.vacuous);
        assert!(product_sigma_bound(&DptParams { gamma: 0.0, ..p }).is_err());
    }

    #[test]
    fn sdpt_values() {
        let (m, q) = sdpt_bounds(&DptParams::new(4, 2.0 / 3.0), 1.7, Some(9.0)).unwrap();
        assert_eq!((m, q), (0.0, Some(0.0)));
        let (m, _) = sdpt_bounds(&DptParams::new(8, 1.0), 1.0, None).unwrap();
        assert!((m - 0.405465108108164).abs() < 1e-12);
        let (m, q) = sdpt_bounds(&DptParams::new(6, 0.9), 2.0, Some(30.0)).unwrap();
        assert!((q.unwrap() - m * (30.0 / 2.0) / 1000.0).abs() < 1e-15);
        assert!(sdpt_bounds(&DptParams::new(6, 0.5), 2.0, None).is_err());
    }

    #[test]
    fn xor_values() {
        assert_eq!(xor_bounds(&DptParams::new(8, 0.0), 1.0, None).unwrap().0, 0.0);
        assert_eq!(xor_bounds(&DptParams::new(8, 1.0), 1.0, None).unwrap().0, 1.0);
        assert_eq!(xor_bounds(&DptParams::new(16, 0.5), 2.0, None).unwrap().0, 2.0);
    }

    #[test]
    fn phase_values() {
        let (adv, delta) = (1.5, 0.8);
        let p = DptParams {
            k: 6,
            delta,
            gamma: 1.0 / (delta * adv),
            ..Default::default()
        };
        let (general, special) = phase_sdpt_bound(&p, adv).unwrap();
        assert!(general.value >= special - 1e-9);
        assert!((special - 6.0 * 0.8 * 1.5 / 4.0).abs() < 1e-15);
        // δ(1+2γd) = 1
        let zero = DptParams {
            delta: 0.5,
            gamma: 0.5,
            ..p
        };
        assert!(phase_sdpt_bound(&zero, 1.0).unwrap().0.value.abs() < 1e-15);
        let doubled = phase_sdpt_bound(&DptParams { k: 12, ..p }, adv).unwrap();
        assert_eq!(doubled.0.value, 2.0 * general.value);
        assert_eq!(doubled.1, 2.0 * special);
    }

    #[test]
    fn threshold_values() {
        let base = DptParams {
            k: 10,
            delta: 0.25,
            cap_k: 10,
            mu: 0.75,
            ..Default::default()
        };
        let (tail, _) = threshold_tail(&base).unwrap();
        assert!((tail - 1f64.exp()).abs() < 1e-12);
        let (tail, cor) = threshold_tail(&DptParams { mu: 1.0, ..base }).unwrap();
        assert!((tail - cor).abs() < 1e-12);
        assert!((cor - ((0.1f64).exp() * 0.75).powi(10)).abs() < 1e-12);
        let (tail, _) = threshold_tail(&DptParams { mu: 0.9, ..base }).unwrap();
        // D(0.9‖0.75) = 0.9 ln 1.2 + 0.1 ln 0.4
        let d = 0.9 * 1.2f64.ln() + 0.1 * 0.4f64.ln();
        assert!((tail - (1.0 - 10.0 * d).exp()).abs() < 1e-12);
        assert!(threshold_tail(&DptParams { mu: 0.7, ..base }).is_err());
        let (tail, cor) = threshold_tail(&DptParams {
            delta: 1.0,
            mu: 1.0,
            ..base
        })
        .unwrap();
        assert!((tail - 1f64.exp()).abs() < 1e-12 && (cor - 1f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn error_conversions() {
        for mode in [
            ErrorMode::CoherentToNoncoherentTarget,
            ErrorMode::PhaseUpper,
            ErrorMode::PhaseLower,
        ] {
            assert_eq!(error_convert(mode, 0.0).unwrap(), 0.0);
        }
        assert_eq!(
            error_convert(ErrorMode::CoherentToNoncoherentTarget, 0.75).unwrap(),
            0.5
        );
        // (1 - 1/2)/2 + 3/16
        assert_eq!(error_convert(ErrorMode::PhaseLower, 0.75).unwrap(), 0.4375);
        assert_eq!(error_convert(ErrorMode::PhaseUpper, 0.75).unwrap(), 0.25);
        assert!("bogus".parse::<ErrorMode>().is_err());
        assert!(error_convert(ErrorMode::PhaseUpper, 1.5).is_err());
    }

    #[test]
    fn unger_fair_coins_equality() {
        let d = JointSignDistribution::product(&[0.0; 4]).unwrap();
        let r = unger_check(&d, 1.0, 0.0, 1.0).unwrap();
        assert!(r.hypothesis_holds());
        assert_eq!(r.tail, 1.0 / 16.0);
        assert!((r.bound - 1.0 / 16.0).abs() < 1e-15);
        assert_eq!(r.conclusion_holds, Some(true));
    }

    #[test]
    fn unger_point_mass_and_biased() {
        let mut probs = vec![0.0; 8];
        probs[7] = 1.0;
        let d = JointSignDistribution::new(3, probs).unwrap();
        let r = unger_check(&d, 1.0, 1.0, 1.0).unwrap();
        assert_eq!((r.tail, r.bound, r.conclusion_holds), (1.0, 1.0, Some(true)));

        let d = JointSignDistribution::product(&[0.2; 6]).unwrap();
        let r = unger_check(&d, 1.0, 0.2, 0.6).unwrap();
        assert!(r.hypothesis_holds() && r.conclusion_holds == Some(true));
        assert!(r.tail <= r.bound);
    }

    #[test]
    fn unger_reports_violations() {
        let d = JointSignDistribution::product(&[0.5; 3]).unwrap();
        let r = unger_check(&d, 1.0, 0.2, 0.6).unwrap();
        assert!(!r.hypothesis_holds());
        assert_eq!(r.conclusion_holds, None);
        assert_eq!(r.violating, Some(1));
        assert!(unger_check(&d, 1.0, 0.7, 0.6).is_err());
    }

    #[test]
    fn moments_of_product_distribution() {
        let b = [0.3, -0.5, 0.9];
        let d = JointSignDistribution::product(&b).unwrap();
        for s in 0..8usize {
            let want: f64 = (0..3).filter(|i| s >> i & 1 == 1).map(|i| b[i]).product();
            assert!((d.moment(s) - want).abs() < 1e-15);
        }
    }

    /// Chain check: product distributions with moments `<= e^{k/K} δ^{|S|/2}`
    /// give the threshold-theorem tail through the lemma's bound.
    #[test]
    fn unger_matches_threshold_tail() {
        let (k, cap_k, delta, mu) = (8u32, 4u32, 0.36f64, 0.9);
        let beta = delta.sqrt();
        let c = (k as f64 / cap_k as f64).exp();
        let d = JointSignDistribution::product(&[beta; 8]).unwrap();
        let r = unger_check(&d, c, beta, 2.0 * mu - 1.0).unwrap();
        let p = DptParams {
            k,
            delta,
            cap_k,
            mu,
            ..Default::default()
        };
        let (tail, _) = threshold_tail(&p).unwrap();
        assert!((r.bound - tail).abs() < 1e-12);
        assert_eq!(r.conclusion_holds, Some(true));
    }

    #[test]
    fn neumaier_beats_naive() {
        let xs = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(neumaier(xs), 2.0);
    }

    proptest! {
        #[test]
        fn calculators_linear_in_k(k in 1u32..50, delta in 0.67f64..1.0, adv in 0.0f64..5.0) {
            let p = DptParams::new(k, delta);
            let q = DptParams::new(2 * k, delta);
            prop_assert_eq!(sdpt_bounds(&q, adv, None).unwrap().0, 2.0 * sdpt_bounds(&p, adv, None).unwrap().0);
            prop_assert_eq!(xor_bounds(&q, adv, None).unwrap().0, 2.0 * xor_bounds(&p, adv, None).unwrap().0);
        }

        #[test]
        fn calculators_monotone_in_delta(a in 0.67f64..1.0, b in 0.67f64..1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let f = |d: f64| sdpt_bounds(&DptParams::new(5, d), 1.3, None).unwrap().0;
            let x = |d: f64| xor_bounds(&DptParams::new(5, d), 1.3, None).unwrap().0;
            prop_assert!(f(lo) <= f(hi));
            prop_assert!(x(lo) <= x(hi));
        }
    }
}
