use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_instance, solve_bound_program, solver_residuals, witness_digest, BoundReport, BoundStatus, Witness};
use crate::conic::{BlockId, ConicProgram, LinExpr, Sense, Status};
use crate::error::{Error, Result};
use crate::matlin::{psd_check, HermMat};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplicativeWitness {
    pub w: HermMat,
    pub c: f64,
    /// `Tr(Wσ)`
    pub objective: f64,
    /// `|Tr(WJ) - 1|`
    pub normalization_residual: f64,
    /// Largest negative eigenvalue among `W`, `W∘Δ_i - W/c` and `cW - W∘Δ_i`, or 0.
    pub lmi_residual: f64,
    /// `ln(objective) / ln(c)`
    pub value: f64,
}

impl MultiplicativeWitness {
    /// Evaluates a candidate `W` directly from its definition.
    pub fn evaluate(w: HermMat, sigma: &HermMat, deltas: &[HermMat], c: f64) -> Result<Self> {
        check_c(c)?;
        let objective = w.trace_product(sigma)?;
        let normalization_residual = (w.trace_product(&HermMat::ones(w.dim()))? - 1.0).abs();
        let mut worst = psd_check(&w, 0.0)?.min_eigenvalue;
        for d in deltas {
            let wd = w.hadamard(d)?;
            worst = worst.min(psd_check(&wd.sub(&w.scale(1.0 / c))?, 0.0)?.min_eigenvalue);
            worst = worst.min(psd_check(&w.scale(c).sub(&wd)?, 0.0)?.min_eigenvalue);
        }
        if objective <= 0.0 {
            return Err(Error::Domain(format!("Tr(W sigma) = {objective} is not positive")));
        }
        Ok(MultiplicativeWitness {
            w,
            c,
            objective,
            normalization_residual,
            lmi_residual: (-worst).max(0.0),
            value: objective.ln() / c.ln(),
        })
    }

    /// The `(Γ, v)` form with `W = Γ∘vv*`, `v ∝ sqrt(diag W)` unit, when
    /// every `|v_x| > 1e-8`.
    pub fn gamma_form(&self) -> Option<(HermMat, Vec<f64>)> {
        let n = self.w.dim();
        let diag: Vec<f64> = (0..n).map(|x| self.w.re(x, x).max(0.0).sqrt()).collect();
        let norm = diag.iter().map(|d| d * d).sum::<f64>().sqrt();
        let v: Vec<f64> = diag.iter().map(|d| d / norm).collect();
        if !(norm > 0.0) || v.iter().any(|x| x.abs() <= 1e-8) {
            return None;
        }
        let g = crate::matlin::CMatrix::from_fn(n, n, |x, y| self.w.get(x, y) / (v[x] * v[y]));
        Some((HermMat::hermitize(g), v))
    }
}

fn check_c(c: f64) -> Result<()> {
    if !(c.is_finite() && c > 1.0 + 1e-9) {
        return Err(Error::Precondition(format!("c must exceed 1 (got {c})")));
    }
    Ok(())
}

/// `max Tr(Wσ)` s.t. `Tr(WJ) = 1`, `W ⪰ 0`, `W∘Δ_i - W/c ⪰ 0`, `cW - W∘Δ_i ⪰ 0`,
/// with the two LMIs as slack blocks. Returns the program and the `W` block.
pub fn madv_program(sigma: &HermMat, deltas: &[HermMat], c: f64) -> Result<(ConicProgram, BlockId)> {
    check_instance(sigma, deltas)?;
    check_c(c)?;
    let n = sigma.dim();
    let mut p = ConicProgram::new(Sense::Maximize);
    let w = p.add_psd(n);
    let mut obj = LinExpr::new();
    let mut norm = LinExpr::new();
    for x in 0..n {
        obj.push_psd(w, x, x, sigma.re(x, x));
        norm.push_psd(w, x, x, 1.0);
        for y in (x + 1)..n {
            obj.push_psd(w, x, y, 2.0 * sigma.re(x, y));
            norm.push_psd(w, x, y, 2.0);
        }
    }
    p.set_objective(obj);
    p.constrain(norm, 1.0);
    for d in deltas {
        let a = p.add_psd(n);
        let b = p.add_psd(n);
        for x in 0..n {
            for y in x..n {
                let dxy = d.re(x, y);
                p.constrain(LinExpr::new().psd(a, x, y, 1.0).psd(w, x, y, -(dxy - 1.0 / c)), 0.0);
                p.constrain(LinExpr::new().psd(b, x, y, 1.0).psd(w, x, y, -(c - dxy)), 0.0);
            }
        }
    }
    Ok((p, w))
}

/// Multiplicative adversary SDP at a fixed `c`; value `ln(max Tr(Wσ)) / ln c`.
pub fn madv_fixed_c(sigma: &HermMat, deltas: &[HermMat], c: f64) -> Result<BoundReport> {
    let (program, wb) = madv_program(sigma, deltas, c)?;
    let sol = solve_bound_program(&program)?;
    let status = match sol.status {
        Status::Optimal => BoundStatus::Certified,
        Status::Stalled => BoundStatus::Stalled,
        other => {
            return Err(Error::Solver(format!(
                "multiplicative SDP reported {other:?} at c = {c}; it is always feasible and bounded"
            )))
        }
    };
    let w = HermMat::from_rmat(sol.matrix(wb))?;
    let mw = MultiplicativeWitness::evaluate(w, sigma, deltas, c)?;
    let upper = if sol.dual_value > 0.0 {
        Some(sol.dual_value.ln() / c.ln())
    } else {
        None
    };
    let mut residuals = BTreeMap::new();
    solver_residuals(&sol, "", &mut residuals);
    residuals.insert("normalization".into(), mw.normalization_residual);
    residuals.insert("lmi".into(), mw.lmi_residual);
    let mut params = BTreeMap::new();
    params.insert("dim".into(), sigma.dim().into());
    params.insert("queries".into(), deltas.len().into());
    params.insert("objective".into(), mw.objective.into());
    let value = mw.value;
    let witness = Witness::Multiplicative(mw);
    Ok(BoundReport {
        name: "madv".into(),
        value,
        c: Some(c),
        lower: Some(value),
        upper,
        gap: sol.gap,
        residuals,
        iterations: sol.iterations,
        seed: None,
        status,
        witness_digest: witness_digest(&witness)?,
        witness,
        params,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Grid points, log-spaced in `ln c`.
    pub points: usize,
    pub ln_c_min: f64,
    pub ln_c_max: f64,
    /// Golden-section stops when the bracket in `ln c` is this narrow relative to its right end.
    pub rel_width: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            points: 60,
            ln_c_min: 1e-3,
            ln_c_max: 3.0,
            rel_width: 1e-3,
        }
    }
}

impl SweepOptions {
    pub fn grid(&self) -> Vec<f64> {
        let (lo, hi) = (self.ln_c_min.ln(), self.ln_c_max.ln());
        let k = self.points;
        (0..k)
            .map(|i| {
                let t = if k == 1 { 0.0 } else { i as f64 / (k - 1) as f64 };
                (lo + t * (hi - lo)).exp()
            })
            .collect()
    }
}

/// Maximizes the fixed-`c` value over `c`: grid first, then golden-section
/// on `ln c` inside the bracket around the best grid point. The reported
/// value is the best over all evaluations, ties going to the smaller `c`.
pub fn madv_sweep(sigma: &HermMat, deltas: &[HermMat], opts: &SweepOptions) -> Result<BoundReport> {
    if opts.points < 2 || !(opts.ln_c_min > 0.0 && opts.ln_c_max > opts.ln_c_min) || !(opts.rel_width > 0.0) {
        return Err(Error::Precondition(
            "sweep needs >= 2 points on 0 < ln c_min < ln c_max".into(),
        ));
    }
    check_instance(sigma, deltas)?;
    let grid = opts.grid();
    let grid_reports: Vec<BoundReport> = grid
        .par_iter()
        .map(|&l| madv_fixed_c(sigma, deltas, l.exp()))
        .collect::<Result<_>>()?;
    let score = |r: &BoundReport| {
        if r.status == BoundStatus::Stalled {
            f64::NEG_INFINITY
        } else {
            r.value
        }
    };
    let best_grid = (0..grid.len()).fold(0, |b, i| {
        if score(&grid_reports[i]) > score(&grid_reports[b]) {
            i
        } else {
            b
        }
    });
    let mut a = grid[best_grid.saturating_sub(1)];
    let mut b = grid[(best_grid + 1).min(grid.len() - 1)];
    let mut golden: Vec<BoundReport> = Vec::new();
    let eval = |l: f64, golden: &mut Vec<BoundReport>| -> Result<f64> {
        let r = madv_fixed_c(sigma, deltas, l.exp())?;
        let s = score(&r);
        golden.push(r);
        Ok(s)
    };
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let mut f1 = eval(x1, &mut golden)?;
    let mut f2 = eval(x2, &mut golden)?;
    while b - a > opts.rel_width * b {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = eval(x1, &mut golden)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = eval(x2, &mut golden)?;
        }
    }

    let all: Vec<&BoundReport> = grid_reports.iter().chain(&golden).collect();
    let mut best = all[0];
    for r in &all[1..] {
        let (sr, sb) = (score(r), score(best));
        if sr > sb || (sr == sb && r.c < best.c) {
            best = r;
        }
    }
    let stalled = all.iter().any(|r| r.status == BoundStatus::Stalled);
    let mut params = BTreeMap::new();
    let table = |rs: &[BoundReport]| -> serde_json::Value {
        rs.iter()
            .map(|r| serde_json::json!([r.c, r.value, r.status]))
            .collect::<Vec<_>>()
            .into()
    };
    params.insert("grid".into(), table(&grid_reports));
    params.insert("refinement".into(), table(&golden));
    params.insert("points".into(), opts.points.into());
    params.insert("ln_c_min".into(), opts.ln_c_min.into());
    params.insert("ln_c_max".into(), opts.ln_c_max.into());
    params.insert("rel_width".into(), opts.rel_width.into());
    Ok(BoundReport {
        name: "madv_sweep".into(),
        value: best.value,
        c: best.c,
        lower: Some(best.value),
        upper: None,
        gap: best.gap,
        residuals: best.residuals.clone(),
        iterations: all.iter().map(|r| r.iterations).sum(),
        seed: None,
        status: if stalled { BoundStatus::Stalled } else { best.status },
        witness: best.witness.clone(),
        witness_digest: best.witness_digest.clone(),
        params,
    })
}
