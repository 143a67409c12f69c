use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_instance, solve_bound_program, solver_residuals, witness_digest, BoundReport, BoundStatus, Witness};
use crate::conic::{ConicProgram, ConicSolution, LinExpr, Sense, Status};
use crate::error::{Error, Result};
use crate::matlin::random::{random_unit_vector, rng};
use crate::matlin::real::{symmetric_eigen, RMat};
use crate::matlin::HermMat;

/// Number of seeded restarts of the alternating ascent.
pub const ADV_RESTARTS: usize = 16;
/// Certificate acceptance: `upper - lower <= ADV_CERT_TOL * (1 + value)`.
pub const ADV_CERT_TOL: f64 = 1e-4;

const ASCENT_ITER_CAP: usize = 60;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdditiveWitness {
    /// Adversary matrix, zero on the diagonal, scaled to satisfy the constraints.
    pub gamma: HermMat,
    /// Principal eigenvector of `Γ∘(J-σ)`.
    pub v: Vec<f64>,
    /// `‖Γ∘(J-σ)‖`
    pub value: f64,
    /// `max(0, max_i ‖Γ∘(J-Δ_i)‖ - 1)`
    pub residual: f64,
}

/// `Adv(σ) = max ‖Γ∘(J-σ)‖` s.t. `‖Γ∘(J-Δ_i)‖ <= 1`.
pub fn adv(sigma: &HermMat, deltas: &[HermMat], seed: u64) -> Result<BoundReport> {
    run("adv", sigma, deltas, None, seed)
}

/// The same program with the extra constraint `Γ∘F = 0`.
pub fn adv_pm(sigma: &HermMat, f: &HermMat, deltas: &[HermMat], seed: u64) -> Result<BoundReport> {
    if f.dim() != sigma.dim() {
        return Err(Error::dims(sigma.dim(), f.dim()));
    }
    run("adv_pm", sigma, deltas, Some(f), seed)
}

struct Instance {
    n: usize,
    /// `J - σ`
    target: RMat,
    /// `J - Δ_i`
    queries: Vec<RMat>,
    /// Off-diagonal pairs `x < y` carrying a free entry of Γ.
    pairs: Vec<(usize, usize)>,
}

impl Instance {
    fn new(sigma: &HermMat, deltas: &[HermMat], mask: Option<&HermMat>) -> Result<Self> {
        check_instance(sigma, deltas)?;
        let n = sigma.dim();
        let target = RMat::from_fn(n, n, |x, y| 1.0 - sigma.re(x, y));
        let queries: Vec<RMat> = deltas
            .iter()
            .map(|d| RMat::from_fn(n, n, |x, y| 1.0 - d.re(x, y)))
            .collect();
        let mut pairs = Vec::new();
        for x in 0..n {
            for y in (x + 1)..n {
                if mask.is_some_and(|m| m.re(x, y) != 0.0) {
                    continue;
                }
                let seen = queries.iter().any(|q| q[(x, y)] != 0.0);
                if !seen && target[(x, y)] != 0.0 {
                    return Err(Error::Precondition(format!(
                        "inputs {x} and {y} differ in sigma but agree on every query"
                    )));
                }
                if seen {
                    pairs.push((x, y));
                }
            }
        }
        Ok(Instance {
            n,
            target,
            queries,
            pairs,
        })
    }

    fn gamma_from(&self, g: &[f64]) -> RMat {
        let mut gamma = RMat::zeros(self.n, self.n);
        for (&(x, y), &val) in self.pairs.iter().zip(g) {
            gamma[(x, y)] = val;
            gamma[(y, x)] = val;
        }
        gamma
    }

    /// `max_i ‖Γ∘(J-Δ_i)‖`
    fn constraint_norm(&self, gamma: &RMat) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for q in &self.queries {
            worst = worst.max(op_norm(&hadamard(gamma, q))?);
        }
        Ok(worst)
    }

    /// Maximize `v^T (Γ∘(J-σ)) v` over feasible Γ for fixed `v`.
    fn gamma_step(&self, v: &[f64]) -> Result<(Vec<f64>, ConicSolution)> {
        let n = self.n;
        let mut p = ConicProgram::new(Sense::Maximize);
        let g = p.add_free(self.pairs.len());
        let mut obj = LinExpr::new();
        for (k, &(x, y)) in self.pairs.iter().enumerate() {
            obj.push_scalar(g, k, 2.0 * self.target[(x, y)] * v[x] * v[y]);
        }
        p.set_objective(obj);
        let mut pair_index = vec![None; n * n];
        for (k, &(x, y)) in self.pairs.iter().enumerate() {
            pair_index[x * n + y] = Some(k);
        }
        for q in &self.queries {
            for sign in [1.0, -1.0] {
                let s = p.add_psd(n);
                for x in 0..n {
                    p.constrain(LinExpr::new().psd(s, x, x, 1.0), 1.0);
                    for y in (x + 1)..n {
                        let mut e = LinExpr::new().psd(s, x, y, 1.0);
                        if let Some(k) = pair_index[x * n + y] {
                            e.push_scalar(g, k, -sign * q[(x, y)]);
                        }
                        p.constrain(e, 0.0);
                    }
                }
            }
        }
        let sol = solve_bound_program(&p)?;
        Ok((sol.vector(g).to_vec(), sol))
    }

    /// Dual program: `min t` s.t. `Σ_i (J-Δ_i)_xy (Y_i - Z_i)_xy = (J-σ)_xy` on
    /// free pairs and `Σ_i (Y_i + Z_i)_xx <= t`, with `Y_i, Z_i ⪰ 0`. For any
    /// feasible Γ and unit v, `v^T (Γ∘(J-σ)) v = Σ_i <Γ∘(J-Δ_i), (Y_i - Z_i)∘vv^T>
    /// <= Σ_x v_x^2 Σ_i (Y_i + Z_i)_xx <= t`.
    fn certificate(&self) -> Result<ConicSolution> {
        let n = self.n;
        let mut p = ConicProgram::new(Sense::Minimize);
        let t = p.add_nonneg(1);
        let s = p.add_nonneg(n);
        let blocks: Vec<_> = self.queries.iter().map(|_| (p.add_psd(n), p.add_psd(n))).collect();
        p.set_objective(LinExpr::new().scalar(t, 0, 1.0));
        for &(x, y) in &self.pairs {
            let mut e = LinExpr::new();
            for (q, &(yb, zb)) in self.queries.iter().zip(&blocks) {
                e.push_psd(yb, x, y, q[(x, y)]);
                e.push_psd(zb, x, y, -q[(x, y)]);
            }
            p.constrain(e, self.target[(x, y)]);
        }
        for x in 0..n {
            let mut e = LinExpr::new().scalar(s, x, 1.0).scalar(t, 0, -1.0);
            for &(yb, zb) in &blocks {
                e.push_psd(yb, x, x, 1.0);
                e.push_psd(zb, x, x, 1.0);
            }
            p.constrain(e, 0.0);
        }
        solve_bound_program(&p)
    }
}

fn hadamard(a: &RMat, b: &RMat) -> RMat {
    RMat::from_fn(a.rows(), a.cols(), |r, c| a[(r, c)] * b[(r, c)])
}

fn op_norm(a: &RMat) -> Result<f64> {
    let (vals, _) = symmetric_eigen(a)?;
    Ok(vals[0].abs().max(vals[vals.len() - 1].abs()))
}

struct Ascent {
    gamma: RMat,
    v: Vec<f64>,
    value: f64,
    iterations: usize,
    stalled: bool,
    last: Option<ConicSolution>,
}

fn ascend(inst: &Instance, mut v: Vec<f64>) -> Result<Ascent> {
    let n = inst.n;
    let mut best = Ascent {
        gamma: RMat::zeros(n, n),
        v: v.clone(),
        value: 0.0,
        iterations: 0,
        stalled: false,
        last: None,
    };
    for it in 0..ASCENT_ITER_CAP {
        let (g, sol) = inst.gamma_step(&v)?;
        best.iterations += sol.iterations;
        if sol.status != Status::Optimal {
            best.stalled = true;
            best.last = Some(sol);
            break;
        }
        let mut gamma = inst.gamma_from(&g);
        let scale = inst.constraint_norm(&gamma)?.max(1.0);
        gamma.scale(1.0 / scale);
        let (vals, vecs) = symmetric_eigen(&hadamard(&gamma, &inst.target))?;
        let (top, bottom) = (vals[0], vals[n - 1]);
        let (value, col) = if -bottom > top {
            gamma.scale(-1.0);
            (-bottom, n - 1)
        } else {
            (top, 0)
        };
        v = (0..n).map(|r| vecs[(r, col)]).collect();
        let improved = value > best.value + 1e-10 * (1.0 + value);
        if value > best.value || it == 0 {
            best.gamma = gamma;
            best.v = v.clone();
            best.value = value;
        }
        best.last = Some(sol);
        if !improved && it > 0 {
            break;
        }
    }
    Ok(best)
}

fn run(name: &str, sigma: &HermMat, deltas: &[HermMat], mask: Option<&HermMat>, seed: u64) -> Result<BoundReport> {
    let inst = Instance::new(sigma, deltas, mask)?;
    let n = inst.n;
    let runs: Vec<Result<Ascent>> = (0..ADV_RESTARTS)
        .into_par_iter()
        .map(|r| {
            let v0 = if r == 0 {
                vec![1.0 / (n as f64).sqrt(); n]
            } else {
                let mut g = rng(seed.wrapping_add(r as u64));
                random_unit_vector(n, true, &mut g).iter().map(|z| z.re).collect()
            };
            ascend(&inst, v0)
        })
        .collect();
    let mut best: Option<Ascent> = None;
    let mut iterations = 0;
    let mut stalled = false;
    for run in runs {
        let run = run?;
        iterations += run.iterations;
        stalled |= run.stalled;
        if best.as_ref().is_none_or(|b| run.value > b.value) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart");
    let cert = inst.certificate()?;
    iterations += cert.iterations;

    let lower = best.value;
    let upper = cert.primal_value;
    let status = if stalled || cert.status != Status::Optimal {
        BoundStatus::Stalled
    } else if upper - lower <= ADV_CERT_TOL * (1.0 + lower) && upper >= lower - 1e-6 {
        BoundStatus::Certified
    } else {
        BoundStatus::Uncertified
    };
    let residual = (inst.constraint_norm(&best.gamma)? - 1.0).max(0.0);
    let witness = Witness::Additive(AdditiveWitness {
        gamma: HermMat::from_rmat(&best.gamma)?,
        v: best.v,
        value: lower,
        residual,
    });
    let mut residuals = BTreeMap::new();
    residuals.insert("constraint_violation".into(), residual);
    if let Some(last) = &best.last {
        solver_residuals(last, "primal_sdp_", &mut residuals);
    }
    solver_residuals(&cert, "certificate_", &mut residuals);
    let mut params = BTreeMap::new();
    params.insert("dim".into(), n.into());
    params.insert("queries".into(), deltas.len().into());
    params.insert("restarts".into(), ADV_RESTARTS.into());
    Ok(BoundReport {
        name: name.into(),
        value: lower,
        c: None,
        lower: Some(lower),
        upper: Some(upper),
        gap: upper - lower,
        residuals,
        iterations,
        seed: Some(seed),
        status,
        witness_digest: witness_digest(&witness)?,
        witness,
        params,
    })
}
