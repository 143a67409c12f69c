use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::BOUND_DIM_CAP;
use super::{solve_bound_program, solver_residuals, witness_digest, BoundReport, BoundStatus, Witness};
use crate::conic::{self, ConicProgram, LinExpr, Sense, Status};
use crate::error::{Error, Result};
use crate::matlin::random::rng;
use crate::matlin::real::RMat;
use crate::matlin::{svd, CMatrix, C64};

/// Primal and dual sides closer than this are reported as certified.
pub const GAMMA2_CONFIDENCE: f64 = 1e-4;

const DUAL_RESTARTS: usize = 8;
const DUAL_ITER_CAP: usize = 2000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gamma2Witness {
    /// Optimal `[[P, A], [A*, Q]]`; for complex input the real embedding
    /// `[[Re, -Im], [Im, Re]]` of it.
    pub gram: RMat,
    pub complex: bool,
    /// Nonnegative unit weights attaining the dual value `trnorm(A∘uv*)`.
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// γ2 through the SDP `min t` s.t. `[[P, A], [A*, Q]] ⪰ 0`, `diag ≤ t`,
/// bracketed from below by multi-start ascent on `trnorm(A∘uv*)`.
pub fn gamma2(a: &CMatrix, seed: u64) -> Result<BoundReport> {
    let (m, n) = (a.rows(), a.cols());
    if m == 0 || n == 0 {
        return Err(Error::dims(format!("{m}x{n}"), "nonempty matrix"));
    }
    if m.max(n) > BOUND_DIM_CAP {
        return Err(Error::DimensionCap {
            dim: m.max(n),
            cap: BOUND_DIM_CAP,
        });
    }
    let complex = a.max_imag() > 0.0;
    let program = primal_program(a, complex);
    let sol = solve_bound_program(&program)?;
    let (dual, u, v) = gamma2_dual_ascent(a, seed)?;
    let primal = sol.primal_value;

    let status = if sol.status != Status::Optimal {
        BoundStatus::Stalled
    } else if primal - dual <= GAMMA2_CONFIDENCE && primal >= dual - 1e-6 {
        BoundStatus::Certified
    } else {
        BoundStatus::Uncertified
    };
    let witness = Witness::Factorization(Gamma2Witness {
        gram: sol.matrix(conic::BlockId(2)).clone(),
        complex,
        u,
        v,
    });
    let mut residuals = BTreeMap::new();
    solver_residuals(&sol, "", &mut residuals);
    let mut params = BTreeMap::new();
    params.insert("rows".into(), m.into());
    params.insert("cols".into(), n.into());
    Ok(BoundReport {
        name: "gamma2".into(),
        value: primal,
        c: None,
        lower: Some(dual),
        upper: Some(primal),
        gap: primal - dual,
        residuals,
        iterations: sol.iterations,
        seed: Some(seed),
        status,
        witness_digest: witness_digest(&witness)?,
        witness,
        params,
    })
}

/// Blocks: `t` (free), diagonal slacks (nonnegative), the Gram matrix (PSD).
fn primal_program(a: &CMatrix, complex: bool) -> ConicProgram {
    let (m, n) = (a.rows(), a.cols());
    let nn = m + n;
    let mut p = ConicProgram::new(Sense::Minimize);
    let t = p.add_free(1);
    let s = p.add_nonneg(nn);
    let y = p.add_psd(if complex { 2 * nn } else { nn });
    p.set_objective(LinExpr::new().scalar(t, 0, 1.0));
    for i in 0..m {
        for j in 0..n {
            p.constrain(LinExpr::new().psd(y, i, m + j, 1.0), a[(i, j)].re);
            if complex {
                p.constrain(LinExpr::new().psd(y, nn + i, m + j, 1.0), a[(i, j)].im);
            }
        }
    }
    for k in 0..nn {
        p.constrain(
            LinExpr::new().psd(y, k, k, 1.0).scalar(s, k, 1.0).scalar(t, 0, -1.0),
            0.0,
        );
    }
    if complex {
        for r in 0..nn {
            for c in r..nn {
                p.constrain(LinExpr::new().psd(y, r, c, 1.0).psd(y, nn + r, nn + c, -1.0), 0.0);
                let anti = if r == c {
                    LinExpr::new().psd(y, nn + r, r, 1.0)
                } else {
                    LinExpr::new().psd(y, nn + r, c, 1.0).psd(y, nn + c, r, 1.0)
                };
                p.constrain(anti, 0.0);
            }
        }
    }
    p
}

/// Lower bound `max trnorm(A∘uv*)` over unit `u`, `v`, by alternating exact
/// maximization in `u` and `v` with the polar factor held fixed. Phases of
/// `u`, `v` do not change the trace norm, so the iterates stay nonnegative.
/// Restart 0 starts from uniform weights, the rest from seeded random ones.
pub fn gamma2_dual_ascent(a: &CMatrix, seed: u64) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let (m, n) = (a.rows(), a.cols());
    let runs: Vec<Result<(f64, Vec<f64>, Vec<f64>)>> = (0..DUAL_RESTARTS)
        .into_par_iter()
        .map(|r| {
            let (u, v) = if r == 0 {
                (uniform(m), uniform(n))
            } else {
                let mut g = rng(seed.wrapping_add(r as u64));
                (random_weights(m, &mut g), random_weights(n, &mut g))
            };
            ascend(a, u, v)
        })
        .collect();
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    for run in runs {
        let run = run?;
        if best.as_ref().is_none_or(|b| run.0 > b.0) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / (n as f64).sqrt(); n]
}

fn random_weights(n: usize, g: &mut impl Rng) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| g.gen_range(0.05..1.0)).collect();
    normalize(w).unwrap_or_else(|| uniform(n))
}

fn normalize(w: Vec<f64>) -> Option<Vec<f64>> {
    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    (norm > 0.0).then(|| w.into_iter().map(|x| x / norm).collect())
}

fn masked(a: &CMatrix, u: &[f64], v: &[f64]) -> CMatrix {
    CMatrix::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)] * (u[i] * v[j]))
}

/// `trnorm(A∘uv*)` and `A ∘ conj(U)` for the polar factor `U` of `A∘uv*`.
fn aligned(a: &CMatrix, u: &[f64], v: &[f64]) -> Result<(f64, CMatrix)> {
    let (sv, left, right) = svd(&masked(a, u, v))?;
    let k = left.cols();
    let b = CMatrix::from_fn(a.rows(), a.cols(), |i, j| {
        let mut p = C64::new(0.0, 0.0);
        for l in 0..k {
            p += left[(i, l)] * right[(j, l)].conj();
        }
        a[(i, j)] * p.conj()
    });
    Ok((sv.iter().sum(), b))
}

fn ascend(a: &CMatrix, mut u: Vec<f64>, mut v: Vec<f64>) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let (m, n) = (a.rows(), a.cols());
    let (mut value, mut b) = aligned(a, &u, &v)?;
    let mut best = (value, u.clone(), v.clone());
    for _ in 0..DUAL_ITER_CAP {
        let wu: Vec<f64> = (0..m)
            .map(|i| (0..n).map(|j| b[(i, j)] * v[j]).sum::<C64>().norm())
            .collect();
        if let Some(next) = normalize(wu) {
            u = next;
        }
        let (_, bu) = aligned(a, &u, &v)?;
        let wv: Vec<f64> = (0..n)
            .map(|j| (0..m).map(|i| bu[(i, j)] * u[i]).sum::<C64>().norm())
            .collect();
        if let Some(next) = normalize(wv) {
            v = next;
        }
        let (next, nb) = aligned(a, &u, &v)?;
        b = nb;
        if next > best.0 {
            best = (next, u.clone(), v.clone());
        }
        let done = next - value <= 1e-10 * (1.0 + next);
        value = value.max(next);
        if done {
            break;
        }
    }
    Ok(best)
}
