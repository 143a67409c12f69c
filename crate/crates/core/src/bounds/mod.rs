//! Lower bounds on query complexity for Gram-matrix targets: the
//! factorization norm γ2, the additive adversary bound `Adv(σ)` (and its
//! `Γ∘F = 0` variant), and the multiplicative adversary SDP at fixed `c`
//! and swept over `c`.
//!
//! Every entry point returns a [`BoundReport`] carrying the value, the
//! witness, solver diagnostics and a digest of the witness payload.

mod additive;
mod gamma2;
mod multiplicative;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::conic::{self, ConicProgram, ConicSolution, SolveOptions, Status};
use crate::error::{Error, Result};
use crate::matlin::HermMat;

pub use additive::{adv, adv_pm, AdditiveWitness, ADV_CERT_TOL, ADV_RESTARTS};
pub use gamma2::{gamma2, gamma2_dual_ascent, Gamma2Witness, GAMMA2_CONFIDENCE};
pub use multiplicative::{madv_fixed_c, madv_program, madv_sweep, MultiplicativeWitness, SweepOptions};

/// Largest matrix dimension the bound programs accept.
pub const BOUND_DIM_CAP: usize = 128;

/// Solver tolerances tried first by every bound program.
pub fn bound_solve_options() -> SolveOptions {
    SolveOptions {
        gap_tol: 1e-10,
        feas_tol: 1e-10,
        iter_cap: 200,
    }
}

/// Solves at [`bound_solve_options`], retrying at the default tolerances when
/// round-off stalls the tight solve.
pub(crate) fn solve_bound_program(p: &ConicProgram) -> Result<ConicSolution> {
    let tight = conic::solve(p, &bound_solve_options())?;
    if tight.status != Status::Stalled {
        return Ok(tight);
    }
    let loose = conic::solve(p, &SolveOptions::default())?;
    Ok(if loose.status == Status::Stalled { tight } else { loose })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundStatus {
    /// Both sides computed and within the stated tolerance of each other.
    Certified,
    /// A value was computed but the independent bound disagrees beyond tolerance.
    Uncertified,
    /// A solver hit its iteration cap or broke down; values are best iterates.
    Stalled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    Factorization(Gamma2Witness),
    Additive(AdditiveWitness),
    Multiplicative(MultiplicativeWitness),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// Proven or heuristic lower side, when one is computed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    /// Independent upper side, when one is computed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    pub gap: f64,
    pub residuals: BTreeMap<String, f64>,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub status: BoundStatus,
    pub witness: Witness,
    pub witness_digest: String,
    pub params: BTreeMap<String, serde_json::Value>,
}

impl BoundReport {
    pub fn additive(&self) -> Option<&AdditiveWitness> {
        match &self.witness {
            Witness::Additive(w) => Some(w),
            _ => None,
        }
    }

    pub fn multiplicative(&self) -> Option<&MultiplicativeWitness> {
        match &self.witness {
            Witness::Multiplicative(w) => Some(w),
            _ => None,
        }
    }

    pub fn factorization(&self) -> Option<&Gamma2Witness> {
        match &self.witness {
            Witness::Factorization(w) => Some(w),
            _ => None,
        }
    }

    pub fn is_certified(&self) -> bool {
        self.status == BoundStatus::Certified
    }
}

/// Hex SHA-256 of the witness's JSON encoding.
pub fn witness_digest(w: &Witness) -> Result<String> {
    let bytes = serde_json::to_vec(w)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn solver_residuals(s: &ConicSolution, prefix: &str, out: &mut BTreeMap<String, f64>) {
    let r = &s.residuals;
    out.insert(format!("{prefix}primal_eq"), r.primal_eq);
    out.insert(format!("{prefix}dual_eq"), r.dual_eq);
    out.insert(format!("{prefix}primal_min_eig"), r.primal_min_eig);
    out.insert(format!("{prefix}dual_min_eig"), r.dual_min_eig);
}

/// Shape and realness checks shared by `adv` and the multiplicative SDP.
fn check_instance(sigma: &HermMat, deltas: &[HermMat]) -> Result<()> {
    let n = sigma.dim();
    if n > BOUND_DIM_CAP {
        return Err(Error::DimensionCap {
            dim: n,
            cap: BOUND_DIM_CAP,
        });
    }
    if deltas.is_empty() {
        return Err(Error::Precondition("at least one query matrix is required".into()));
    }
    for d in deltas {
        if d.dim() != n {
            return Err(Error::dims(n, d.dim()));
        }
    }
    for m in std::iter::once(sigma).chain(deltas) {
        if !m.is_real(1e-12) {
            return Err(Error::Precondition(
                "adversary programs are implemented for real Gram matrices only".into(),
            ));
        }
    }
    if let Some(x) = (0..n).find(|&x| (sigma.re(x, x) - 1.0).abs() > 1e-9) {
        return Err(Error::Precondition(format!(
            "sigma must have unit diagonal (entry {x} is {})",
            sigma.re(x, x)
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests;
