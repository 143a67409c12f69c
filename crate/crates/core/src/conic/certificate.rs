use serde::{Deserialize, Serialize};

use crate::conic::{
    relative_gap, BlockKind, BlockValue, ConicProgram, ConicSolution, Residuals, Sense, SolveOptions, Status,
};
use crate::error::{Error, Result};
use crate::matlin::real::{min_eigenvalue, RMat};

/// Independent recomputation of a solution's residuals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub status: Status,
    pub residuals: Residuals,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub violations: Vec<String>,
    /// True when the status is a claim (optimal, infeasible, unbounded)
    /// and every recomputed check passed.
    pub certified: bool,
}

fn check_shapes(p: &ConicProgram, s: &ConicSolution) -> Result<()> {
    let bad = || {
        Error::dims(
            format!("{} blocks", p.blocks.len()),
            format!("{} block values", s.primal.len()),
        )
    };
    if s.primal.len() != p.blocks.len() || s.dual_slack.len() != p.blocks.len() {
        return Err(bad());
    }
    if s.y.len() != p.constraints.len() {
        return Err(Error::dims(
            format!("{} constraints", p.constraints.len()),
            format!("{} multipliers", s.y.len()),
        ));
    }
    for (kind, (x, z)) in p.blocks.iter().zip(s.primal.iter().zip(&s.dual_slack)) {
        let ok = |v: &BlockValue| match (kind, v) {
            (BlockKind::Psd(n), BlockValue::Matrix(m)) => m.rows() == *n && m.cols() == *n,
            (BlockKind::Nonneg(n) | BlockKind::Free(n), BlockValue::Vector(v)) => v.len() == *n,
            _ => false,
        };
        if !ok(x) || !ok(z) {
            return Err(bad());
        }
    }
    Ok(())
}

/// Dense `sum_k w_k A_k + alpha C` per block, with the symmetric entry convention.
fn combine(p: &ConicProgram, w: &[f64], alpha: f64) -> Vec<BlockValue> {
    let mut out: Vec<BlockValue> = p
        .blocks
        .iter()
        .map(|k| match *k {
            BlockKind::Psd(n) => BlockValue::Matrix(RMat::zeros(n, n)),
            BlockKind::Nonneg(n) | BlockKind::Free(n) => BlockValue::Vector(vec![0.0; n]),
        })
        .collect();
    let mut add = |expr: &crate::conic::LinExpr, weight: f64| {
        if weight == 0.0 {
            return;
        }
        for t in &expr.terms {
            match &mut out[t.block.0] {
                BlockValue::Matrix(m) => {
                    if t.row == t.col {
                        m[(t.row, t.row)] += weight * t.coef;
                    } else {
                        m[(t.row, t.col)] += 0.5 * weight * t.coef;
                        m[(t.col, t.row)] += 0.5 * weight * t.coef;
                    }
                }
                BlockValue::Vector(v) => v[t.row] += weight * t.coef,
            }
        }
    };
    for (con, &wk) in p.constraints.iter().zip(w) {
        add(&con.expr, wk);
    }
    add(&p.objective, alpha);
    out
}

fn cone_min(p: &ConicProgram, vals: &[BlockValue]) -> Result<f64> {
    let mut min = f64::INFINITY;
    for (kind, v) in p.blocks.iter().zip(vals) {
        match (kind, v) {
            (BlockKind::Psd(_), BlockValue::Matrix(m)) => min = min.min(min_eigenvalue(m)?),
            (BlockKind::Nonneg(_), BlockValue::Vector(v)) => {
                min = v.iter().fold(min, |a, &x| a.min(x));
            }
            _ => {}
        }
    }
    Ok(if min.is_finite() { min } else { 0.0 })
}

/// Largest deviation of `calc` from `reported` on cone blocks, and of `calc`
/// from zero on free blocks.
fn slack_mismatch(p: &ConicProgram, calc: &[BlockValue], reported: &[BlockValue]) -> f64 {
    let mut worst: f64 = 0.0;
    for (kind, (c, r)) in p.blocks.iter().zip(calc.iter().zip(reported)) {
        match (kind, c, r) {
            (BlockKind::Psd(_), BlockValue::Matrix(c), BlockValue::Matrix(r)) => {
                for i in 0..c.rows() {
                    for j in 0..c.cols() {
                        worst = worst.max((c[(i, j)] - r[(i, j)]).abs());
                    }
                }
            }
            (BlockKind::Nonneg(_), BlockValue::Vector(c), BlockValue::Vector(r)) => {
                for (a, b) in c.iter().zip(r) {
                    worst = worst.max((a - b).abs());
                }
            }
            (BlockKind::Free(_), BlockValue::Vector(c), _) => {
                worst = c.iter().fold(worst, |a, x| a.max(x.abs()));
            }
            _ => {}
        }
    }
    worst
}

fn norms(p: &ConicProgram) -> (f64, f64) {
    let b = p.constraints.iter().fold(0.0f64, |a, c| a.max(c.rhs.abs()));
    let c = combine(p, &vec![0.0; p.constraints.len()], 1.0)
        .iter()
        .fold(0.0f64, |a, v| match v {
            BlockValue::Matrix(m) => a.max(2.0 * m.max_abs()),
            BlockValue::Vector(v) => v.iter().fold(a, |a, x| a.max(x.abs())),
        });
    (b, c)
}

fn dual_slack_from_y(p: &ConicProgram, y: &[f64], ray: bool) -> Vec<BlockValue> {
    // min: c - A^T y; max: A^T y - c; ray: -A^T y
    let (wy, wc) = match (ray, p.sense) {
        (true, _) => (-1.0, 0.0),
        (false, Sense::Minimize) => (-1.0, 1.0),
        (false, Sense::Maximize) => (1.0, -1.0),
    };
    let scaled: Vec<f64> = y.iter().map(|v| wy * v).collect();
    combine(p, &scaled, wc)
}

/// Residuals of a solution evaluated straight from the program's terms.
pub(crate) fn measure(p: &ConicProgram, s: &ConicSolution) -> Result<Residuals> {
    check_shapes(p, s)?;
    let (b_norm, c_norm) = norms(p);
    let eval_rows =
        |x: &[BlockValue]| -> Vec<f64> { p.constraints.iter().map(|c| ConicProgram::eval(&c.expr, x)).collect() };
    match s.status {
        Status::Optimal | Status::Stalled => {
            let ax = eval_rows(&s.primal);
            let pe = p
                .constraints
                .iter()
                .zip(&ax)
                .fold(0.0f64, |a, (c, v)| a.max((v - c.rhs).abs()));
            let calc = dual_slack_from_y(p, &s.y, false);
            Ok(Residuals {
                primal_eq: pe / (1.0 + b_norm),
                dual_eq: slack_mismatch(p, &calc, &s.dual_slack) / (1.0 + c_norm),
                primal_min_eig: cone_min(p, &s.primal)?,
                dual_min_eig: cone_min(p, &calc)?,
            })
        }
        Status::Infeasible => {
            let by: f64 = p.constraints.iter().zip(&s.y).map(|(c, y)| c.rhs * y).sum();
            let calc = dual_slack_from_y(p, &s.y, true);
            Ok(Residuals {
                primal_eq: (by - 1.0).abs(),
                dual_eq: slack_mismatch(p, &calc, &s.dual_slack),
                primal_min_eig: 0.0,
                dual_min_eig: cone_min(p, &calc)?,
            })
        }
        Status::Unbounded => {
            let ax = eval_rows(&s.primal);
            let cx = ConicProgram::eval(&p.objective, &s.primal);
            let improve = match p.sense {
                Sense::Minimize => -cx,
                Sense::Maximize => cx,
            };
            Ok(Residuals {
                primal_eq: ax.iter().fold(0.0f64, |a, v| a.max(v.abs())),
                dual_eq: (improve - 1.0).abs(),
                primal_min_eig: cone_min(p, &s.primal)?,
                dual_min_eig: 0.0,
            })
        }
    }
}

/// Recomputes every residual of `s` from the program data and flags any
/// violation above the tolerances in `opts`.
pub fn verify_certificate(p: &ConicProgram, s: &ConicSolution, opts: &SolveOptions) -> Result<CertificateReport> {
    p.validate()?;
    let r = measure(p, s)?;
    let tol = opts.feas_tol;
    let mut violations = Vec::new();
    let mut flag = |ok: bool, msg: String| {
        if !ok {
            violations.push(msg);
        }
    };
    flag(
        r.primal_eq <= tol,
        format!("primal equality residual {:.3e}", r.primal_eq),
    );
    flag(r.dual_eq <= tol, format!("dual equality residual {:.3e}", r.dual_eq));
    flag(
        r.primal_min_eig >= -tol,
        format!("primal cone violation {:.3e}", r.primal_min_eig),
    );
    flag(
        r.dual_min_eig >= -tol,
        format!("dual cone violation {:.3e}", r.dual_min_eig),
    );

    let (primal_value, dual_value, gap) = match s.status {
        Status::Optimal | Status::Stalled => {
            let pv = ConicProgram::eval(&p.objective, &s.primal);
            let dv: f64 = p.constraints.iter().zip(&s.y).map(|(c, y)| c.rhs * y).sum();
            let gap = relative_gap(pv, dv);
            if s.status == Status::Optimal {
                flag(gap <= opts.gap_tol, format!("duality gap {gap:.3e}"));
                let ordered = match p.sense {
                    Sense::Minimize => pv >= dv - opts.gap_tol * (1.0 + pv.abs() + dv.abs()),
                    Sense::Maximize => pv <= dv + opts.gap_tol * (1.0 + pv.abs() + dv.abs()),
                };
                flag(ordered, format!("primal {pv} and dual {dv} out of order"));
            }
            (pv, dv, gap)
        }
        _ => (s.primal_value, s.dual_value, s.gap),
    };
    let certified = s.status != Status::Stalled && violations.is_empty();
    Ok(CertificateReport {
        status: s.status,
        residuals: r,
        primal_value,
        dual_value,
        gap,
        violations,
        certified,
    })
}
