//! Small dense conic programs over products of PSD, nonnegative and free
//! blocks, solved by a homogeneous self-dual interior-point method with
//! Nesterov-Todd scaling and Mehrotra predictor-corrector steps.
//!
//! A program is stated in equality form: optimize `<c, x>` subject to
//! `<A_k, x> = b_k` with `x` in the product cone. PSD coefficients are
//! written against individual entries: a term `(block, r, c, coef)` contributes
//! `coef * X[r][c]`. Because `X` is symmetric, a term on `(r, c)` and one on
//! `(c, r)` mean the same thing.
//!
//! For a minimization the dual is `max b^T y` with `c - A^T y` in the cone;
//! for a maximization it is `min b^T y` with `A^T y - c` in the cone. The
//! reported `y` and `dual_slack` follow that convention.

mod certificate;
mod ipm;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matlin::real::RMat;

pub use certificate::{verify_certificate, CertificateReport};
pub use ipm::solve;

/// Largest total block dimension accepted by [`solve`].
pub const MAX_TOTAL_DIM: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockKind {
    /// Symmetric `n x n` matrix constrained PSD.
    Psd(usize),
    /// `n` scalars constrained nonnegative.
    Nonneg(usize),
    /// `n` unconstrained scalars.
    Free(usize),
}

impl BlockKind {
    pub fn size(&self) -> usize {
        match *self {
            BlockKind::Psd(n) | BlockKind::Nonneg(n) | BlockKind::Free(n) => n,
        }
    }

    /// Contribution to the total dimension cap.
    fn dim(&self) -> usize {
        self.size()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockId(pub usize);

/// One coefficient of a linear functional. For scalar blocks `col` is 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub block: BlockId,
    pub row: usize,
    pub col: usize,
    pub coef: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LinExpr {
    pub terms: Vec<Term>,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `coef * X[row][col]` for a PSD block.
    pub fn psd(mut self, block: BlockId, row: usize, col: usize, coef: f64) -> Self {
        self.push_psd(block, row, col, coef);
        self
    }

    /// Adds `coef * x[index]` for a scalar block.
    pub fn scalar(mut self, block: BlockId, index: usize, coef: f64) -> Self {
        self.push_scalar(block, index, coef);
        self
    }

    pub fn push_psd(&mut self, block: BlockId, row: usize, col: usize, coef: f64) {
        if coef != 0.0 {
            self.terms.push(Term { block, row, col, coef });
        }
    }

    pub fn push_scalar(&mut self, block: BlockId, index: usize, coef: f64) {
        if coef != 0.0 {
            self.terms.push(Term {
                block,
                row: index,
                col: 0,
                coef,
            });
        }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub expr: LinExpr,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConicProgram {
    pub sense: Sense,
    pub blocks: Vec<BlockKind>,
    pub objective: LinExpr,
    pub constraints: Vec<Constraint>,
}

impl ConicProgram {
    pub fn new(sense: Sense) -> Self {
        ConicProgram {
            sense,
            blocks: Vec::new(),
            objective: LinExpr::new(),
            constraints: Vec::new(),
        }
    }

    pub fn add_block(&mut self, kind: BlockKind) -> BlockId {
        self.blocks.push(kind);
        BlockId(self.blocks.len() - 1)
    }

    pub fn add_psd(&mut self, n: usize) -> BlockId {
        self.add_block(BlockKind::Psd(n))
    }

    pub fn add_nonneg(&mut self, n: usize) -> BlockId {
        self.add_block(BlockKind::Nonneg(n))
    }

    pub fn add_free(&mut self, n: usize) -> BlockId {
        self.add_block(BlockKind::Free(n))
    }

    pub fn set_objective(&mut self, expr: LinExpr) {
        self.objective = expr;
    }

    /// Appends `expr = rhs` and returns its row index.
    pub fn constrain(&mut self, expr: LinExpr, rhs: f64) -> usize {
        self.constraints.push(Constraint { expr, rhs });
        self.constraints.len() - 1
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(BlockKind::dim).sum()
    }

    /// Checks that every term addresses an existing entry and all data is finite.
    pub fn validate(&self) -> Result<()> {
        if self.total_dim() > MAX_TOTAL_DIM {
            return Err(Error::DimensionCap {
                dim: self.total_dim(),
                cap: MAX_TOTAL_DIM,
            });
        }
        let check = |e: &LinExpr, what: &str| -> Result<()> {
            for t in &e.terms {
                let kind = self
                    .blocks
                    .get(t.block.0)
                    .ok_or_else(|| Error::MalformedProgram(format!("{what} references missing block {}", t.block.0)))?;
                let ok = match *kind {
                    BlockKind::Psd(n) => t.row < n && t.col < n,
                    BlockKind::Nonneg(n) | BlockKind::Free(n) => t.row < n && t.col == 0,
                };
                if !ok {
                    return Err(Error::MalformedProgram(format!(
                        "{what} term ({}, {}) out of range for block {} of kind {:?}",
                        t.row, t.col, t.block.0, kind
                    )));
                }
                if !t.coef.is_finite() {
                    return Err(Error::MalformedProgram(format!("{what} has a non-finite coefficient")));
                }
            }
            Ok(())
        };
        check(&self.objective, "objective")?;
        for (k, con) in self.constraints.iter().enumerate() {
            check(&con.expr, &format!("constraint {k}"))?;
            if !con.rhs.is_finite() {
                return Err(Error::MalformedProgram(format!("constraint {k} has a non-finite rhs")));
            }
        }
        Ok(())
    }

    /// Evaluates a functional at a point given block by block.
    pub fn eval(expr: &LinExpr, x: &[BlockValue]) -> f64 {
        expr.terms
            .iter()
            .map(|t| {
                t.coef
                    * match &x[t.block.0] {
                        BlockValue::Matrix(m) => m[(t.row, t.col)],
                        BlockValue::Vector(v) => v[t.row],
                    }
            })
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum BlockValue {
    Matrix(RMat),
    Vector(Vec<f64>),
}

impl BlockValue {
    pub fn matrix(&self) -> &RMat {
        match self {
            BlockValue::Matrix(m) => m,
            BlockValue::Vector(_) => panic!("block is scalar"),
        }
    }

    pub fn vector(&self) -> &[f64] {
        match self {
            BlockValue::Vector(v) => v,
            BlockValue::Matrix(_) => panic!("block is a matrix"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Optimal,
    /// `y` and `dual_slack` hold a ray with `b^T y = 1` proving no feasible `x` exists.
    Infeasible,
    /// `primal` holds a feasible direction improving the objective by 1.
    Unbounded,
    /// Iteration cap or numerical breakdown; the best iterate is returned.
    Stalled,
}

/// Scaled violations: equality residuals are divided by `1 + max|rhs|`
/// (primal) or `1 + max|c|` (dual); cone entries are minimum eigenvalues.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub primal_eq: f64,
    pub dual_eq: f64,
    pub primal_min_eig: f64,
    pub dual_min_eig: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConicSolution {
    pub status: Status,
    pub primal_value: f64,
    pub dual_value: f64,
    /// `|primal - dual| / (1 + |primal| + |dual|)`
    pub gap: f64,
    pub primal: Vec<BlockValue>,
    pub y: Vec<f64>,
    pub dual_slack: Vec<BlockValue>,
    pub residuals: Residuals,
    pub iterations: usize,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    pub fn matrix(&self, b: BlockId) -> &RMat {
        self.primal[b.0].matrix()
    }

    pub fn vector(&self, b: BlockId) -> &[f64] {
        self.primal[b.0].vector()
    }

    pub fn dual_matrix(&self, b: BlockId) -> &RMat {
        self.dual_slack[b.0].matrix()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub iter_cap: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            gap_tol: 1e-8,
            feas_tol: 1e-8,
            iter_cap: 200,
        }
    }
}

pub(crate) fn relative_gap(p: f64, d: f64) -> f64 {
    (p - d).abs() / (1.0 + p.abs() + d.abs())
}

#[cfg(test)]
mod tests;
