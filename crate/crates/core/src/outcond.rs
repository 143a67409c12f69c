//! The fidelity output condition and the classical probability lemmas that
//! turn witness values into error-dependent bounds.
//!
//! Two independent computations of the same quantity are provided: the
//! alignment SDP over contractions ([`best_alignment`], exact side) and a
//! multi-start minimization of the vector-masked fidelity
//! ([`min_vec_fidelity`], upper side).

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::gamma2;
use crate::check::{all_passed, Check};
use crate::conic::{self, ConicProgram, LinExpr, Sense, Status};
use crate::error::{Error, Result};
use crate::matlin::random::{random_simplex, rng};
use crate::matlin::{general_op_norm, mat_sqrt, spectral, unnormalized_fidelity, vnorm, CMatrix, HermMat, C64};

/// Largest ambient dimension and family size accepted by the alignment SDP.
pub const ALIGN_CAP: usize = 32;
/// Starts of the fidelity minimization.
pub const FIDELITY_STARTS: usize = 32;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorFamilyPair {
    /// Unit vectors, all of length `dim`.
    pub a: Vec<Vec<C64>>,
    pub b: Vec<Vec<C64>>,
    pub dim: usize,
}

impl VectorFamilyPair {
    /// Checks unit norms and equal family sizes, then zero-pads every vector
    /// to the largest length present.
    pub fn new(a: Vec<Vec<C64>>, b: Vec<Vec<C64>>) -> Result<Self> {
        if a.len() != b.len() || a.is_empty() {
            return Err(Error::dims(a.len(), b.len()));
        }
        let dim = a.iter().chain(&b).map(Vec::len).max().unwrap_or(0);
        if dim == 0 {
            return Err(Error::Precondition("vectors must be nonempty".into()));
        }
        for (i, v) in a.iter().chain(&b).enumerate() {
            let n = vnorm(v);
            if (n - 1.0).abs() > 1e-9 {
                return Err(Error::Precondition(format!("vector {i} has norm {n}")));
            }
        }
        let pad = |fam: Vec<Vec<C64>>| -> Vec<Vec<C64>> {
            fam.into_iter()
                .map(|mut v| {
                    v.resize(dim, ZERO);
                    v
                })
                .collect()
        };
        Ok(VectorFamilyPair {
            a: pad(a),
            b: pad(b),
            dim,
        })
    }

    pub fn real(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> Result<Self> {
        let lift =
            |f: Vec<Vec<f64>>| -> Vec<Vec<C64>> { f.into_iter().map(|v| crate::matlin::complexify(&v)).collect() };
        Self::new(lift(a), lift(b))
    }

    /// Families realizing two Gram matrices: the columns of their square roots.
    pub fn from_grams(rho: &HermMat, sigma: &HermMat) -> Result<Self> {
        let cols = |m: &HermMat| -> Result<Vec<Vec<C64>>> {
            let r = mat_sqrt(m)?;
            Ok((0..m.dim()).map(|x| r.matrix().col(x)).collect())
        };
        let (a, b) = (cols(rho)?, cols(sigma)?);
        let renorm = |f: Vec<Vec<C64>>| -> Vec<Vec<C64>> {
            f.into_iter()
                .map(|v| {
                    let n = vnorm(&v);
                    v.into_iter().map(|z| z / n).collect()
                })
                .collect()
        };
        Self::new(renorm(a), renorm(b))
    }

    pub fn count(&self) -> usize {
        self.a.len()
    }

    pub fn is_real(&self) -> bool {
        self.a.iter().chain(&self.b).flatten().all(|z| z.im == 0.0)
    }

    fn gram(f: &[Vec<C64>]) -> HermMat {
        HermMat::hermitize(CMatrix::from_fn(f.len(), f.len(), |x, y| {
            crate::matlin::vdot(&f[x], &f[y])
        }))
    }

    /// `ρ_xy = <a_x|a_y>`
    pub fn rho(&self) -> HermMat {
        Self::gram(&self.a)
    }

    /// `σ_xy = <b_x|b_y>`
    pub fn sigma(&self) -> HermMat {
        Self::gram(&self.b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    /// Optimal `t` of `max t` s.t. `Re<a_x|V|b_x> >= t`, `V` a contraction.
    pub value: f64,
    /// The optimal `V`, rescaled to operator norm at most 1.
    pub v: CMatrix,
    /// `min_x Re<a_x|V|b_x>` recomputed from the rescaled `V`.
    pub achieved: f64,
    /// Operator norm of `V` before rescaling.
    pub contraction_norm: f64,
    /// `max |U*U - I|` for the unitary dilation `[[V, (I-VV*)^½], [(I-V*V)^½, -V*]]`,
    /// which attains `achieved` on the families padded to twice the dimension.
    pub unitary_defect: f64,
    pub iterations: usize,
    pub gap: f64,
}

/// `max_V min_x Re<a_x|V|b_x>` over contractions `V`, encoded as
/// `[[I, V], [V*, I]] ⪰ 0` (real embedding when the families are complex).
pub fn best_alignment(pair: &VectorFamilyPair) -> Result<AlignmentReport> {
    let d = pair.dim;
    let n = pair.count();
    if d > ALIGN_CAP || n > ALIGN_CAP {
        return Err(Error::DimensionCap {
            dim: d.max(n),
            cap: ALIGN_CAP,
        });
    }
    let complex = !pair.is_real();
    let m = 2 * d;
    let mut p = ConicProgram::new(Sense::Maximize);
    let t = p.add_free(1);
    let s = p.add_nonneg(n);
    let z = p.add_psd(if complex { 2 * m } else { m });
    p.set_objective(LinExpr::new().scalar(t, 0, 1.0));
    // Real embedding `[[X, -Y], [Y, X]]` of `[[I, V], [V*, I]]`: the
    // same-side blocks are pinned entrywise, the cross blocks tied.
    let same_side = |r: usize, c: usize| (r < d) == (c < d);
    for r in 0..m {
        for c in r..m {
            let id = if r == c { 1.0 } else { 0.0 };
            if same_side(r, c) {
                p.constrain(LinExpr::new().psd(z, r, c, 1.0), id);
                if complex {
                    p.constrain(LinExpr::new().psd(z, m + r, m + c, 1.0), id);
                    p.constrain(LinExpr::new().psd(z, m + r, c, 1.0), 0.0);
                    if r < c {
                        p.constrain(LinExpr::new().psd(z, m + c, r, 1.0), 0.0);
                    }
                }
            } else if complex {
                p.constrain(LinExpr::new().psd(z, r, c, 1.0).psd(z, m + r, m + c, -1.0), 0.0);
                p.constrain(LinExpr::new().psd(z, m + r, c, 1.0).psd(z, m + c, r, 1.0), 0.0);
            }
        }
    }
    for x in 0..n {
        let mut e = LinExpr::new().scalar(t, 0, -1.0).scalar(s, x, -1.0);
        for r in 0..d {
            for c in 0..d {
                let w = pair.a[x][r].conj() * pair.b[x][c];
                if w.re != 0.0 {
                    e.push_psd(z, r, d + c, w.re);
                }
                if complex && w.im != 0.0 {
                    e.push_psd(z, m + r, d + c, -w.im);
                }
            }
        }
        p.constrain(e, 0.0);
    }
    let sol = solve(&p)?;
    let gram = sol.matrix(z);
    let v = CMatrix::from_fn(d, d, |r, c| {
        let im = if complex { gram[(m + r, d + c)] } else { 0.0 };
        C64::new(gram[(r, d + c)], im)
    });
    let contraction_norm = general_op_norm(&v)?;
    let v = v.scale(1.0 / contraction_norm.max(1.0));
    let achieved = (0..n)
        .map(|x| crate::matlin::vdot(&pair.a[x], &v.matvec(&pair.b[x])).re)
        .fold(f64::INFINITY, f64::min);
    Ok(AlignmentReport {
        value: sol.vector(t)[0],
        achieved,
        contraction_norm,
        unitary_defect: dilation_defect(&v)?,
        v,
        iterations: sol.iterations,
        gap: sol.gap,
    })
}

fn solve(p: &ConicProgram) -> Result<conic::ConicSolution> {
    let sol = crate::bounds::solve_bound_program(p)?;
    match sol.status {
        Status::Optimal => Ok(sol),
        other => Err(Error::Solver(format!("conic solve ended {other:?}"))),
    }
}

fn dilation_defect(v: &CMatrix) -> Result<f64> {
    let d = v.rows();
    let eye = CMatrix::identity(d);
    let left = mat_sqrt(&HermMat::hermitize(eye.sub(&v.matmul(&v.adjoint())?)?))?;
    let right = mat_sqrt(&HermMat::hermitize(eye.sub(&v.adjoint().matmul(v)?)?))?;
    let va = v.adjoint();
    let u = CMatrix::from_fn(2 * d, 2 * d, |r, c| match (r < d, c < d) {
        (true, true) => v[(r, c)],
        (true, false) => left.get(r, c - d),
        (false, true) => right.get(r - d, c),
        (false, false) => -va[(r - d, c - d)],
    });
    Ok(u.adjoint().matmul(&u)?.sub(&CMatrix::identity(2 * d))?.max_abs())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VecFidelity {
    /// `F(ρ∘uu*, σ∘uu*)` at the returned `u`; an upper bound on the minimum.
    pub value: f64,
    /// Unit, entrywise nonnegative minimizer.
    pub u: Vec<f64>,
    pub starts: usize,
}

/// Square-root factors with `ρ = A*A`, `σ = B*B`.
struct Factors {
    a: CMatrix,
    b: CMatrix,
}

impl Factors {
    /// `M(p) = Σ_x p_x b_x a_x*`
    fn m(&self, p: &[f64]) -> CMatrix {
        let n = p.len();
        CMatrix::from_fn(n, n, |r, c| {
            (0..n).map(|x| self.b[(r, x)] * self.a[(c, x)].conj() * p[x]).sum()
        })
    }

    /// `Tr (M*M + μ²)^½` and its gradient in `p`.
    fn smoothed(&self, p: &[f64], mu: f64) -> Result<(f64, Vec<f64>)> {
        let n = p.len();
        let m = self.m(p);
        let mtm = HermMat::hermitize(m.adjoint().matmul(&m)?);
        let sd = spectral(&mtm)?;
        let value = sd.eigenvalues.iter().map(|l| (l.max(0.0) + mu * mu).sqrt()).sum();
        let h = sd.apply(|l| 1.0 / (l.max(0.0) + mu * mu).sqrt());
        let hm = h.matrix().matmul(&m.adjoint())?;
        let grad = (0..n)
            .map(|x| {
                let bx = self.b.col(x);
                let y = hm.matvec(&bx);
                crate::matlin::vdot(&self.a.col(x), &y).re
            })
            .collect();
        Ok((value, grad))
    }
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(y: &[f64]) -> Vec<f64> {
    let mut s = y.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, v) in s.iter().enumerate() {
        cum += v;
        let t = (cum - 1.0) / (i + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|v| (v - theta).max(0.0)).collect()
}

fn descend(f: &Factors, mut p: Vec<f64>) -> Result<Vec<f64>> {
    let mut step = 0.1;
    for mu in [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7] {
        let (mut val, mut grad) = f.smoothed(&p, mu)?;
        for _ in 0..300 {
            let mut accepted = None;
            step *= 2.0;
            while step > 1e-14 {
                let cand = project_simplex(&p.iter().zip(&grad).map(|(a, g)| a - step * g).collect::<Vec<_>>());
                let diff: Vec<f64> = cand.iter().zip(&p).map(|(c, a)| c - a).collect();
                let lin: f64 = diff.iter().zip(&grad).map(|(d, g)| d * g).sum();
                let sq: f64 = diff.iter().map(|d| d * d).sum();
                let (cv, cg) = f.smoothed(&cand, mu)?;
                if cv <= val + lin + sq / (2.0 * step) + 1e-15 {
                    accepted = Some((cand, cv, cg, sq));
                    break;
                }
                step *= 0.5;
            }
            match accepted {
                Some((cand, cv, cg, sq)) => {
                    p = cand;
                    let progress = val - cv;
                    val = cv;
                    grad = cg;
                    if sq.sqrt() < 1e-12 || progress.abs() < 1e-15 {
                        break;
                    }
                }
                None => break,
            }
        }
    }
    Ok(p)
}

/// `min_u F(ρ∘uu*, σ∘uu*)` over unit `u`. Only `p = |u|²` matters, and in
/// `p` the objective is the convex function `‖Σ p_x b_x a_x*‖_tr`; this is
/// minimized from [`FIDELITY_STARTS`] starts (uniform, coordinate vectors,
/// seeded random points) by projected gradient on a smoothed trace norm.
pub fn min_vec_fidelity(rho: &HermMat, sigma: &HermMat, seed: u64) -> Result<VecFidelity> {
    let n = rho.dim();
    if sigma.dim() != n {
        return Err(Error::dims(n, sigma.dim()));
    }
    for m in [rho, sigma] {
        if (0..n).any(|x| (m.re(x, x) - 1.0).abs() > 1e-9) {
            return Err(Error::Precondition("Gram matrices need unit diagonals".into()));
        }
    }
    let f = Factors {
        a: mat_sqrt(rho)?.into_matrix(),
        b: mat_sqrt(sigma)?.into_matrix(),
    };
    let starts: Vec<Vec<f64>> = (0..FIDELITY_STARTS)
        .map(|i| {
            if i == 0 {
                vec![1.0 / n as f64; n]
            } else if i <= n {
                let mut e = vec![0.0; n];
                e[i - 1] = 1.0;
                e
            } else {
                let mut g = rng(seed.wrapping_add(i as u64));
                random_simplex(n, &mut g)
            }
        })
        .collect();
    let runs: Vec<Result<(f64, Vec<f64>)>> = starts
        .into_par_iter()
        .map(|p0| {
            let p = descend(&f, p0)?;
            let u: Vec<f64> = p.iter().map(|x| x.max(0.0).sqrt()).collect();
            let value = masked_fidelity(rho, sigma, &u)?;
            Ok((value, u))
        })
        .collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for r in runs {
        let r = r?;
        if best.as_ref().is_none_or(|b| r.0 < b.0) {
            best = Some(r);
        }
    }
    let (value, u) = best.expect("at least one start");
    Ok(VecFidelity {
        value,
        u,
        starts: FIDELITY_STARTS,
    })
}

/// `F(ρ∘uu*, σ∘uu*)`
pub fn masked_fidelity(rho: &HermMat, sigma: &HermMat, u: &[f64]) -> Result<f64> {
    let uc = crate::matlin::complexify(u);
    unnormalized_fidelity(&rho.hadamard_outer(&uc), &sigma.hadamard_outer(&uc))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalDistribution {
    /// Positive support values `a_i`.
    pub values: Vec<f64>,
    pub probs: Vec<f64>,
}

impl ClassicalDistribution {
    pub fn new(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.len() != probs.len() || values.is_empty() {
            return Err(Error::dims(values.len(), probs.len()));
        }
        if values.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(Error::Precondition("support values must be positive".into()));
        }
        if probs.iter().any(|&p| !(p >= 0.0)) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::Precondition(
                "probabilities must be nonnegative and sum to 1".into(),
            ));
        }
        Ok(ClassicalDistribution { values, probs })
    }

    /// `E_p(A)`
    pub fn mean(&self) -> f64 {
        self.values.iter().zip(&self.probs).map(|(a, p)| a * p).sum()
    }

    /// `E_p(A^{-1})`
    pub fn inverse_mean(&self) -> f64 {
        self.values.iter().zip(&self.probs).map(|(a, p)| p / a).sum()
    }
}

/// `F(p, q) = Σ_x sqrt(p_x q_x)` over a shared support.
pub fn dist_fidelity(p: &ClassicalDistribution, q: &ClassicalDistribution) -> Result<f64> {
    if p.values != q.values {
        return Err(Error::Precondition("distributions have different supports".into()));
    }
    Ok(p.probs.iter().zip(&q.probs).map(|(a, b)| (a * b).sqrt()).sum())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectationUnderFidelity {
    /// `min Σ q_i a_i` over `q` with `F(p, q) >= sqrt(δ)`.
    pub numerical: f64,
    /// `δ / E_p(A^{-1})`
    pub closed: f64,
    /// Minimizing distribution, the diagonal of the optimal `ρ`.
    pub q: Vec<f64>,
    pub check: Check,
}

/// Solves `min Tr(diag(a) ρ)` s.t. `ρ ⪰ 0`, `Tr ρ = 1`, `<u|ρ|u> >= δ` with
/// `u = sqrt(p)`, and compares with the closed lower bound.
pub fn min_expectation_under_fidelity(p: &ClassicalDistribution, delta: f64) -> Result<ExpectationUnderFidelity> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Precondition(format!("delta must lie in (0, 1] (got {delta})")));
    }
    let n = p.values.len();
    let u: Vec<f64> = p.probs.iter().map(|x| x.sqrt()).collect();
    let mut prog = ConicProgram::new(Sense::Minimize);
    let slack = prog.add_nonneg(1);
    let rho = prog.add_psd(n);
    let mut obj = LinExpr::new();
    let mut tr = LinExpr::new();
    let mut overlap = LinExpr::new().scalar(slack, 0, -1.0);
    for i in 0..n {
        obj.push_psd(rho, i, i, p.values[i]);
        tr.push_psd(rho, i, i, 1.0);
        for j in i..n {
            let coef = if i == j { u[i] * u[i] } else { 2.0 * u[i] * u[j] };
            if coef != 0.0 {
                overlap.push_psd(rho, i, j, coef);
            }
        }
    }
    prog.set_objective(obj);
    prog.constrain(tr, 1.0);
    prog.constrain(overlap, delta);
    let sol = solve(&prog)?;
    let q: Vec<f64> = (0..n).map(|i| sol.matrix(rho)[(i, i)]).collect();
    let numerical = sol.primal_value;
    let closed = delta / p.inverse_mean();
    Ok(ExpectationUnderFidelity {
        numerical,
        closed,
        q,
        check: Check::new("numerical_at_least_closed", numerical - closed, 1e-8),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportBounds {
    pub a0: f64,
    pub a1: f64,
    /// Mean `ā`.
    pub abar: f64,
}

impl SupportBounds {
    pub fn new(a0: f64, a1: f64, abar: f64) -> Result<Self> {
        if !(a0 > 0.0 && a0 <= abar && abar <= a1 && a1.is_finite()) {
            return Err(Error::Precondition(format!(
                "need 0 < a0 <= abar <= a1 (got {a0}, {abar}, {a1})"
            )));
        }
        Ok(SupportBounds { a0, a1, abar })
    }
}

/// `(a0 + a1 - ā) / (a0 a1)`, the largest `E(A^{-1})` for `A ∈ [a0, a1]` with mean `ā`.
pub fn inv_expectation_bound(sb: &SupportBounds) -> f64 {
    (sb.a0 + sb.a1 - sb.abar) / (sb.a0 * sb.a1)
}

/// LP oracle: `max Σ p_j / g_j` over distributions on `points` equally
/// spaced grid values in `[a0, a1]` with mean `ā`.
pub fn inv_expectation_lp(sb: &SupportBounds, points: usize) -> Result<f64> {
    if points < 2 {
        return Err(Error::Precondition("the grid needs at least two points".into()));
    }
    let grid: Vec<f64> = (0..points)
        .map(|j| sb.a0 + (sb.a1 - sb.a0) * j as f64 / (points - 1) as f64)
        .collect();
    let mut prog = ConicProgram::new(Sense::Maximize);
    let p = prog.add_nonneg(points);
    let mut obj = LinExpr::new();
    let mut total = LinExpr::new();
    let mut mean = LinExpr::new();
    for (j, g) in grid.iter().enumerate() {
        obj.push_scalar(p, j, 1.0 / g);
        total.push_scalar(p, j, 1.0);
        mean.push_scalar(p, j, *g);
    }
    prog.set_objective(obj);
    prog.constrain(total, 1.0);
    prog.constrain(mean, sb.abar);
    Ok(solve(&prog)?.primal_value)
}

/// `(δ a0 a1 / (a0 + a1 - ā))^k`
pub fn product_expectation_bound(delta: f64, sb: &SupportBounds, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::Precondition("k must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::Precondition(format!("delta must lie in [0, 1] (got {delta})")));
    }
    Ok((delta / inv_expectation_bound(sb)).powi(k as i32))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    /// `sqrt(1 - ε)` from [`best_alignment`].
    pub alignment: f64,
    pub epsilon: f64,
    /// `1 - sqrt(1 - ε)`
    pub lhs: f64,
    /// `γ2(ρ - σ) / 2`
    pub mid: f64,
    /// `sqrt(ε)`
    pub rhs: f64,
    pub checks: Vec<Check>,
}

impl Sandwich {
    pub fn holds(&self) -> bool {
        all_passed(&self.checks)
    }
}

/// `1 - sqrt(1-ε) <= γ2(ρ - σ)/2 <= sqrt(ε)` with `sqrt(1-ε)` the best alignment.
pub fn gamma2_error_sandwich(pair: &VectorFamilyPair, seed: u64) -> Result<Sandwich> {
    let align = best_alignment(pair)?;
    let t = align.value.clamp(0.0, 1.0);
    let epsilon = 1.0 - t * t;
    let diff = pair.rho().sub(&pair.sigma())?;
    let mid = gamma2(diff.matrix(), seed)?.value / 2.0;
    let (lhs, rhs) = (1.0 - t, epsilon.sqrt());
    Ok(Sandwich {
        alignment: align.value,
        epsilon,
        lhs,
        mid,
        rhs,
        checks: vec![
            Check::new("lower", mid - lhs, 1e-6),
            Check::new("upper", rhs - mid, 1e-6),
        ],
    })
}

/// Random pair of `count` unit vectors in dimension `dim`.
pub fn random_pair(count: usize, dim: usize, real: bool, g: &mut impl Rng) -> VectorFamilyPair {
    let fam = |g: &mut _| -> Vec<Vec<C64>> {
        (0..count)
            .map(|_| crate::matlin::random::random_unit_vector(dim, real, g))
            .collect()
    };
    let a = fam(g);
    let b = fam(g);
    VectorFamilyPair::new(a, b).expect("unit vectors of equal dimension")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    #[test]
    fn alignment_small_cases() {
        let same = VectorFamilyPair::real(vec![e(2, 0), e(2, 1)], vec![e(2, 0), e(2, 1)]).unwrap();
        let r = best_alignment(&same).unwrap();
        assert!((r.value - 1.0).abs() < 1e-7);
        assert!(r.unitary_defect < 1e-6);

        // A single orthogonal pair is aligned by a rotation.
        let orth = VectorFamilyPair::real(vec![e(2, 0)], vec![e(2, 1)]).unwrap();
        assert!((best_alignment(&orth).unwrap().value - 1.0).abs() < 1e-7);

        // b_1 = -b_0 while a_0 = a_1 forces t <= 0.
        let anti = VectorFamilyPair::real(vec![e(2, 0), e(2, 0)], vec![e(2, 0), vec![-1.0, 0.0]]).unwrap();
        let r = best_alignment(&anti).unwrap();
        assert!(r.value.abs() < 1e-7, "{}", r.value);
    }

    #[test]
    fn alignment_matches_fidelity_minimum() {
        let mut g = rng(11);
        for (count, dim, real) in [(3, 3, true), (3, 3, false), (4, 2, false), (2, 4, true)] {
            let pair = random_pair(count, dim, real, &mut g);
            let a = best_alignment(&pair).unwrap();
            let f = min_vec_fidelity(&pair.rho(), &pair.sigma(), 5).unwrap();
            assert!(a.value <= f.value + 1e-6, "bracket: {} > {}", a.value, f.value);
            assert!((a.value - f.value).abs() < 1e-3, "{} vs {}", a.value, f.value);
            assert!((a.achieved - a.value).abs() < 1e-6);
            assert!(a.unitary_defect < 1e-6);
        }
    }

    #[test]
    fn fidelity_identity_and_i_vs_j() {
        let s = crate::matlin::random::random_gram(3, 2, false, &mut rng(2));
        assert!((min_vec_fidelity(&s, &s, 0).unwrap().value - 1.0).abs() < 1e-7);
        let f = min_vec_fidelity(&HermMat::identity(2), &HermMat::ones(2), 0).unwrap();
        // F(diag(p), sqrt(p) sqrt(p)^T) = sqrt(Σ p_x²), smallest at p uniform.
        assert!((f.value - 0.5f64.sqrt()).abs() < 1e-6, "{}", f.value);
        let pair = VectorFamilyPair::from_grams(&HermMat::identity(2), &HermMat::ones(2)).unwrap();
        let a = best_alignment(&pair).unwrap();
        assert!((f.value - a.value).abs() < 1e-3, "{} vs {}", f.value, a.value);
    }

    #[test]
    fn trace_norm_form_matches_fidelity() {
        let mut g = rng(4);
        let pair = random_pair(4, 3, false, &mut g);
        let f = Factors {
            a: mat_sqrt(&pair.rho()).unwrap().into_matrix(),
            b: mat_sqrt(&pair.sigma()).unwrap().into_matrix(),
        };
        for _ in 0..5 {
            let p = random_simplex(4, &mut g);
            let u: Vec<f64> = p.iter().map(|x| x.sqrt()).collect();
            let tn = crate::matlin::general_trace_norm(&f.m(&p)).unwrap();
            let fid = masked_fidelity(&pair.rho(), &pair.sigma(), &u).unwrap();
            assert!((tn - fid).abs() < 1e-7, "{tn} vs {fid}");
        }
    }

    #[test]
    fn simplex_projection() {
        assert_eq!(project_simplex(&[0.2, 0.3, 0.5]), vec![0.2, 0.3, 0.5]);
        assert_eq!(project_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
        let p = project_simplex(&[0.5, 0.5, 0.5]);
        assert!(p.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn distribution_fidelity() {
        let v = vec![1.0, 2.0];
        let p = ClassicalDistribution::new(v.clone(), vec![0.5, 0.5]).unwrap();
        let q = ClassicalDistribution::new(v.clone(), vec![1.0, 0.0]).unwrap();
        let r = ClassicalDistribution::new(v.clone(), vec![0.0, 1.0]).unwrap();
        assert!((dist_fidelity(&p, &p).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(dist_fidelity(&q, &r).unwrap(), 0.0);
        assert!((dist_fidelity(&p, &q).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        let other = ClassicalDistribution::new(vec![1.0, 3.0], vec![0.5, 0.5]).unwrap();
        assert!(dist_fidelity(&p, &other).is_err());
        assert!(ClassicalDistribution::new(v, vec![0.6, 0.6]).is_err());
    }

    /// Two-point oracle: `q = (s, 1-s)`, scan `s` finely and keep feasible points.
    fn two_point_min(p: &ClassicalDistribution, delta: f64) -> f64 {
        let steps = 200_000;
        (0..=steps)
            .map(|i| i as f64 / steps as f64)
            .filter(|s| (p.probs[0] * s).sqrt() + (p.probs[1] * (1.0 - s)).sqrt() >= delta.sqrt())
            .map(|s| s * p.values[0] + (1.0 - s) * p.values[1])
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn expectation_under_fidelity() {
        let p = ClassicalDistribution::new(vec![1.0, 3.0], vec![0.5, 0.5]).unwrap();
        let r = min_expectation_under_fidelity(&p, 0.81).unwrap();
        assert!((r.closed - 1.215).abs() < 1e-12);
        assert!(r.check.passed);
        assert!((r.numerical - two_point_min(&p, 0.81)).abs() < 1e-4);

        let one = min_expectation_under_fidelity(&p, 1.0).unwrap();
        // At δ = 1 the feasible set is the single point ρ = uu*, so the
        // interior-point solve only reaches about the square root of its tolerance.
        assert!((one.numerical - 2.0).abs() < 1e-5, "{one:?}");
        assert!((one.closed - 1.5).abs() < 1e-12);

        let point = ClassicalDistribution::new(vec![2.5], vec![1.0]).unwrap();
        let r = min_expectation_under_fidelity(&point, 0.3).unwrap();
        assert!((r.numerical - 2.5).abs() < 1e-7 && (r.closed - 0.75).abs() < 1e-12);
        assert!(min_expectation_under_fidelity(&p, 0.0).is_err());
    }

    #[test]
    fn inverse_expectation() {
        let sb = SupportBounds::new(1.0, 3.0, 2.0).unwrap();
        assert!((inv_expectation_bound(&sb) - 2.0 / 3.0).abs() < 1e-15);
        assert!((inv_expectation_lp(&sb, 50).unwrap() - 2.0 / 3.0).abs() < 1e-8);
        let flat = SupportBounds::new(2.0, 2.0, 2.0).unwrap();
        assert!((inv_expectation_bound(&flat) - 0.5).abs() < 1e-15);
        assert!(SupportBounds::new(1.0, 3.0, 4.0).is_err());
    }

    #[test]
    fn product_bound_brute_force() {
        let sb = SupportBounds::new(1.0, 2.0, 1.5).unwrap();
        assert!(
            (product_expectation_bound(1.0, &SupportBounds::new(2.0, 2.0, 2.0).unwrap(), 3).unwrap() - 8.0).abs()
                < 1e-12
        );
        let delta = 0.7;
        let bound = product_expectation_bound(delta, &sb, 2).unwrap();
        let k1 = product_expectation_bound(delta, &sb, 1).unwrap();
        assert!((k1 - delta / inv_expectation_bound(&sb)).abs() < 1e-15);
        assert!((bound - k1 * k1).abs() < 1e-15);
        // p = (1/2, 1/2) on {1, 2}; product support {1, 2, 2, 4}.
        let p2 = [0.25; 4];
        let vals = [1.0, 2.0, 2.0, 4.0];
        let steps = 40;
        let mut best = f64::INFINITY;
        for i in 0..=steps {
            for j in 0..=(steps - i) {
                for k in 0..=(steps - i - j) {
                    let q = [i, j, k, steps - i - j - k].map(|x| x as f64 / steps as f64);
                    let fid: f64 = q.iter().zip(&p2).map(|(a, b)| (a * b).sqrt()).sum();
                    if fid >= delta {
                        best = best.min(q.iter().zip(&vals).map(|(a, b)| a * b).sum());
                    }
                }
            }
        }
        assert!(best >= bound - 1e-12, "{best} < {bound}");
    }

    #[test]
    fn sandwich_cases() {
        let same = VectorFamilyPair::real(vec![e(2, 0), e(2, 1)], vec![e(2, 0), e(2, 1)]).unwrap();
        let s = gamma2_error_sandwich(&same, 0).unwrap();
        assert!(s.lhs.abs() < 1e-6 && s.mid.abs() < 1e-6 && s.rhs < 1e-3);
        let anti = VectorFamilyPair::real(vec![e(2, 0), e(2, 0)], vec![e(2, 0), vec![-1.0, 0.0]]).unwrap();
        let s = gamma2_error_sandwich(&anti, 0).unwrap();
        assert!((s.lhs - 1.0).abs() < 1e-6 && (s.mid - 1.0).abs() < 1e-6 && (s.rhs - 1.0).abs() < 1e-6);
        assert!(s.holds(), "{:?}", s.checks);
        let mut g = rng(8);
        for _ in 0..3 {
            let pair = random_pair(4, 3, false, &mut g);
            let s = gamma2_error_sandwich(&pair, 1).unwrap();
            assert!(s.holds(), "{:?}", s.checks);
        }
    }
}
