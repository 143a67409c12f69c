use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matlin::cmatrix::{CMatrix, C64, ZERO};
use crate::matlin::herm::HermMat;
use crate::matlin::real::symmetric_eigen;

const MAX_SWEEPS: usize = 80;

/// Eigen-decomposition of a hermitian matrix, eigenvalues descending.
///
/// Each eigenvector is normalized so its first entry of largest modulus is
/// real and positive.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralDecomp {
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors as columns.
    pub eigenvectors: CMatrix,
}

impl SpectralDecomp {
    pub fn op_norm(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn trace_norm(&self) -> f64 {
        self.eigenvalues.iter().map(|v| v.abs()).sum()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    pub fn vector(&self, i: usize) -> Vec<C64> {
        self.eigenvectors.col(i)
    }

    /// `U f(Λ) U*`
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> HermMat {
        let n = self.eigenvalues.len();
        let u = &self.eigenvectors;
        let fl: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let m = CMatrix::from_fn(n, n, |r, c| {
            let mut s = ZERO;
            for k in 0..n {
                if fl[k] != 0.0 {
                    s += u[(r, k)] * fl[k] * u[(c, k)].conj();
                }
            }
            s
        });
        HermMat::hermitize(m)
    }

    pub fn reconstruct(&self) -> HermMat {
        self.apply(|l| l)
    }
}

/// Cyclic Jacobi eigensolver for hermitian matrices. Real input takes the
/// real-arithmetic path.
pub fn spectral(a: &HermMat) -> Result<SpectralDecomp> {
    if a.is_real(0.0) {
        let (vals, vecs) = symmetric_eigen(&a.real_part())?;
        return Ok(SpectralDecomp {
            eigenvalues: vals,
            eigenvectors: CMatrix::from_rmat(&vecs),
        });
    }
    jacobi_complex(a)
}

fn jacobi_complex(a: &HermMat) -> Result<SpectralDecomp> {
    let n = a.dim();
    let mut m = a.matrix().clone();
    let mut v = CMatrix::identity(n);
    let fro = m.frobenius();
    let off_norm = |m: &CMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };
    let mut off = off_norm(&m);
    let mut converged = n <= 1 || fro == 0.0;
    let mut sweeps = 0;
    while !converged && sweeps < MAX_SWEEPS {
        if off <= 1e-15 * fro {
            converged = true;
            break;
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let g = apq.norm();
                if g < 1e-300 {
                    continue;
                }
                let e = apq / g;
                let ebar = e.conj();
                let theta = (m[(q, q)].re - m[(p, p)].re) / (2.0 * g);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // columns: U[:,p] = (c, -s ē), U[:,q] = (s, c ē) on (p, q)
                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = akp * c - akq * ebar * s;
                    m[(k, q)] = akp * s + akq * ebar * c;
                }
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = apk * c - aqk * e * s;
                    m[(q, k)] = apk * s + aqk * e * c;
                }
                m[(p, q)] = ZERO;
                m[(q, p)] = ZERO;
                m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - vkq * ebar * s;
                    v[(k, q)] = vkp * s + vkq * ebar * c;
                }
            }
        }
        let next = off_norm(&m);
        if next >= off && next <= 1e-12 * fro {
            converged = true;
        }
        off = next;
    }
    if !converged && off > 1e-12 * fro {
        return Err(Error::NonConvergence { sweeps, off });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].re.total_cmp(&m[(i, i)].re).then(i.cmp(&j)));
    let eigenvalues = order.iter().map(|&i| m[(i, i)].re).collect();
    let mut vecs = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    for c in 0..n {
        let mut best = 0;
        for r in 0..n {
            if vecs[(r, c)].norm() > vecs[(best, c)].norm() * (1.0 + 1e-12) {
                best = r;
            }
        }
        let lead = vecs[(best, c)];
        if lead.norm() > 0.0 {
            let phase = lead.conj() / lead.norm();
            for r in 0..n {
                vecs[(r, c)] *= phase;
            }
        }
    }
    Ok(SpectralDecomp {
        eigenvalues,
        eigenvectors: vecs,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsdCheck {
    pub is_psd: bool,
    pub min_eigenvalue: f64,
}

/// Positive semidefiniteness up to `tol`: true iff the smallest eigenvalue is ≥ −tol.
pub fn psd_check(a: &HermMat, tol: f64) -> Result<PsdCheck> {
    let min = spectral(a)?.min_eigenvalue();
    Ok(PsdCheck {
        is_psd: min >= -tol,
        min_eigenvalue: min,
    })
}

/// Eigenvalues in [-1e-9, 0) are treated as round-off and clamped.
pub const SQRT_CLAMP: f64 = 1e-9;

/// Principal square root of a PSD matrix.
pub fn mat_sqrt(a: &HermMat) -> Result<HermMat> {
    let sd = spectral(a)?;
    let min = sd.min_eigenvalue();
    if min < -SQRT_CLAMP {
        return Err(Error::Domain(format!(
            "matrix square root of a matrix with eigenvalue {min:.3e}"
        )));
    }
    Ok(sd.apply(|l| l.max(0.0).sqrt()))
}

/// Fidelity `Tr sqrt(sqrt(ρ) σ sqrt(ρ))` of two density matrices.
pub fn state_fidelity(rho: &HermMat, sigma: &HermMat) -> Result<f64> {
    for (name, m) in [("rho", rho), ("sigma", sigma)] {
        if (m.trace() - 1.0).abs() > 1e-8 {
            return Err(Error::Domain(format!("{name} has trace {}", m.trace())));
        }
    }
    // The square root amplifies round-off near rank-deficient inputs.
    Ok(unnormalized_fidelity(rho, sigma)?.min(1.0))
}

/// Fidelity without the unit-trace precondition.
pub fn unnormalized_fidelity(rho: &HermMat, sigma: &HermMat) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::dims(rho.dim(), sigma.dim()));
    }
    let sr = mat_sqrt(rho)?;
    let inner = sr.matrix().matmul(sigma.matrix())?.matmul(sr.matrix())?;
    let sd = spectral(&HermMat::hermitize(inner))?;
    Ok(sd.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum())
}

/// Singular value decomposition of a rectangular matrix through the
/// hermitian dilation `[[0, M], [M*, 0]]`. Returns the strictly positive
/// singular values with their left/right vectors (as columns).
pub fn svd(m: &CMatrix) -> Result<(Vec<f64>, CMatrix, CMatrix)> {
    let (r, c) = (m.rows(), m.cols());
    let n = r + c;
    let dil = CMatrix::from_fn(n, n, |i, j| {
        if i < r && j >= r {
            m[(i, j - r)]
        } else if i >= r && j < r {
            m[(j, i - r)].conj()
        } else {
            ZERO
        }
    });
    let sd = spectral(&HermMat::hermitize(dil))?;
    let scale = sd.op_norm().max(f64::MIN_POSITIVE);
    let keep: Vec<usize> = (0..n)
        .filter(|&k| sd.eigenvalues[k] > 1e-13 * scale)
        .take(r.min(c))
        .collect();
    let sqrt2 = std::f64::consts::SQRT_2;
    let vals = keep.iter().map(|&k| sd.eigenvalues[k]).collect();
    let left = CMatrix::from_fn(r, keep.len(), |i, j| sd.eigenvectors[(i, keep[j])] * sqrt2);
    let right = CMatrix::from_fn(c, keep.len(), |i, j| sd.eigenvectors[(r + i, keep[j])] * sqrt2);
    Ok((vals, left, right))
}

/// Sum of singular values of a rectangular matrix.
pub fn general_trace_norm(m: &CMatrix) -> Result<f64> {
    let (r, c) = (m.rows(), m.cols());
    let n = r + c;
    let dil = CMatrix::from_fn(n, n, |i, j| {
        if i < r && j >= r {
            m[(i, j - r)]
        } else if i >= r && j < r {
            m[(j, i - r)].conj()
        } else {
            ZERO
        }
    });
    Ok(0.5 * spectral(&HermMat::hermitize(dil))?.trace_norm())
}

/// Largest singular value of a rectangular matrix.
pub fn general_op_norm(m: &CMatrix) -> Result<f64> {
    let (vals, _, _) = svd(m)?;
    Ok(vals.first().copied().unwrap_or(0.0))
}
