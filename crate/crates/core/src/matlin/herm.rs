use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matlin::cmatrix::{CMatrix, C64, ONE, ZERO};
use crate::matlin::real::RMat;

/// Square hermitian matrix. Construction checks symmetry to 1e-12 (relative
/// to the largest entry) and then stores the exactly symmetrized matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CMatrix", into = "CMatrix")]
pub struct HermMat(CMatrix);

impl TryFrom<CMatrix> for HermMat {
    type Error = Error;
    fn try_from(m: CMatrix) -> Result<Self> {
        HermMat::new(m)
    }
}

impl From<HermMat> for CMatrix {
    fn from(h: HermMat) -> CMatrix {
        h.0
    }
}

impl HermMat {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() || m.rows() == 0 {
            return Err(Error::dims(format!("{}x{}", m.rows(), m.cols()), "nonempty square"));
        }
        let asym = m.asymmetry();
        if asym > 1e-12 * m.max_abs().max(1.0) {
            return Err(Error::NotHermitian { asymmetry: asym });
        }
        Ok(Self::hermitize(m))
    }

    /// Projects a square matrix onto its hermitian part without checking.
    pub fn hermitize(m: CMatrix) -> Self {
        let n = m.rows();
        let mut out = m;
        for r in 0..n {
            out[(r, r)] = C64::new(out[(r, r)].re, 0.0);
            for c in (r + 1)..n {
                let avg = (out[(r, c)] + out[(c, r)].conj()) * 0.5;
                out[(r, c)] = avg;
                out[(c, r)] = avg.conj();
            }
        }
        HermMat(out)
    }

    pub fn from_real_fn(n: usize, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        Self::new(CMatrix::from_real_fn(n, n, f))
    }

    pub fn from_rmat(m: &RMat) -> Result<Self> {
        Self::new(CMatrix::from_rmat(m))
    }

    pub fn identity(n: usize) -> Self {
        HermMat(CMatrix::identity(n))
    }

    /// The all-ones matrix J.
    pub fn ones(n: usize) -> Self {
        HermMat(CMatrix::from_fn(n, n, |_, _| ONE))
    }

    pub fn zeros(n: usize) -> Self {
        HermMat(CMatrix::zeros(n, n))
    }

    pub fn diag(d: &[f64]) -> Self {
        HermMat(CMatrix::from_fn(d.len(), d.len(), |r, c| {
            if r == c {
                C64::new(d[r], 0.0)
            } else {
                ZERO
            }
        }))
    }

    /// Rank-one `v v*`.
    pub fn outer(v: &[C64]) -> Self {
        HermMat(CMatrix::from_fn(v.len(), v.len(), |r, c| v[r] * v[c].conj()))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.0[(r, c)]
    }

    pub fn re(&self, r: usize, c: usize) -> f64 {
        self.0[(r, c)].re
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.0.max_imag() <= tol
    }

    pub fn real_part(&self) -> RMat {
        self.0.re()
    }

    fn check_dim(&self, other: &HermMat) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::dims(self.dim(), other.dim()));
        }
        Ok(())
    }

    /// Entrywise (Schur) product.
    pub fn hadamard(&self, other: &HermMat) -> Result<HermMat> {
        self.check_dim(other)?;
        Ok(HermMat(self.0.hadamard(&other.0)?))
    }

    pub fn kron(&self, other: &HermMat) -> HermMat {
        HermMat(self.0.kron(&other.0))
    }

    /// k-fold tensor power.
    pub fn kron_pow(&self, k: usize) -> HermMat {
        let mut out = HermMat::ones(1);
        for _ in 0..k {
            out = out.kron(self);
        }
        out
    }

    pub fn add(&self, other: &HermMat) -> Result<HermMat> {
        self.check_dim(other)?;
        Ok(HermMat(self.0.add(&other.0)?))
    }

    pub fn sub(&self, other: &HermMat) -> Result<HermMat> {
        self.check_dim(other)?;
        Ok(HermMat(self.0.sub(&other.0)?))
    }

    pub fn scale(&self, alpha: f64) -> HermMat {
        HermMat(self.0.scale(alpha))
    }

    /// `self + alpha * I`
    pub fn shift(&self, alpha: f64) -> HermMat {
        let mut m = self.0.clone();
        for i in 0..self.dim() {
            m[(i, i)] += alpha;
        }
        HermMat(m)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// `Tr(self * other)`, real for hermitian arguments.
    pub fn trace_product(&self, other: &HermMat) -> Result<f64> {
        self.check_dim(other)?;
        let n = self.dim();
        let mut s = ZERO;
        for r in 0..n {
            for c in 0..n {
                s += self.0[(r, c)] * other.0[(c, r)];
            }
        }
        Ok(s.re)
    }

    /// `v* self v`
    pub fn quad_form(&self, v: &[C64]) -> f64 {
        let n = self.dim();
        let mut s = ZERO;
        for r in 0..n {
            let mut row = ZERO;
            for c in 0..n {
                row += self.0[(r, c)] * v[c];
            }
            s += v[r].conj() * row;
        }
        s.re
    }

    pub fn max_abs(&self) -> f64 {
        self.0.max_abs()
    }

    /// Largest entrywise difference.
    pub fn max_abs_diff(&self, other: &HermMat) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    /// `self ∘ u u*`
    pub fn hadamard_outer(&self, u: &[C64]) -> HermMat {
        HermMat(CMatrix::from_fn(self.dim(), self.dim(), |r, c| {
            u[r] * self.0[(r, c)] * u[c].conj()
        }))
    }
}
