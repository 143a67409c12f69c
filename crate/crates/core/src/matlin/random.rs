//! Seeded random instances for tests, examples and the verification suite.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::matlin::cmatrix::{vnorm, CMatrix, C64};
use crate::matlin::herm::HermMat;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(rng: &mut impl Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn gaussian_complex(rng: &mut impl Rng) -> C64 {
    C64::new(normal(rng), normal(rng)) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix(rows: usize, cols: usize, real: bool, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        if real {
            C64::new(normal(rng), 0.0)
        } else {
            gaussian_complex(rng)
        }
    })
}

pub fn random_hermitian(n: usize, real: bool, rng: &mut impl Rng) -> HermMat {
    let g = gaussian_matrix(n, n, real, rng);
    HermMat::hermitize(g.add(&g.adjoint()).unwrap().scale(0.5))
}

/// `G G*` for a Gaussian `n × rank` matrix `G`.
pub fn random_psd(n: usize, rank: usize, real: bool, rng: &mut impl Rng) -> HermMat {
    let g = gaussian_matrix(n, rank, real, rng);
    HermMat::hermitize(g.matmul(&g.adjoint()).unwrap())
}

pub fn random_density(n: usize, rank: usize, real: bool, rng: &mut impl Rng) -> HermMat {
    let p = random_psd(n, rank, real, rng);
    let t = p.trace();
    p.scale(1.0 / t)
}

pub fn random_unit_vector(n: usize, real: bool, rng: &mut impl Rng) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..n)
            .map(|_| {
                if real {
                    C64::new(normal(rng), 0.0)
                } else {
                    gaussian_complex(rng)
                }
            })
            .collect();
        let nv = vnorm(&v);
        if nv > 1e-8 {
            return v.into_iter().map(|x| x / nv).collect();
        }
    }
}

/// Random probability vector (normalized exponentials).
pub fn random_simplex(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -rng.gen_range(f64::MIN_POSITIVE..1.0).ln()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Gram matrix of a random family of `count` unit vectors in dimension `dim`.
pub fn random_gram(count: usize, dim: usize, real: bool, rng: &mut impl Rng) -> HermMat {
    let vs: Vec<Vec<C64>> = (0..count).map(|_| random_unit_vector(dim, real, rng)).collect();
    HermMat::hermitize(CMatrix::from_fn(count, count, |r, c| {
        crate::matlin::cmatrix::vdot(&vs[r], &vs[c])
    }))
}
