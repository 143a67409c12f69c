//! Dense hermitian linear algebra: entrywise and tensor products, spectral
//! decompositions, norms, square roots and fidelity.
//!
//! Everything here is a pure function of its inputs. Hermitian matrices are
//! complex; the real-symmetric case is detected and routed through real
//! arithmetic.

mod cmatrix;
mod herm;
pub mod random;
pub mod real;
mod spectral;

pub use cmatrix::{vdot, vnorm, CMatrix, C64};
pub use herm::HermMat;
pub use spectral::{
    general_op_norm, general_trace_norm, mat_sqrt, psd_check, spectral, state_fidelity, svd, unnormalized_fidelity,
    PsdCheck, SpectralDecomp, SQRT_CLAMP,
};

/// Real vector lifted to complex.
pub fn complexify(v: &[f64]) -> Vec<C64> {
    v.iter().map(|&x| C64::new(x, 0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::random::*;
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn hadamard_identity_masks_off_diagonal() {
        let i = HermMat::identity(4);
        let j = HermMat::ones(4);
        assert_eq!(i.hadamard(&j).unwrap(), i);
    }

    #[test]
    fn hadamard_with_ones_is_identity_map() {
        let mut r = rng(1);
        let a = random_hermitian(5, false, &mut r);
        let out = a.hadamard(&HermMat::ones(5)).unwrap();
        assert!(out.max_abs_diff(&a).unwrap() == 0.0);
    }

    #[test]
    fn hadamard_of_psd_pair_is_psd() {
        let mut r = rng(2);
        let a = random_psd(4, 4, false, &mut r);
        let b = random_psd(4, 2, false, &mut r);
        let check = psd_check(&a.hadamard(&b).unwrap(), 1e-10).unwrap();
        assert!(check.is_psd, "min eig {}", check.min_eigenvalue);
    }

    #[test]
    fn hadamard_dimension_mismatch() {
        assert!(HermMat::identity(2).hadamard(&HermMat::identity(3)).is_err());
    }

    #[test]
    fn kron_examples() {
        assert_eq!(HermMat::identity(2).kron(&HermMat::identity(2)), HermMat::identity(4));
        let out = HermMat::diag(&[1.0, 2.0]).kron(&HermMat::diag(&[3.0, 4.0]));
        assert_eq!(out, HermMat::diag(&[3.0, 4.0, 6.0, 8.0]));
    }

    #[test]
    fn kron_mixed_product() {
        let mut r = rng(3);
        let (a, b, c, d) = (
            random_hermitian(3, false, &mut r),
            random_hermitian(3, false, &mut r),
            random_hermitian(3, false, &mut r),
            random_hermitian(3, false, &mut r),
        );
        let lhs = a.kron(&b).hadamard(&c.kron(&d)).unwrap();
        let rhs = a.hadamard(&c).unwrap().kron(&b.hadamard(&d).unwrap());
        // entrywise reference
        for x in 0..9 {
            for y in 0..9 {
                let direct = a.get(x / 3, y / 3) * b.get(x % 3, y % 3) * c.get(x / 3, y / 3) * d.get(x % 3, y % 3);
                assert!((lhs.get(x, y) - direct).norm() < 1e-12);
            }
        }
        assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-10);
    }

    #[test]
    fn spectral_examples() {
        let sd = spectral(&HermMat::diag(&[1.0, -2.0])).unwrap();
        assert!(close(sd.op_norm(), 2.0, 1e-14));
        assert!(close(sd.trace_norm(), 3.0, 1e-14));
        let sd = spectral(&HermMat::ones(4)).unwrap();
        assert!(close(sd.op_norm(), 4.0, 1e-12));
        assert!(close(sd.trace_norm(), 4.0, 1e-12));
        let mut r = rng(4);
        let a = random_hermitian(5, false, &mut r);
        let sd = spectral(&a).unwrap();
        assert!(sd.trace_norm() >= sd.op_norm());
        assert!(sd.trace_norm() <= 5.0 * sd.op_norm());
    }

    #[test]
    fn complex_spectral_reconstructs() {
        let mut r = rng(5);
        for n in [1, 2, 3, 6, 9] {
            let a = random_hermitian(n, false, &mut r);
            let sd = spectral(&a).unwrap();
            let err = sd.reconstruct().max_abs_diff(&a).unwrap();
            assert!(err <= 1e-9 * (1.0 + sd.op_norm()), "n={n} err={err}");
            let u = &sd.eigenvectors;
            let gram = u.adjoint().matmul(u).unwrap();
            assert!(gram.sub(&CMatrix::identity(n)).unwrap().max_abs() < 1e-10);
            assert!(sd.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn eigenvector_phase_convention() {
        let mut r = rng(6);
        let a = random_hermitian(4, false, &mut r);
        let sd = spectral(&a).unwrap();
        for k in 0..4 {
            let v = sd.vector(k);
            let mut best = 0;
            for (i, x) in v.iter().enumerate() {
                if x.norm() > v[best].norm() * (1.0 + 1e-12) {
                    best = i;
                }
            }
            assert!(v[best].im.abs() < 1e-12 && v[best].re > 0.0);
        }
    }

    #[test]
    fn psd_check_examples() {
        assert!(psd_check(&HermMat::identity(3), 0.0).unwrap().is_psd);
        assert!(!psd_check(&HermMat::diag(&[1.0, -1e-6]), 1e-9).unwrap().is_psd);
        let mut r = rng(7);
        let g = random_psd(4, 4, true, &mut r);
        let delta = HermMat::from_real_fn(4, |x, y| if (x & 1) == (y & 1) { 1.0 } else { 0.0 }).unwrap();
        assert!(psd_check(&g.hadamard(&delta).unwrap(), 1e-10).unwrap().is_psd);
    }

    #[test]
    fn mat_sqrt_examples() {
        assert_eq!(
            mat_sqrt(&HermMat::identity(3))
                .unwrap()
                .max_abs_diff(&HermMat::identity(3))
                .unwrap(),
            0.0
        );
        let s = mat_sqrt(&HermMat::diag(&[4.0, 9.0])).unwrap();
        assert!(s.max_abs_diff(&HermMat::diag(&[2.0, 3.0])).unwrap() < 1e-14);
        let mut r = rng(8);
        let a = random_psd(4, 4, false, &mut r);
        let s = mat_sqrt(&a).unwrap();
        let sq = HermMat::hermitize(s.matrix().matmul(s.matrix()).unwrap());
        assert!(sq.max_abs_diff(&a).unwrap() <= 1e-8);
        assert!(psd_check(&s, 1e-12).unwrap().is_psd);
    }

    #[test]
    fn mat_sqrt_clamps_roundoff_and_rejects_negative() {
        assert!(mat_sqrt(&HermMat::diag(&[1.0, -1e-10])).is_ok());
        assert!(matches!(
            mat_sqrt(&HermMat::diag(&[1.0, -1e-6])),
            Err(crate::Error::Domain(_))
        ));
    }

    #[test]
    fn fidelity_examples() {
        let mut r = rng(9);
        let rho = random_density(3, 3, false, &mut r);
        assert!(close(state_fidelity(&rho, &rho).unwrap(), 1.0, 1e-8));
        let e0 = HermMat::diag(&[1.0, 0.0]);
        let e1 = HermMat::diag(&[0.0, 1.0]);
        assert!(close(state_fidelity(&e0, &e1).unwrap(), 0.0, 1e-12));
        let mixed = HermMat::identity(2).scale(0.5);
        let plus = HermMat::outer(&complexify(&[std::f64::consts::FRAC_1_SQRT_2; 2]));
        assert!(close(state_fidelity(&mixed, &plus).unwrap(), 0.5f64.sqrt(), 1e-10));
        assert!(state_fidelity(&HermMat::identity(2), &plus).is_err());
    }

    #[test]
    fn svd_and_trace_norm_of_rectangular() {
        let m = CMatrix::from_real_fn(2, 3, |r, c| if r == c { (r + 1) as f64 } else { 0.0 });
        assert!(close(general_trace_norm(&m).unwrap(), 3.0, 1e-12));
        let (vals, left, right) = svd(&m).unwrap();
        assert_eq!(vals.len(), 2);
        assert!(close(vals[0], 2.0, 1e-12));
        let back = left
            .matmul(&CMatrix::from_real_fn(2, 2, |r, c| if r == c { vals[r] } else { 0.0 }))
            .unwrap()
            .matmul(&right.adjoint())
            .unwrap();
        assert!(back.sub(&m).unwrap().max_abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn hadamard_psd_closure(seed in 0u64..10_000, n in 1usize..=8, ra in 1usize..=8, rb in 1usize..=8) {
            let mut r = rng(seed);
            let a = random_psd(n, ra, seed % 2 == 0, &mut r);
            let b = random_psd(n, rb, seed % 3 == 0, &mut r);
            let min = psd_check(&a.hadamard(&b).unwrap(), 0.0).unwrap().min_eigenvalue;
            prop_assert!(min >= -1e-9, "min eig {}", min);
        }

        #[test]
        fn fidelity_is_symmetric_and_bounded(seed in 0u64..10_000, n in 1usize..=5) {
            let mut r = rng(seed);
            let a = random_density(n, 1 + (seed as usize) % n, false, &mut r);
            let b = random_density(n, n, false, &mut r);
            let f1 = state_fidelity(&a, &b).unwrap();
            let f2 = state_fidelity(&b, &a).unwrap();
            prop_assert!((f1 - f2).abs() <= 1e-8);
            prop_assert!((-1e-12..=1.0 + 1e-8).contains(&f1));
        }

        #[test]
        fn fidelity_mixing_with_ones(seed in 0u64..10_000, n in 2usize..=4) {
            // F((J+ρ)/2 ∘ uu*, (J+σ_f)/2 ∘ uu*) ≥ 1/2 + F(ρ∘uu*, σ_f∘uu*)/2
            let mut r = rng(seed);
            let rho = random_gram(n, n, false, &mut r);
            let signs: Vec<f64> = (0..n).map(|i| if (seed >> i) & 1 == 1 { -1.0 } else { 1.0 }).collect();
            let sigma_f = HermMat::from_real_fn(n, |x, y| signs[x] * signs[y]).unwrap();
            let u = random_unit_vector(n, true, &mut r);
            let j = HermMat::ones(n);
            let half = |m: &HermMat| j.add(m).unwrap().scale(0.5);
            let lhs = state_fidelity(&half(&rho).hadamard_outer(&u), &half(&sigma_f).hadamard_outer(&u)).unwrap();
            let inner = state_fidelity(&rho.hadamard_outer(&u), &sigma_f.hadamard_outer(&u)).unwrap();
            prop_assert!(lhs >= 0.5 + 0.5 * inner - 1e-8, "{} < {}", lhs, 0.5 + 0.5 * inner);
        }
    }
}
