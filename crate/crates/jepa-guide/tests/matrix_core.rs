//! Factorization contracts: SVD against an independent one-sided Jacobi
//! reference, QR span preservation, and seeded Gaussian sampling statistics.

mod common;

use common::{jacobi_singular_values, matrix_with_spectrum, orthonormality_error};
use jepa_guide::matrix::{
    gaussian_matrix, numerical_rank, qr_orthonormalize, svd, tolerances, Matrix,
};
use proptest::prelude::*;

#[test]
fn svd_matches_jacobi_reference_on_seeded_8x5() {
    let a = gaussian_matrix(8, 5, 42).unwrap();
    let result = svd(&a).unwrap();
    let reference = jacobi_singular_values(&a);
    assert_eq!(result.s.len(), 5);
    for (got, want) in result.s.iter().zip(&reference) {
        assert!(
            (got - want).abs() <= 1e-10,
            "sigma mismatch: {got} vs jacobi {want}"
        );
    }
}

#[test]
fn svd_factors_satisfy_contract() {
    for seed in [1_u64, 2, 3] {
        for (r, c) in [(8, 5), (5, 8), (6, 6), (1, 1), (9, 2)] {
            let a = gaussian_matrix(r, c, seed).unwrap();
            let d = svd(&a).unwrap();
            let m = r.min(c);
            assert_eq!(d.u.rows(), r);
            assert_eq!(d.u.cols(), m);
            assert_eq!(d.vt.rows(), m);
            assert_eq!(d.vt.cols(), c);
            assert!(orthonormality_error(&d.u) <= tolerances::ORTHONORMALITY);
            assert!(orthonormality_error(&d.vt.transpose()) <= tolerances::ORTHONORMALITY);
            for w in d.s.windows(2) {
                assert!(w[0] >= w[1], "singular values must be descending");
            }
            assert!(d.s.iter().all(|&v| v >= 0.0));
            let err = d.reconstruct().unwrap().sub(&a).unwrap().frobenius_norm();
            assert!(err <= tolerances::RECONSTRUCTION_REL * a.frobenius_norm());
        }
    }
}

#[test]
fn svd_of_diagonal_is_exact() {
    let a = Matrix::diagonal(&[4.0, 1.0, 9.0]).unwrap();
    let d = svd(&a).unwrap();
    assert!((d.s[0] - 9.0).abs() < 1e-12);
    assert!((d.s[1] - 4.0).abs() < 1e-12);
    assert!((d.s[2] - 1.0).abs() < 1e-12);
}

#[test]
fn svd_nonconvergence_error_names_the_cap() {
    let msg = jepa_guide::Error::SvdNoConvergence {
        max_iter: tolerances::SVD_MAX_ITER,
    }
    .to_string();
    assert!(msg.contains("4000"), "error must name the iteration cap: {msg}");
}

#[test]
fn qr_preserves_column_span() {
    for seed in 0..5_u64 {
        let a = gaussian_matrix(10, 4, seed).unwrap();
        let q = qr_orthonormalize(&a).unwrap();
        assert_eq!((q.rows(), q.cols()), (10, 4));
        assert!(orthonormality_error(&q) <= tolerances::ORTHONORMALITY);
        // Projecting a onto span(Q) must not lose anything.
        let proj = q.mul(&q.transpose().mul(&a).unwrap()).unwrap();
        let residual = proj.sub(&a).unwrap().frobenius_norm();
        assert!(residual <= 1e-8 * a.frobenius_norm());
    }
}

#[test]
fn gaussian_matrix_moments_are_standard_normal() {
    let a = gaussian_matrix(100, 100, 2024).unwrap();
    let n = (a.rows() * a.cols()) as f64;
    let mean: f64 = a.data().iter().sum::<f64>() / n;
    let var: f64 = a.data().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    assert!(mean.abs() <= 0.05, "sample mean {mean} too far from 0");
    assert!((var - 1.0).abs() <= 0.05, "sample variance {var} too far from 1");
}

#[test]
fn constructed_spectrum_round_trips() {
    let sigmas = [10.0, 5.0, 1.0, 0.5, 0.1];
    let a = matrix_with_spectrum(9, 7, &sigmas, 11);
    let d = svd(&a).unwrap();
    for (got, want) in d.s.iter().zip(&sigmas) {
        assert!((got - want).abs() <= 1e-9, "{got} vs {want}");
    }
    assert_eq!(numerical_rank(&d.s), 5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Frobenius mass equals spectral mass.
    #[test]
    fn frobenius_norm_squared_is_sigma_sum(rows in 1usize..7, cols in 1usize..7, seed in 0u64..500) {
        let a = gaussian_matrix(rows, cols, seed).unwrap();
        let d = svd(&a).unwrap();
        let fro2 = a.frobenius_norm().powi(2);
        let sig2: f64 = d.s.iter().map(|v| v * v).sum();
        prop_assert!((fro2 - sig2).abs() <= 1e-8 * fro2.max(1.0));
    }

    // Compressing through any orthonormal Q can only shrink singular values.
    #[test]
    fn projection_never_inflates_spectrum(cols in 1usize..6, l in 1usize..6, seed in 0u64..500) {
        let rows = 8usize;
        let l = l.min(rows);
        let a = gaussian_matrix(rows, cols, seed).unwrap();
        let q = qr_orthonormalize(&gaussian_matrix(rows, l, seed ^ 0xABCD).unwrap()).unwrap();
        let compressed = q.transpose().mul(&a).unwrap();
        let s_full = svd(&a).unwrap().s;
        let s_comp = svd(&compressed).unwrap().s;
        for (i, v) in s_comp.iter().enumerate() {
            if i < s_full.len() {
                prop_assert!(v <= &(s_full[i] + 1e-8), "sigma_{i} grew: {v} > {}", s_full[i]);
            }
        }
    }

    // Identical seeds give identical bytes.
    #[test]
    fn gaussian_matrix_determinism(rows in 1usize..6, cols in 1usize..6, seed in 0u64..1000) {
        let a = gaussian_matrix(rows, cols, seed).unwrap();
        let b = gaussian_matrix(rows, cols, seed).unwrap();
        prop_assert_eq!(a.to_csv(), b.to_csv());
    }
}
