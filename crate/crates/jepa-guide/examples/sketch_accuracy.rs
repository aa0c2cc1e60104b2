//! How oversampling and power iterations sharpen the randomized sketch.
//!
//! The target matrix is built with a known spectrum, so the recovery error
//! of each (p, q) setting is measured against ground truth rather than
//! against another factorization.

use jepa_guide::matrix::{gaussian_matrix, qr_orthonormalize, Matrix};
use jepa_guide::rsvd::{rsvd, RsvdConfig};

/// Dense 16 x 10 matrix with the given singular values (zero-padded).
fn with_spectrum(sigmas: &[f64], seed: u64) -> Matrix {
    let (rows, cols) = (16, 10);
    let u = qr_orthonormalize(&gaussian_matrix(rows, cols.min(rows), seed).unwrap()).unwrap();
    let v = qr_orthonormalize(&gaussian_matrix(cols, cols, seed + 1).unwrap()).unwrap();
    let mut s = vec![0.0; cols];
    s[..sigmas.len()].copy_from_slice(sigmas);
    let sv = Matrix::from_fn(cols, cols, |i, j| if i == j { s[i] } else { 0.0 }).unwrap();
    u.mul(&sv).unwrap().mul(&v.transpose()).unwrap()
}

fn main() -> jepa_guide::Result<()> {
    let truth = [5.0, 3.0, 1.0, 0.8, 0.5, 0.3, 0.2, 0.1];
    let a = with_spectrum(&truth, 3);
    let k = 2;

    println!("target spectrum: {truth:?}");
    println!("recovering the top {k} values, 10 sketch seeds each\n");
    println!("  p  q   worst relative error");
    for p in [0usize, 2] {
        for q in [0usize, 1, 2] {
            let cfg = RsvdConfig { k, p, q };
            let mut worst: f64 = 0.0;
            for seed in 0..10 {
                let out = rsvd(&a, &cfg, 100 + seed)?;
                for (got, want) in out.top_k_sigmas.iter().zip(&truth) {
                    worst = worst.max((got - want).abs() / want);
                }
            }
            println!("  {p}  {q}   {worst:.2e}");
        }
    }
    println!("\nA modest gap (sigma_3/sigma_2 = 0.33) already takes (p, q) = (2, 2) below 1e-5.");
    Ok(())
}
