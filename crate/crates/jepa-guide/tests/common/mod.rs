//! Shared test oracles and fixtures.
//!
//! Everything here is deliberately independent of the production factorization
//! path: the SVD reference is a hand-rolled one-sided Jacobi, and the
//! statistical oracles are plain double loops.

#![allow(dead_code)]

use jepa_guide::matrix::{gaussian_matrix, qr_orthonormalize, Matrix};

/// Singular values by one-sided Jacobi (Hestenes) rotations, descending.
///
/// Works on columns only, so it shares no code with the implicit-shift SVD in
/// the library. Accurate to near machine precision for small dense matrices.
pub fn jacobi_singular_values(a: &Matrix) -> Vec<f64> {
    // One-sided Jacobi orthogonalizes columns; run on the tall orientation.
    let work = if a.rows() >= a.cols() { a.clone() } else { a.transpose() };
    let (m, n) = (work.rows(), work.cols());
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| work.col(j)).collect();

    let max_sweeps = 60;
    let tol = 1e-15;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let aii: f64 = cols[i].iter().map(|v| v * v).sum();
                let ajj: f64 = cols[j].iter().map(|v| v * v).sum();
                let aij: f64 = cols[i].iter().zip(&cols[j]).map(|(x, y)| x * y).sum();
                if aij.abs() <= tol * (aii * ajj).sqrt() || aii == 0.0 || ajj == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (ajj - aii) / (2.0 * aij);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..m {
                    let vi = cols[i][r];
                    let vj = cols[j][r];
                    cols[i][r] = c * vi - s * vj;
                    cols[j][r] = s * vi + c * vj;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sigmas: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    sigmas.sort_by(|a, b| b.total_cmp(a));
    sigmas
}

/// Matrix with a prescribed singular spectrum: `U diag(sigmas) Vᵀ` with seeded
/// random orthonormal factors. `sigmas` must be descending and non-negative.
pub fn matrix_with_spectrum(rows: usize, cols: usize, sigmas: &[f64], seed: u64) -> Matrix {
    let m = sigmas.len();
    assert!(m <= rows.min(cols), "spectrum longer than min dimension");
    let u = qr_orthonormalize(&gaussian_matrix(rows, m, seed).unwrap()).unwrap();
    let v = qr_orthonormalize(&gaussian_matrix(cols, m, seed.wrapping_add(0x9E37)).unwrap()).unwrap();
    let scaled = Matrix::from_fn(m, cols, |i, j| sigmas[i] * v.get(j, i)).unwrap();
    u.mul(&scaled).unwrap()
}

/// Max absolute deviation of `QᵀQ` from the identity.
pub fn orthonormality_error(q: &Matrix) -> f64 {
    let gram = q.transpose().mul(q).unwrap();
    let mut worst = 0.0_f64;
    for i in 0..gram.rows() {
        for j in 0..gram.cols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram.get(i, j) - target).abs());
        }
    }
    worst
}

/// Central finite-difference gradient of a scalar field.
pub fn fd_gradient(f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    for i in 0..x.len() {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        g[i] = (f(&xp) - f(&xm)) / (2.0 * h);
    }
    g
}

/// Mean and per-coordinate variance of a batch of points.
pub fn batch_moments(batch: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = batch.len();
    let d = batch[0].len();
    let mut mean = vec![0.0; d];
    for x in batch {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v / n as f64;
        }
    }
    let mut var = vec![0.0; d];
    for x in batch {
        for j in 0..d {
            var[j] += (x[j] - mean[j]).powi(2) / n as f64;
        }
    }
    (mean, var)
}

/// Euclidean distance between points.
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// R² -> R⁴ map with a strongly gapped Jacobian spectrum away from
/// `cos(x0) = 0`: two output rows of magnitude ~`major` depend only on `x0`
/// (nearly parallel gradients), two of magnitude ~`minor` carry `x1`. With
/// `minor << major` the top singular value dominates, which is the regime
/// where a frozen subspace should track the true spectrum.
pub struct GappedEncoder {
    pub major: f64,
    pub minor: f64,
}

impl jepa_guide::encoder::Encoder for GappedEncoder {
    fn input_dim(&self) -> usize {
        2
    }

    fn output_dim(&self) -> usize {
        4
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let (a, b) = (self.major, self.minor);
        vec![
            a * x[0].sin(),
            a * (x[0] + 0.1).sin(),
            b * x[1].cos(),
            b * (x[0] - x[1]).sin(),
        ]
    }

    fn jacobian(&self, x: &[f64]) -> Matrix {
        let (a, b) = (self.major, self.minor);
        Matrix::new(
            4,
            2,
            vec![
                a * x[0].cos(),
                0.0,
                a * (x[0] + 0.1).cos(),
                0.0,
                0.0,
                -b * x[1].sin(),
                b * (x[0] - x[1]).cos(),
                -b * (x[0] - x[1]).cos(),
            ],
        )
        .unwrap()
    }
}

/// Encoder whose output is identically zero, so its Jacobian has no usable
/// spectrum anywhere. Exercises the degenerate-guidance path.
pub struct ZeroEncoder {
    pub input: usize,
    pub output: usize,
}

impl jepa_guide::encoder::Encoder for ZeroEncoder {
    fn input_dim(&self) -> usize {
        self.input
    }

    fn output_dim(&self) -> usize {
        self.output
    }

    fn forward(&self, _x: &[f64]) -> Vec<f64> {
        vec![0.0; self.output]
    }

    fn jacobian(&self, _x: &[f64]) -> Matrix {
        Matrix::zeros(self.output, self.input).unwrap()
    }
}

/// R² -> R³ map whose Jacobian spectrum inflates near `center`:
/// `f(x) = s(x) A x` with `s(x) = 1 + boost exp(-|x-c|² / (2 width²))` and a
/// fixed well-conditioned `A`. Spectral volume is high where `s` is large, so
/// a mode placed at `center` is "rare" to a generator but loud to this
/// encoder. `width` must be generous relative to the mode's spread: the
/// Jacobian picks up a rank-one term proportional to the bump's gradient,
/// and a narrow bump would let that term crush a singular value.
pub struct BumpScaledEncoder {
    pub center: [f64; 2],
    pub boost: f64,
    pub width: f64,
}

impl BumpScaledEncoder {
    const A: [[f64; 2]; 3] = [[1.0, 0.0], [0.0, 1.0], [0.70710678118654752, 0.70710678118654752]];

    fn bump(&self, x: &[f64]) -> f64 {
        let d2 = (x[0] - self.center[0]).powi(2) + (x[1] - self.center[1]).powi(2);
        1.0 + self.boost * (-d2 / (2.0 * self.width * self.width)).exp()
    }
}

impl jepa_guide::encoder::Encoder for BumpScaledEncoder {
    fn input_dim(&self) -> usize {
        2
    }

    fn output_dim(&self) -> usize {
        3
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let s = self.bump(x);
        Self::A
            .iter()
            .map(|row| s * (row[0] * x[0] + row[1] * x[1]))
            .collect()
    }

    fn jacobian(&self, x: &[f64]) -> Matrix {
        let s = self.bump(x);
        // grad s = -(s - 1)(x - c) / width²; J = s A + (A x) (grad s)ᵀ.
        let w2 = self.width * self.width;
        let gs = [
            -(s - 1.0) * (x[0] - self.center[0]) / w2,
            -(s - 1.0) * (x[1] - self.center[1]) / w2,
        ];
        let ax: Vec<f64> = Self::A
            .iter()
            .map(|row| row[0] * x[0] + row[1] * x[1])
            .collect();
        Matrix::from_fn(3, 2, |i, j| s * Self::A[i][j] + ax[i] * gs[j]).unwrap()
    }
}

/// Fraction of points whose nearest mixture mean (in Euclidean distance) is
/// each mode, in mode order.
pub fn mode_occupancy(batch: &[Vec<f64>], means: &[Vec<f64>]) -> Vec<f64> {
    let mut counts = vec![0usize; means.len()];
    for x in batch {
        let nearest = (0..means.len())
            .min_by(|&a, &b| dist(x, &means[a]).total_cmp(&dist(x, &means[b])))
            .unwrap();
        counts[nearest] += 1;
    }
    counts
        .iter()
        .map(|&c| c as f64 / batch.len() as f64)
        .collect()
}
