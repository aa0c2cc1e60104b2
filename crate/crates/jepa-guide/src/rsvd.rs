//! Randomized range finding and truncated SVD.
//!
//! The pipeline is: draw a Gaussian sketch once, capture the range of `a`
//! (optionally sharpened by power iteration with re-orthonormalization after
//! every product), then take a full SVD of the small compressed matrix
//! `Q*ᵀ a`. Compression can only shrink singular values, which is what makes
//! the truncated log-spectral score a one-sided surrogate.

use crate::error::{Error, Result};
use crate::matrix::{gaussian_matrix, qr_orthonormalize, svd, Matrix, SvdResult};

/// Sketch-and-power parameters. `k` is the target rank kept in the score,
/// `p` extra sketch columns, `q` power iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RsvdConfig {
    pub k: usize,
    pub p: usize,
    pub q: usize,
}

impl RsvdConfig {
    pub fn new(k: usize, p: usize, q: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::ZeroTargetRank);
        }
        Ok(Self { k, p, q })
    }

    /// Total sketch width `k + p`.
    pub fn sketch_size(&self) -> usize {
        self.k + self.p
    }

    /// The sketch must fit inside the matrix; too-large sketches are rejected,
    /// never clamped.
    pub fn validate_for(&self, rows: usize, cols: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::ZeroTargetRank);
        }
        let min_dim = rows.min(cols);
        if self.sketch_size() > min_dim {
            return Err(Error::SketchTooLarge {
                sketch: self.sketch_size(),
                min_dim,
            });
        }
        Ok(())
    }
}

/// Output of [`rsvd`]. `q_star` spans the captured range; `top_k_sigmas` are
/// the first `k` singular values of the compressed matrix, descending.
#[derive(Debug, Clone)]
pub struct RsvdResult {
    pub q_star: Matrix,
    pub compressed: Matrix,
    pub svd_of_compressed: SvdResult,
    pub top_k_sigmas: Vec<f64>,
}

impl RsvdResult {
    /// Rank-`k` approximation of the original matrix: `Q* · truncate_k(svd(Q*ᵀa))`.
    /// This is the matrix whose spectrum the truncated score actually sees.
    pub fn rank_k_matrix(&self) -> Result<Matrix> {
        let k = self.top_k_sigmas.len();
        let d = &self.svd_of_compressed;
        let cols = d.vt.cols();
        let scaled = Matrix::from_fn(k, cols, |i, j| d.s[i] * d.vt.get(i, j))?;
        let u_k = Matrix::from_fn(d.u.rows(), k, |i, j| d.u.get(i, j))?;
        self.q_star.mul(&u_k.mul(&scaled)?)
    }
}

/// Orthonormal basis `Q` for the (approximate) range of `a`.
///
/// The Gaussian sketch is drawn once from `seed`; each of the `q` power steps
/// applies `aᵀ` then `a`, re-orthonormalizing after every product so the
/// basis never degenerates numerically.
pub fn randomized_range_finder(a: &Matrix, cfg: &RsvdConfig, seed: u64) -> Result<Matrix> {
    cfg.validate_for(a.rows(), a.cols())?;
    let omega = gaussian_matrix(a.cols(), cfg.sketch_size(), seed)?;
    let mut q = qr_orthonormalize(&a.mul(&omega)?)?;
    for _ in 0..cfg.q {
        let z = qr_orthonormalize(&a.transpose().mul(&q)?)?;
        q = qr_orthonormalize(&a.mul(&z)?)?;
    }
    Ok(q)
}

/// Randomized truncated SVD: range capture followed by a full SVD of the
/// compressed matrix `Q*ᵀ a`.
pub fn rsvd(a: &Matrix, cfg: &RsvdConfig, seed: u64) -> Result<RsvdResult> {
    let q_star = randomized_range_finder(a, cfg, seed)?;
    let compressed = q_star.transpose().mul(a)?;
    let svd_of_compressed = svd(&compressed)?;
    let top_k_sigmas = svd_of_compressed.s[..cfg.k].to_vec();
    Ok(RsvdResult {
        q_star,
        compressed,
        svd_of_compressed,
        top_k_sigmas,
    })
}

/// What the range basis misses: `a - QQᵀa`.
pub fn range_residual(a: &Matrix, q: &Matrix) -> Result<Matrix> {
    a.sub(&q.mul(&q.transpose().mul(a)?)?)
}

/// Spectral-residual inflation constant
/// `C = 1 + (1 + 4 sqrt(2 r / (k - 1)))^(1 / (2 q + 1))`.
///
/// Defined only for `k >= 2` (the formula divides by `k - 1`) and `r >= k`.
pub fn halko_constant(cfg: &RsvdConfig, r: usize) -> Result<f64> {
    if cfg.k < 2 {
        return Err(Error::ConstantNeedsK2 { k: cfg.k });
    }
    if r < cfg.k {
        return Err(Error::ConstantNeedsRankK { r, k: cfg.k });
    }
    let ratio = 2.0 * r as f64 / (cfg.k as f64 - 1.0);
    let exponent = 1.0 / (2.0 * cfg.q as f64 + 1.0);
    Ok(1.0 + (1.0 + 4.0 * ratio.sqrt()).powf(exponent))
}
