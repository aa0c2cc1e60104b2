//! Gaussian mixtures with closed-form density, score, and noising.
//!
//! The mixture doubles as the test oracle for the whole sampling stack: its
//! log-density gradient is exact, and diffusing it forward stays inside the
//! family (means shrink by `sqrt(alpha_bar)`, covariances blend toward the
//! identity), so every intermediate noise level has a known score.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::{cholesky_lower, dot, Matrix};

use super::schedule::VarianceSchedule;

const SIMPLEX_TOL: f64 = 1e-12;
const SYMMETRY_REL: f64 = 1e-10;
const LN_2PI: f64 = 1.8378770664093453;

#[derive(Debug, Clone)]
struct Component {
    mean: Vec<f64>,
    cov: Matrix,
    /// Lower Cholesky factor of `cov`; proves positive definiteness and
    /// backs every solve and draw against this component.
    chol_l: Matrix,
    /// `-(n ln 2pi + ln det cov) / 2`, the density normalizer.
    log_norm: f64,
}

/// Finite mixture of full-covariance Gaussians on `R^dim`.
///
/// Construction validates everything once (weights on the simplex, covariances
/// symmetric positive definite); queries after that use assertions only.
#[derive(Debug, Clone)]
pub struct GaussianMixture {
    dim: usize,
    weights: Vec<f64>,
    components: Vec<Component>,
}

impl GaussianMixture {
    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, covs: Vec<Matrix>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::BadMixture {
                what: "mixture needs at least one component".into(),
            });
        }
        if means.len() != weights.len() || covs.len() != weights.len() {
            return Err(Error::BadMixture {
                what: format!(
                    "component count mismatch: {} weights, {} means, {} covariances",
                    weights.len(),
                    means.len(),
                    covs.len()
                ),
            });
        }
        for (j, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::BadMixture {
                    what: format!("weight[{j}] = {w} is not a finite non-negative value"),
                });
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::BadMixture {
                what: format!("weights sum to {total}, expected 1 within {SIMPLEX_TOL:e}"),
            });
        }
        let dim = means[0].len();
        if dim == 0 {
            return Err(Error::BadMixture {
                what: "means must have at least one coordinate".into(),
            });
        }
        let mut components = Vec::with_capacity(weights.len());
        for (j, (mean, cov)) in means.into_iter().zip(covs).enumerate() {
            if mean.len() != dim {
                return Err(Error::BadMixture {
                    what: format!("mean[{j}] has dim {}, expected {dim}", mean.len()),
                });
            }
            if mean.iter().any(|v| !v.is_finite()) {
                return Err(Error::BadMixture {
                    what: format!("mean[{j}] has a non-finite coordinate"),
                });
            }
            if cov.rows() != dim || cov.cols() != dim {
                return Err(Error::BadMixture {
                    what: format!(
                        "covariance[{j}] is {}x{}, expected {dim}x{dim}",
                        cov.rows(),
                        cov.cols()
                    ),
                });
            }
            let scale = cov.data().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            for r in 0..dim {
                for c in (r + 1)..dim {
                    if (cov.get(r, c) - cov.get(c, r)).abs() > SYMMETRY_REL * scale.max(1.0) {
                        return Err(Error::NotSpd { index: j });
                    }
                }
            }
            let chol_l = cholesky_lower(&cov).ok_or(Error::NotSpd { index: j })?;
            let log_det: f64 = (0..dim).map(|i| chol_l.get(i, i).ln()).sum::<f64>() * 2.0;
            components.push(Component {
                mean,
                cov,
                chol_l,
                log_norm: -0.5 * (dim as f64 * LN_2PI + log_det),
            });
        }
        Ok(Self {
            dim,
            weights,
            components,
        })
    }

    /// Convenience constructor: every component has covariance `variance * I`.
    pub fn isotropic(weights: Vec<f64>, means: Vec<Vec<f64>>, variances: Vec<f64>) -> Result<Self> {
        let dim = means.first().map_or(0, Vec::len);
        let covs = variances
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                if !v.is_finite() || v <= 0.0 {
                    return Err(Error::BadMixture {
                        what: format!("variance[{j}] = {v} must be positive"),
                    });
                }
                Matrix::from_fn(dim.max(1), dim.max(1), |r, c| if r == c { v } else { 0.0 })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(weights, means, covs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mean(&self, j: usize) -> &[f64] {
        &self.components[j].mean
    }

    pub fn covariance(&self, j: usize) -> &Matrix {
        &self.components[j].cov
    }

    /// Log of the mixture density at `x`, stabilized with log-sum-exp.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim, "log_density: dimension mismatch");
        let terms = self.component_log_terms(x);
        log_sum_exp(&terms)
    }

    /// One draw: pick a component by weight, then `mean + L z`.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut pick = self.components.len() - 1;
        for (j, &w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                pick = j;
                break;
            }
        }
        let comp = &self.components[pick];
        let z: Vec<f64> = (0..self.dim).map(|_| StandardNormal.sample(rng)).collect();
        let mut x = comp.mean.clone();
        for r in 0..self.dim {
            for c in 0..=r {
                x[r] += comp.chol_l.get(r, c) * z[c];
            }
        }
        x
    }

    /// The mixture after `t` forward noising steps: means shrink by
    /// `sqrt(alpha_bar_t)` and covariances become
    /// `alpha_bar_t * cov + (1 - alpha_bar_t) * I`. `t = 0` returns the clean
    /// mixture unchanged.
    pub fn diffused(&self, schedule: &VarianceSchedule, t: usize) -> Result<GaussianMixture> {
        let ab = schedule.alpha_bar(t);
        let shrink = ab.sqrt();
        let means = self
            .components
            .iter()
            .map(|c| c.mean.iter().map(|v| v * shrink).collect())
            .collect();
        let covs = self
            .components
            .iter()
            .map(|c| {
                Matrix::from_fn(self.dim, self.dim, |r, q| {
                    ab * c.cov.get(r, q) + if r == q { 1.0 - ab } else { 0.0 }
                })
            })
            .collect::<Result<Vec<_>>>()?;
        GaussianMixture::new(self.weights.clone(), means, covs)
    }

    /// `ln w_j + ln N(x; mean_j, cov_j)` for every component.
    fn component_log_terms(&self, x: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .zip(&self.weights)
            .map(|(comp, &w)| {
                let d: Vec<f64> = x.iter().zip(&comp.mean).map(|(a, b)| a - b).collect();
                let y = solve_lower(&comp.chol_l, &d);
                let quad = dot(&y, &y);
                let log_w = if w > 0.0 { w.ln() } else { f64::NEG_INFINITY };
                log_w + comp.log_norm - 0.5 * quad
            })
            .collect()
    }

    /// Responsibilities `r_j = softmax_j(ln w_j + ln N_j(x))` and the
    /// per-component pull `cov_j^{-1} (mean_j - x)`.
    fn responsibilities_and_pulls(&self, x: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let terms = self.component_log_terms(x);
        let resp = softmax(&terms);
        let pulls = self
            .components
            .iter()
            .map(|comp| {
                let d: Vec<f64> = comp.mean.iter().zip(x).map(|(a, b)| a - b).collect();
                spd_solve(&comp.chol_l, &d)
            })
            .collect();
        (resp, pulls)
    }
}

/// Gradient of the mixture log-density at `x`:
/// `sum_j r_j(x) cov_j^{-1} (mean_j - x)` with softmax responsibilities.
pub fn gmm_score(gmm: &GaussianMixture, x: &[f64]) -> Vec<f64> {
    assert_eq!(x.len(), gmm.dim, "gmm_score: dimension mismatch");
    let (resp, pulls) = gmm.responsibilities_and_pulls(x);
    let mut score = vec![0.0; gmm.dim];
    for (r, pull) in resp.iter().zip(&pulls) {
        for (s, p) in score.iter_mut().zip(pull) {
            *s += r * p;
        }
    }
    score
}

/// Exact noise-prediction target for a mixture diffused to step `t`:
/// `-sqrt(1 - alpha_bar_t)` times the score of the noised mixture at `x_t`.
///
/// The noised components are formed inline here; tests cross-check this
/// against building [`GaussianMixture::diffused`] explicitly and calling
/// [`gmm_score`] on it.
pub fn epsilon_analytic(
    gmm: &GaussianMixture,
    schedule: &VarianceSchedule,
    x_t: &[f64],
    t: usize,
) -> Result<Vec<f64>> {
    assert!(t >= 1 && t <= schedule.t_max(), "epsilon: step {t} out of range");
    assert_eq!(x_t.len(), gmm.dim, "epsilon: dimension mismatch");
    let ab = schedule.alpha_bar(t);
    let shrink = ab.sqrt();
    let n = gmm.dim;

    let mut log_terms = Vec::with_capacity(gmm.components.len());
    let mut pulls = Vec::with_capacity(gmm.components.len());
    for (j, (comp, &w)) in gmm.components.iter().zip(&gmm.weights).enumerate() {
        let cov_t = Matrix::from_fn(n, n, |r, c| {
            ab * comp.cov.get(r, c) + if r == c { 1.0 - ab } else { 0.0 }
        })?;
        let l = cholesky_lower(&cov_t).ok_or(Error::NotSpd { index: j })?;
        let log_det: f64 = (0..n).map(|i| l.get(i, i).ln()).sum::<f64>() * 2.0;
        let d: Vec<f64> = x_t
            .iter()
            .zip(&comp.mean)
            .map(|(a, m)| a - m * shrink)
            .collect();
        let y = solve_lower(&l, &d);
        let log_w = if w > 0.0 { w.ln() } else { f64::NEG_INFINITY };
        log_terms.push(log_w - 0.5 * (n as f64 * LN_2PI + log_det) - 0.5 * dot(&y, &y));
        let neg_d: Vec<f64> = d.iter().map(|v| -v).collect();
        pulls.push(spd_solve(&l, &neg_d));
    }
    let resp = softmax(&log_terms);
    let sigma = (1.0 - ab).sqrt();
    let mut eps = vec![0.0; n];
    for (r, pull) in resp.iter().zip(&pulls) {
        for (e, p) in eps.iter_mut().zip(pull) {
            *e -= sigma * r * p;
        }
    }
    Ok(eps)
}

/// `max + ln sum exp(v - max)`, tolerating `-inf` entries.
fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + terms.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

fn softmax(terms: &[f64]) -> Vec<f64> {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = terms.iter().map(|v| (v - m).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|v| v / total).collect()
}

/// Forward substitution: solves `L y = b` for lower-triangular `L`.
fn solve_lower(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut acc = b[i];
        for j in 0..i {
            acc -= l.get(i, j) * y[j];
        }
        y[i] = acc / l.get(i, i);
    }
    y
}

/// Solves `L Lᵀ x = b` by forward then backward substitution.
fn spd_solve(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let y = solve_lower(l, b);
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = y[i];
        for j in (i + 1)..n {
            acc -= l.get(j, i) * x[j];
        }
        x[i] = acc / l.get(i, i);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_mode() -> GaussianMixture {
        GaussianMixture::isotropic(
            vec![0.7, 0.3],
            vec![vec![-2.0, 0.0], vec![2.0, 0.0]],
            vec![0.25, 0.25],
        )
        .unwrap()
    }

    #[test]
    fn single_gaussian_density_matches_closed_form() {
        let g = GaussianMixture::isotropic(vec![1.0], vec![vec![0.0]], vec![1.0]).unwrap();
        // Standard normal at 0: -ln(sqrt(2pi)).
        assert!((g.log_density(&[0.0]) + 0.5 * LN_2PI).abs() < 1e-14);
        // Score of a standard normal is -x.
        let s = gmm_score(&g, &[0.7]);
        assert!((s[0] + 0.7).abs() < 1e-12);
    }

    #[test]
    fn correlated_covariance_solve_is_exact() {
        let cov = Matrix::new(2, 2, vec![2.0, 0.6, 0.6, 1.0]).unwrap();
        let g = GaussianMixture::new(vec![1.0], vec![vec![0.5, -0.5]], vec![cov]).unwrap();
        // score = cov^{-1} (mean - x); invert the 2x2 by hand.
        let x = [1.0, 1.0];
        let det = 2.0 * 1.0 - 0.6 * 0.6;
        let d = [0.5 - 1.0, -0.5 - 1.0];
        let expect = [
            (1.0 * d[0] - 0.6 * d[1]) / det,
            (-0.6 * d[0] + 2.0 * d[1]) / det,
        ];
        let s = gmm_score(&g, &x);
        assert!((s[0] - expect[0]).abs() < 1e-12);
        assert!((s[1] - expect[1]).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_weights_and_non_spd() {
        let bad = GaussianMixture::isotropic(
            vec![0.6, 0.6],
            vec![vec![0.0], vec![1.0]],
            vec![1.0, 1.0],
        );
        assert!(matches!(bad, Err(Error::BadMixture { .. })));
        let indef = Matrix::new(2, 2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        let bad = GaussianMixture::new(vec![1.0], vec![vec![0.0, 0.0]], vec![indef]);
        assert!(matches!(bad, Err(Error::NotSpd { index: 0 })));
        let asym = Matrix::new(2, 2, vec![1.0, 0.5, -0.5, 1.0]).unwrap();
        let bad = GaussianMixture::new(vec![1.0], vec![vec![0.0, 0.0]], vec![asym]);
        assert!(matches!(bad, Err(Error::NotSpd { index: 0 })));
    }

    #[test]
    fn diffused_at_zero_is_identity() {
        let g = two_mode();
        let s = VarianceSchedule::default_linear(50).unwrap();
        let d = g.diffused(&s, 0).unwrap();
        assert_eq!(d.mean(0), g.mean(0));
        assert_eq!(d.covariance(1), g.covariance(1));
    }

    #[test]
    fn diffused_means_and_covs_scale() {
        let g = two_mode();
        let s = VarianceSchedule::default_linear(50).unwrap();
        let d = g.diffused(&s, 50).unwrap();
        let ab = s.alpha_bar(50);
        assert!((d.mean(1)[0] - 2.0 * ab.sqrt()).abs() < 1e-14);
        assert!((d.covariance(0).get(0, 0) - (ab * 0.25 + (1.0 - ab))).abs() < 1e-14);
    }

    #[test]
    fn sampling_respects_weights() {
        use rand::SeedableRng;
        let g = two_mode();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 20_000;
        let right = (0..n).filter(|_| g.sample(&mut rng)[0] > 0.0).count();
        let frac = right as f64 / n as f64;
        assert!((frac - 0.3).abs() < 0.02, "right-mode fraction {frac}");
    }
}
