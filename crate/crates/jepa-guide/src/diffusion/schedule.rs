//! Forward-noising variance schedules.

use crate::error::{Error, Result};

/// Discrete variance schedule over steps `t = 1..=t_max`.
///
/// Stores `beta_t` per step and the cumulative signal retention
/// `alpha_bar_t = prod_{s<=t} (1 - beta_s)`, with `alpha_bar_0 = 1` so that
/// step 0 denotes the clean data. `alpha_bar` is strictly decreasing in `t`
/// because every `beta_t` is in (0, 1).
#[derive(Debug, Clone)]
pub struct VarianceSchedule {
    betas: Vec<f64>,
    /// `alpha_bars[t]` is alpha_bar at step t; index 0 holds the exact 1.0.
    alpha_bars: Vec<f64>,
}

impl VarianceSchedule {
    /// Builds a schedule from explicit per-step variances.
    pub fn new(betas: Vec<f64>) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::BadSchedule {
                what: "schedule needs at least one step".into(),
            });
        }
        for (i, &b) in betas.iter().enumerate() {
            if !b.is_finite() || b <= 0.0 || b >= 1.0 {
                return Err(Error::BadSchedule {
                    what: format!("beta[{}] = {b} is outside (0, 1)", i + 1),
                });
            }
        }
        let mut alpha_bars = Vec::with_capacity(betas.len() + 1);
        alpha_bars.push(1.0);
        let mut acc = 1.0;
        for &b in &betas {
            acc *= 1.0 - b;
            alpha_bars.push(acc);
        }
        Ok(Self { betas, alpha_bars })
    }

    /// Linear ramp from `beta_start` to `beta_end` over `t_max` steps.
    pub fn linear(t_max: usize, beta_start: f64, beta_end: f64) -> Result<Self> {
        if t_max == 0 {
            return Err(Error::BadSchedule {
                what: "schedule needs at least one step".into(),
            });
        }
        if beta_end < beta_start {
            return Err(Error::BadSchedule {
                what: format!("beta_end {beta_end} below beta_start {beta_start}"),
            });
        }
        let betas = (0..t_max)
            .map(|i| {
                if t_max == 1 {
                    beta_start
                } else {
                    beta_start + (beta_end - beta_start) * i as f64 / (t_max - 1) as f64
                }
            })
            .collect();
        Self::new(betas)
    }

    /// Default ramp 1e-4 -> 2e-2, the usual small-step denoising regime.
    pub fn default_linear(t_max: usize) -> Result<Self> {
        Self::linear(t_max, 1e-4, 2e-2)
    }

    /// Number of noising steps.
    pub fn t_max(&self) -> usize {
        self.betas.len()
    }

    /// Per-step variance, 1-based: valid for `1 <= t <= t_max`.
    pub fn beta(&self, t: usize) -> f64 {
        assert!(t >= 1 && t <= self.betas.len(), "step {t} out of range");
        self.betas[t - 1]
    }

    /// Cumulative signal retention, valid for `0 <= t <= t_max`.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        assert!(t <= self.betas.len(), "step {t} out of range");
        self.alpha_bars[t]
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cumulative_product_matches_recurrence() {
        let s = VarianceSchedule::default_linear(250).unwrap();
        assert_eq!(s.alpha_bar(0), 1.0);
        for t in 1..=250 {
            let expect = s.alpha_bar(t - 1) * (1.0 - s.beta(t));
            assert!((s.alpha_bar(t) - expect).abs() <= 1e-12);
            assert!(s.alpha_bar(t) < s.alpha_bar(t - 1));
            assert!(s.alpha_bar(t) > 0.0);
        }
    }

    #[test]
    fn linear_ramp_endpoints() {
        let s = VarianceSchedule::linear(100, 1e-4, 2e-2).unwrap();
        assert_eq!(s.beta(1), 1e-4);
        assert_eq!(s.beta(100), 2e-2);
        assert_eq!(s.t_max(), 100);
    }

    #[test]
    fn rejects_out_of_range_beta() {
        assert!(matches!(
            VarianceSchedule::new(vec![0.5, 1.0]),
            Err(Error::BadSchedule { .. })
        ));
        assert!(matches!(
            VarianceSchedule::new(vec![]),
            Err(Error::BadSchedule { .. })
        ));
        assert!(matches!(
            VarianceSchedule::new(vec![0.1, -0.2]),
            Err(Error::BadSchedule { .. })
        ));
    }

    #[test]
    fn single_step_schedule_is_allowed() {
        let s = VarianceSchedule::linear(1, 1e-4, 2e-2).unwrap();
        assert_eq!(s.beta(1), 1e-4);
        assert_eq!(s.alpha_bar(1), 1.0 - 1e-4);
    }
}
