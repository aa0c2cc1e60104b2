//! Ancestral denoising sampler with an optional spectral-guidance step.
//!
//! Guidance never touches the chain's own noise stream: its sketch seeds are
//! derived from `(chain seed, t)`, and the whole guidance block is skipped
//! when inactive, so a run with `eta = 0` is byte-identical to an unguided
//! run with the same seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::encoder::Encoder;
use crate::error::{Error, Result};
use crate::matrix::{format_float, norm, svd};
use crate::rsvd::{rsvd, RsvdConfig};
use crate::score::check_kept_sigmas;
use crate::seeding::{derive_seed, GUIDANCE_STREAM};

use super::gmm::{epsilon_analytic, GaussianMixture};
use super::schedule::VarianceSchedule;

/// How the guidance strength decays over the reverse chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtaSchedule {
    /// `eta_t = eta * beta_t`: strength follows the per-step noise variance.
    VarianceScaled,
    /// `eta_t = eta` at every guided step.
    Constant,
}

/// Parameters of the guided reverse chain.
#[derive(Debug, Clone)]
pub struct GuidanceConfig {
    /// Base guidance strength; `0` disables guidance entirely.
    pub eta: f64,
    pub schedule: EtaSchedule,
    /// Guidance is active only for `t < tau * t_max` (late, low-noise steps).
    pub tau: f64,
    /// Apply guidance every `every`-th step within the active window.
    pub every: usize,
    /// Sketch configuration for the per-step compressed spectrum.
    pub rsvd: RsvdConfig,
    pub seed: u64,
}

impl GuidanceConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.eta.is_finite() || self.eta < 0.0 {
            return Err(Error::BadGuidance {
                what: format!("eta = {} must be finite and non-negative", self.eta),
            });
        }
        if !self.tau.is_finite() || !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::BadGuidance {
                what: format!("tau = {} must lie in [0, 1]", self.tau),
            });
        }
        if self.every == 0 {
            return Err(Error::BadGuidance {
                what: "every must be at least 1".into(),
            });
        }
        Ok(())
    }

    /// True when step `t` of a `t_max`-step chain receives guidance.
    pub fn active_at(&self, t: usize, t_max: usize) -> bool {
        self.eta != 0.0 && (t as f64) < self.tau * t_max as f64 && t % self.every == 0
    }
}

/// Per-step record of a traced chain. `state` is the pre-update `x_t`;
/// the guidance fields are `Some` only at steps where guidance ran.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub t: usize,
    pub state: Vec<f64>,
    pub x0_hat: Option<Vec<f64>>,
    /// Norm of the applied update `eta_t * g`.
    pub guidance_norm: Option<f64>,
    /// Compressed score at the frozen range, when guidance computed one.
    pub js_star: Option<f64>,
}

/// Output of one reverse chain: the sample plus optional per-step records.
#[derive(Debug, Clone)]
pub struct SampleTrace {
    pub final_sample: Vec<f64>,
    pub steps: Vec<StepRecord>,
}

impl SampleTrace {
    /// CSV with one row per recorded step, highest `t` first. Guidance
    /// columns are empty at steps where guidance did not run.
    pub fn to_csv(&self) -> String {
        let n = self.final_sample.len();
        let mut header = vec!["t".to_string()];
        header.extend((0..n).map(|i| format!("x{i}")));
        header.extend((0..n).map(|i| format!("x0hat{i}")));
        header.push("guidance_norm".into());
        header.push("js_star".into());
        let mut out = header.join(",");
        out.push('\n');
        for rec in &self.steps {
            let mut fields = vec![rec.t.to_string()];
            fields.extend(rec.state.iter().map(|v| format_float(*v)));
            match &rec.x0_hat {
                Some(x0) => fields.extend(x0.iter().map(|v| format_float(*v))),
                None => fields.extend(std::iter::repeat_n(String::new(), n)),
            }
            fields.push(rec.guidance_norm.map(format_float).unwrap_or_default());
            fields.push(rec.js_star.map(format_float).unwrap_or_default());
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

/// What the guidance step computed at one `(x_t, t)`.
#[derive(Debug, Clone)]
pub struct GuidanceSignal {
    /// Descent direction on the compressed score; zeros when `degenerate`.
    pub gradient: Vec<f64>,
    /// Compressed score at the center point, when it could be evaluated.
    pub js_star: Option<f64>,
    /// Posterior-mean estimate of the clean point at the center.
    pub x0_hat: Vec<f64>,
    /// True when a collapsed spectrum forced the zero gradient.
    pub degenerate: bool,
}

impl GuidanceSignal {
    fn degenerate(dim: usize, x0_hat: Vec<f64>, js_star: Option<f64>) -> Self {
        Self {
            gradient: vec![0.0; dim],
            js_star,
            x0_hat,
            degenerate: true,
        }
    }
}

/// Noises `x0` directly to step `t` in one shot:
/// `sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) xi`. Step 0 returns `x0`.
pub fn forward_marginal_sample(
    schedule: &VarianceSchedule,
    x0: &[f64],
    t: usize,
    seed: u64,
) -> Vec<f64> {
    if t == 0 {
        return x0.to_vec();
    }
    let ab = schedule.alpha_bar(t);
    let (a, b) = (ab.sqrt(), (1.0 - ab).sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    x0.iter()
        .map(|v| {
            let z: f64 = StandardNormal.sample(&mut rng);
            a * v + b * z
        })
        .collect()
}

/// Posterior-mean estimate of the clean point from `(x_t, eps)`:
/// `(x_t - sqrt(1 - alpha_bar_t) eps) / sqrt(alpha_bar_t)`.
pub fn denoised_estimate(
    schedule: &VarianceSchedule,
    x_t: &[f64],
    t: usize,
    eps: &[f64],
) -> Vec<f64> {
    assert!(t >= 1, "denoised estimate needs a noised step");
    let ab = schedule.alpha_bar(t);
    let b = (1.0 - ab).sqrt();
    let a = ab.sqrt();
    x_t.iter().zip(eps).map(|(x, e)| (x - b * e) / a).collect()
}

/// One unguided reverse chain from `x_T ~ N(0, I)`.
pub fn ddpm_sample(
    gmm: &GaussianMixture,
    schedule: &VarianceSchedule,
    seed: u64,
    record_steps: bool,
) -> Result<SampleTrace> {
    run_chain(gmm, schedule, None, seed, record_steps)
}

/// One guided reverse chain. The chain's noise seed is `cfg.seed`; sketch
/// seeds derive from `(cfg.seed, t)` so they never perturb the noise stream.
pub fn guided_sample(
    encoder: &dyn Encoder,
    gmm: &GaussianMixture,
    schedule: &VarianceSchedule,
    cfg: &GuidanceConfig,
    record_steps: bool,
) -> Result<SampleTrace> {
    cfg.validate()?;
    run_chain(gmm, schedule, Some((encoder, cfg)), cfg.seed, record_steps)
}

/// `count` unguided chains in parallel; chain `i` runs on seed derived from
/// `(seed, i)`, so the batch is deterministic regardless of thread schedule.
pub fn sample_batch(
    gmm: &GaussianMixture,
    schedule: &VarianceSchedule,
    seed: u64,
    count: usize,
) -> Result<Vec<Vec<f64>>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            ddpm_sample(gmm, schedule, derive_seed(seed, i as u64), false)
                .map(|tr| tr.final_sample)
        })
        .collect()
}

/// `count` guided chains in parallel, seeded from `(cfg.seed, i)`.
pub fn guided_batch(
    encoder: &(dyn Encoder + Sync),
    gmm: &GaussianMixture,
    schedule: &VarianceSchedule,
    cfg: &GuidanceConfig,
    count: usize,
) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    (0..count)
        .into_par_iter()
        .map(|i| {
            run_chain(
                gmm,
                schedule,
                Some((encoder, cfg)),
                derive_seed(cfg.seed, i as u64),
                false,
            )
            .map(|tr| tr.final_sample)
        })
        .collect()
}

/// The guidance computation at one `(x_t, t)`, exactly as the sampler runs
/// it in a single chain seeded with `cfg.seed`. Returns the descent
/// direction on the compressed score along with its diagnostics; a collapsed
/// spectrum yields a zero gradient and a warning rather than an error.
pub fn frozen_guidance_gradient(
    encoder: &dyn Encoder,
    gmm: &GaussianMixture,
    schedule: &VarianceSchedule,
    x_t: &[f64],
    t: usize,
    cfg: &GuidanceConfig,
) -> Result<GuidanceSignal> {
    cfg.validate()?;
    guidance_signal(
        encoder,
        gmm,
        schedule,
        x_t,
        t,
        &cfg.rsvd,
        derive_seed(cfg.seed ^ GUIDANCE_STREAM, t as u64),
    )
}

fn run_chain(
    gmm: &GaussianMixture,
    schedule: &VarianceSchedule,
    guidance: Option<(&dyn Encoder, &GuidanceConfig)>,
    chain_seed: u64,
    record_steps: bool,
) -> Result<SampleTrace> {
    let n = gmm.dim();
    let t_max = schedule.t_max();
    let mut rng = ChaCha8Rng::seed_from_u64(chain_seed);
    let mut x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut steps = Vec::new();

    for t in (1..=t_max).rev() {
        let beta = schedule.beta(t);
        let ab = schedule.alpha_bar(t);
        let eps = epsilon_analytic(gmm, schedule, &x, t)?;
        // A state far enough out to overflow the density shows up here first,
        // as a non-finite noise prediction; stop before it reaches the encoder.
        if eps.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { t });
        }

        // Posterior mean of x_{t-1}, then fresh noise except at the last step.
        let coef = beta / (1.0 - ab).sqrt();
        let mut x_next: Vec<f64> = x
            .iter()
            .zip(&eps)
            .map(|(xi, ei)| (xi - coef * ei) / (1.0 - beta).sqrt())
            .collect();
        if t > 1 {
            let sigma = beta.sqrt();
            for v in x_next.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v += sigma * z;
            }
        }

        let mut guidance_norm = None;
        let mut js_star = None;
        let mut x0_hat = None;
        if let Some((enc, cfg)) = guidance {
            // Inactive steps skip the whole block, keeping the noise stream
            // and the trace identical to an unguided chain.
            if cfg.active_at(t, t_max) {
                let sketch_seed = derive_seed(chain_seed ^ GUIDANCE_STREAM, t as u64);
                let sig = guidance_signal(enc, gmm, schedule, &x, t, &cfg.rsvd, sketch_seed)?;
                let eta_t = match cfg.schedule {
                    EtaSchedule::VarianceScaled => cfg.eta * beta,
                    EtaSchedule::Constant => cfg.eta,
                };
                for (v, g) in x_next.iter_mut().zip(&sig.gradient) {
                    *v += eta_t * g;
                }
                guidance_norm = Some(eta_t * norm(&sig.gradient));
                js_star = sig.js_star;
                x0_hat = Some(sig.x0_hat);
            }
        }

        if x_next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { t });
        }
        if record_steps {
            steps.push(StepRecord {
                t,
                state: x.clone(),
                x0_hat,
                guidance_norm,
                js_star,
            });
        }
        x = x_next;
    }

    Ok(SampleTrace {
        final_sample: x,
        steps,
    })
}

/// Sketches the Jacobian at the denoised estimate once, freezes the range,
/// and differentiates the compressed score through that frozen range by
/// central differences with step `1e-4 * (1 + |x_t|)`.
fn guidance_signal(
    encoder: &dyn Encoder,
    gmm: &GaussianMixture,
    schedule: &VarianceSchedule,
    x_t: &[f64],
    t: usize,
    rsvd_cfg: &RsvdConfig,
    sketch_seed: u64,
) -> Result<GuidanceSignal> {
    let n = x_t.len();
    let eps = epsilon_analytic(gmm, schedule, x_t, t)?;
    let x0 = denoised_estimate(schedule, x_t, t, &eps);
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteState { t });
    }
    let jac = encoder.jacobian(&x0);
    rsvd_cfg.validate_for(jac.rows(), jac.cols())?;
    let sketch = match rsvd(&jac, rsvd_cfg, sketch_seed) {
        Ok(r) => r,
        Err(e) if e.is_degenerate() => {
            log::warn!("guidance skipped at t={t}: {e}");
            return Ok(GuidanceSignal::degenerate(n, x0, None));
        }
        Err(e) => return Err(e),
    };
    let q_star = &sketch.q_star;
    let k = rsvd_cfg.k;

    // Compressed score through the frozen range: top-k spectrum of Q*ᵀ J(x̂₀(y)).
    let js_at = |y: &[f64]| -> Result<f64> {
        let e = epsilon_analytic(gmm, schedule, y, t)?;
        let x0y = denoised_estimate(schedule, y, t, &e);
        let jy = encoder.jacobian(&x0y);
        let c = q_star.transpose().mul(&jy)?;
        let s = svd(&c)?.s;
        let kept = &s[..k.min(s.len())];
        check_kept_sigmas(kept)?;
        Ok(kept.iter().map(|v| v.ln()).sum())
    };

    let js_center = match js_at(x_t) {
        Ok(v) => v,
        Err(e) if e.is_degenerate() => {
            log::warn!("guidance skipped at t={t}: {e}");
            return Ok(GuidanceSignal::degenerate(n, x0, None));
        }
        Err(e) => return Err(e),
    };

    let h = 1e-4 * (1.0 + norm(x_t));
    let mut gradient = vec![0.0; n];
    for i in 0..n {
        let mut plus = x_t.to_vec();
        plus[i] += h;
        let mut minus = x_t.to_vec();
        minus[i] -= h;
        match (js_at(&plus), js_at(&minus)) {
            // Descent direction: negative gradient of the compressed score.
            (Ok(a), Ok(b)) => gradient[i] = (b - a) / (2.0 * h),
            (p, m) => {
                let e = p.err().or_else(|| m.err()).expect("one side failed");
                if e.is_degenerate() {
                    log::warn!("guidance skipped at t={t}: {e}");
                    return Ok(GuidanceSignal::degenerate(n, x0, Some(js_center)));
                }
                return Err(e);
            }
        }
    }

    Ok(GuidanceSignal {
        gradient,
        js_star: Some(js_center),
        x0_hat: x0,
        degenerate: false,
    })
}
