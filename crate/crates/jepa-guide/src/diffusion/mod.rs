//! Denoising diffusion over Gaussian mixtures with optional spectral guidance.
//!
//! The mixture's noise-prediction target is available in closed form, so the
//! reverse chain needs no learned network; every statistical claim about the
//! sampler can be checked against the analytic density.

pub mod gmm;
pub mod sampler;
pub mod schedule;

pub use gmm::{epsilon_analytic, gmm_score, GaussianMixture};
pub use sampler::{
    ddpm_sample, denoised_estimate, forward_marginal_sample, frozen_guidance_gradient,
    guided_batch, guided_sample, sample_batch, EtaSchedule, GuidanceConfig, GuidanceSignal,
    SampleTrace, StepRecord,
};
pub use schedule::VarianceSchedule;
