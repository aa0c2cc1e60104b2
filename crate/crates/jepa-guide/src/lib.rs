//! Spectral rarity scoring for smooth encoders, with certified randomized
//! compression, and a DDPM sampler that uses the score to steer generation
//! toward under-represented regions.
//!
//! The crate is organized bottom-up:
//!
//! * [`matrix`]: dense row-major matrices, SVD/QR, seeded Gaussian sampling.
//! * [`rsvd`]: randomized range finding and truncated SVD with power iteration.
//! * [`encoder`]: smooth feature maps with analytic Jacobians.
//! * [`score`]: exact and compressed log-spectral scores plus error certificates.
//! * [`diffusion`]: variance schedules, Gaussian mixtures, DDPM and guided sampling.
//! * [`metrics`]: nearest-neighbor rarity metrics and minority-set selection.
//! * [`experiment`]: config-driven pipelines writing reproducible CSV artifacts.
//!
//! Runnable walkthroughs for each capability live in `examples/`.

pub mod config;
pub mod diffusion;
pub mod encoder;
pub mod error;
pub mod experiment;
pub mod matrix;
pub mod metrics;
pub mod plot;
pub mod rsvd;
pub mod score;
pub mod seeding;

pub use error::{Error, Result};
