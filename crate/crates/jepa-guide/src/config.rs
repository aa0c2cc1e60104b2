//! On-disk experiment configuration.
//!
//! The format is TOML with one section per concern; every field is plain
//! data, so a config round-trips losslessly and its SHA-256 over the raw
//! file bytes identifies the run in every artifact the pipeline writes.
//!
//! ```toml
//! [mixture]
//! weights = [0.9, 0.1]
//! means = [[-2.0, 0.0], [2.0, 0.0]]
//! variances = [0.1225, 0.1225]
//!
//! [encoder]
//! kind = "tanh-mlp"        # linear | tanh-mlp | rff | phase-rff
//! output_dim = 32
//! hidden_dim = 16          # tanh-mlp only
//! gamma = 1.0              # rff / phase-rff only
//! seed = 7
//!
//! [schedule]
//! t_max = 250
//! beta_start = 1e-4
//! beta_end = 2e-2
//!
//! [guidance]
//! eta = 1.0
//! eta_schedule = "variance-scaled"   # or "constant"
//! tau = 0.8
//! every = 3
//! k = 2
//! p = 0
//! q = 1
//!
//! [run]
//! samples = 300
//! seed = 2024
//! ```
//!
//! `[metrics]` and `[sweep]` are optional; see the field defaults below.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diffusion::{EtaSchedule, GaussianMixture, GuidanceConfig, VarianceSchedule};
use crate::encoder::{
    AnyEncoder, LinearEncoder, PhaseRffEncoder, RffEncoder, TanhMlpEncoder,
};
use crate::error::{Error, Result};
use crate::matrix::gaussian_matrix;
use crate::rsvd::RsvdConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureSpec {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    /// Isotropic per-component variances. Full covariances are available
    /// through the library API; the config keeps the desk-scale subset.
    pub variances: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderSpec {
    pub kind: String,
    pub output_dim: usize,
    /// Hidden width for `tanh-mlp`; ignored otherwise.
    #[serde(default)]
    pub hidden_dim: usize,
    /// Frequency bandwidth for `rff` / `phase-rff`; ignored otherwise.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub t_max: usize,
    #[serde(default = "default_beta_start")]
    pub beta_start: f64,
    #[serde(default = "default_beta_end")]
    pub beta_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuidanceSpec {
    pub eta: f64,
    #[serde(default = "default_eta_schedule")]
    pub eta_schedule: String,
    pub tau: f64,
    pub every: usize,
    pub k: usize,
    pub p: usize,
    pub q: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSpec {
    /// Neighbor count for average-kNN distances.
    #[serde(default = "default_k")]
    pub knn_k: usize,
    /// Ball order for density/coverage.
    #[serde(default = "default_k")]
    pub density_k: usize,
    /// Size of the fresh reference draw from the mixture.
    #[serde(default = "default_reference_count")]
    pub reference_count: usize,
    #[serde(default = "default_reference_seed")]
    pub reference_seed: u64,
    /// Bottom fraction used by minority selection.
    #[serde(default = "default_minority_fraction")]
    pub minority_fraction: f64,
}

impl Default for MetricsSpec {
    fn default() -> Self {
        Self {
            knn_k: default_k(),
            density_k: default_k(),
            reference_count: default_reference_count(),
            reference_seed: default_reference_seed(),
            minority_fraction: default_minority_fraction(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Guidance strengths for the sweep command, run in the given order.
    #[serde(default)]
    pub etas: Vec<f64>,
}

fn default_gamma() -> f64 {
    1.0
}
fn default_beta_start() -> f64 {
    1e-4
}
fn default_beta_end() -> f64 {
    2e-2
}
fn default_eta_schedule() -> String {
    "variance-scaled".to_string()
}
fn default_k() -> usize {
    5
}
fn default_reference_count() -> usize {
    500
}
fn default_reference_seed() -> u64 {
    7
}
fn default_minority_fraction() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mixture: MixtureSpec,
    pub encoder: EncoderSpec,
    pub schedule: ScheduleSpec,
    pub guidance: GuidanceSpec,
    pub run: RunSpec,
    #[serde(default)]
    pub metrics: MetricsSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
}

/// Hex SHA-256 of the raw config bytes; the identity stamped into artifacts.
pub fn config_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: "config".to_string(),
            what: e.to_string(),
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse {
            path: "config".to_string(),
            what: format!("serialize: {e}"),
        })
    }

    /// Reads a config file and returns it with the hash of its exact bytes.
    pub fn load(path: &Path) -> Result<(Self, String)> {
        let bytes = fs::read(path).map_err(|e| Error::Io {
            context: format!("reading config {}", path.display()),
            source: e,
        })?;
        let text = String::from_utf8_lossy(&bytes);
        let cfg = Self::from_toml_str(&text)?;
        Ok((cfg, config_hash(&bytes)))
    }

    /// Dimension of the data space, taken from the first mixture mean.
    pub fn dim(&self) -> usize {
        self.mixture.means.first().map_or(0, Vec::len)
    }

    /// Full cross-field validation. Fails before any sampling with the
    /// offending field path in the error.
    pub fn validate(&self) -> Result<()> {
        self.build_mixture().map_err(|e| bad("mixture", e))?;
        let n = self.dim();

        match self.encoder.kind.as_str() {
            "linear" | "tanh-mlp" | "rff" | "phase-rff" => {}
            other => {
                return Err(Error::BadConfig {
                    field: "encoder.kind".into(),
                    what: format!(
                        "unknown kind {other:?}; expected linear, tanh-mlp, rff, or phase-rff"
                    ),
                });
            }
        }
        self.build_encoder().map_err(|e| bad("encoder", e))?;

        self.build_schedule().map_err(|e| bad("schedule", e))?;

        let sketch = self.guidance.k + self.guidance.p;
        if self.guidance.k == 0 {
            return Err(Error::BadConfig {
                field: "guidance.k".into(),
                what: "target rank must be at least 1".into(),
            });
        }
        if sketch > n.min(self.encoder.output_dim) {
            return Err(Error::BadConfig {
                field: "guidance.k".into(),
                what: format!(
                    "sketch width k + p = {sketch} exceeds the Jacobian's smaller dimension {}",
                    n.min(self.encoder.output_dim)
                ),
            });
        }
        match self.guidance.eta_schedule.as_str() {
            "variance-scaled" | "constant" => {}
            other => {
                return Err(Error::BadConfig {
                    field: "guidance.eta_schedule".into(),
                    what: format!("unknown schedule {other:?}; expected variance-scaled or constant"),
                });
            }
        }
        self.guidance_config()
            .and_then(|g| g.validate())
            .map_err(|e| bad("guidance", e))?;

        if self.run.samples == 0 {
            return Err(Error::BadConfig {
                field: "run.samples".into(),
                what: "sample count must be at least 1".into(),
            });
        }

        if self.metrics.knn_k == 0 || self.metrics.density_k == 0 {
            return Err(Error::BadConfig {
                field: "metrics.knn_k".into(),
                what: "neighbor counts must be at least 1".into(),
            });
        }
        if self.metrics.reference_count <= self.metrics.density_k {
            return Err(Error::BadConfig {
                field: "metrics.reference_count".into(),
                what: format!(
                    "reference draw of {} cannot support k = {}",
                    self.metrics.reference_count, self.metrics.density_k
                ),
            });
        }
        if !(self.metrics.minority_fraction > 0.0 && self.metrics.minority_fraction <= 1.0) {
            return Err(Error::BadConfig {
                field: "metrics.minority_fraction".into(),
                what: format!("{} is outside (0, 1]", self.metrics.minority_fraction),
            });
        }

        for (i, &eta) in self.sweep.etas.iter().enumerate() {
            if !eta.is_finite() || eta < 0.0 {
                return Err(Error::BadConfig {
                    field: format!("sweep.etas[{i}]"),
                    what: format!("{eta} must be finite and non-negative"),
                });
            }
        }
        Ok(())
    }

    pub fn build_mixture(&self) -> Result<GaussianMixture> {
        GaussianMixture::isotropic(
            self.mixture.weights.clone(),
            self.mixture.means.clone(),
            self.mixture.variances.clone(),
        )
    }

    /// Instantiates the configured encoder. `linear` draws a fixed seeded
    /// Gaussian matrix scaled by `1/sqrt(input_dim)`.
    pub fn build_encoder(&self) -> Result<AnyEncoder> {
        let n = self.dim();
        let d = self.encoder.output_dim;
        let seed = self.encoder.seed;
        match self.encoder.kind.as_str() {
            "linear" => {
                if d <= n {
                    return Err(Error::EncoderNotOvercomplete { input: n, output: d });
                }
                let a = gaussian_matrix(d, n, seed)?.scale(1.0 / (n as f64).sqrt())?;
                Ok(AnyEncoder::Linear(LinearEncoder::new(a)))
            }
            "tanh-mlp" => {
                let hidden = if self.encoder.hidden_dim == 0 {
                    return Err(Error::BadConfig {
                        field: "encoder.hidden_dim".into(),
                        what: "tanh-mlp needs hidden_dim >= 1".into(),
                    });
                } else {
                    self.encoder.hidden_dim
                };
                Ok(AnyEncoder::TanhMlp(TanhMlpEncoder::new(n, hidden, d, seed)?))
            }
            "rff" => Ok(AnyEncoder::Rff(RffEncoder::new(
                n,
                d,
                self.encoder.gamma,
                seed,
            )?)),
            "phase-rff" => Ok(AnyEncoder::PhaseRff(PhaseRffEncoder::new(
                n,
                d,
                self.encoder.gamma,
                seed,
            )?)),
            other => Err(Error::BadConfig {
                field: "encoder.kind".into(),
                what: format!("unknown kind {other:?}"),
            }),
        }
    }

    pub fn build_schedule(&self) -> Result<VarianceSchedule> {
        VarianceSchedule::linear(
            self.schedule.t_max,
            self.schedule.beta_start,
            self.schedule.beta_end,
        )
    }

    pub fn guidance_config(&self) -> Result<GuidanceConfig> {
        let schedule = match self.guidance.eta_schedule.as_str() {
            "variance-scaled" => EtaSchedule::VarianceScaled,
            "constant" => EtaSchedule::Constant,
            other => {
                return Err(Error::BadConfig {
                    field: "guidance.eta_schedule".into(),
                    what: format!("unknown schedule {other:?}"),
                });
            }
        };
        Ok(GuidanceConfig {
            eta: self.guidance.eta,
            schedule,
            tau: self.guidance.tau,
            every: self.guidance.every,
            rsvd: RsvdConfig {
                k: self.guidance.k,
                p: self.guidance.p,
                q: self.guidance.q,
            },
            seed: self.run.seed,
        })
    }

    /// The rsvd configuration alone, for score and certificate commands.
    pub fn rsvd_config(&self) -> RsvdConfig {
        RsvdConfig {
            k: self.guidance.k,
            p: self.guidance.p,
            q: self.guidance.q,
        }
    }
}

fn bad(field: &str, e: Error) -> Error {
    match e {
        already @ Error::BadConfig { .. } => already,
        other => Error::BadConfig {
            field: field.to_string(),
            what: other.to_string(),
        },
    }
}
