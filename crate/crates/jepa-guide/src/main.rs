//! Thin command-line front end over [`jepa_guide::experiment`].
//!
//! Every subcommand loads a TOML config, runs one pipeline stage, and writes
//! CSV/SVG artifacts plus a manifest into `--out`. Stages that draw
//! randomness require an explicit `--seed`, which replaces `run.seed` from
//! the config. Exit code is 0 on success; failures print a single
//! `error: ...` line to stderr and exit nonzero.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use jepa_guide::config::ExperimentConfig;
use jepa_guide::experiment::{run_experiment, Command as Stage};

#[derive(Parser)]
#[command(name = "jepa-guide", version, about = "Spectral rarity scoring and guided diffusion sampling", long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Experiment config file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Directory for output artifacts; created if missing.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw unguided diffusion samples (samples.csv, scatter.svg in 2-D).
    Sample {
        #[command(flatten)]
        common: Common,
        /// Chain seed; replaces run.seed from the config.
        #[arg(long)]
        seed: u64,
    },
    /// Draw guided samples (samples.csv, trace.csv for chain 0, scatter.svg in 2-D).
    GuidedSample {
        #[command(flatten)]
        common: Common,
        /// Chain seed; replaces run.seed from the config.
        #[arg(long)]
        seed: u64,
    },
    /// Score points from a CSV with exact and compressed spectral scores (scores.csv).
    Score {
        #[command(flatten)]
        common: Common,
        /// Points CSV to score.
        #[arg(long)]
        input: PathBuf,
        /// Sketch seed; replaces run.seed from the config.
        #[arg(long)]
        seed: u64,
    },
    /// Write a full compression-error certificate per point (certificates.csv).
    Certify {
        #[command(flatten)]
        common: Common,
        /// Points CSV to certify.
        #[arg(long)]
        input: PathBuf,
        /// Sketch seed; replaces run.seed from the config.
        #[arg(long)]
        seed: u64,
    },
    /// Per-index singular-value statistics over a batch (spectrum.csv).
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// Points CSV to analyze.
        #[arg(long)]
        input: PathBuf,
    },
    /// Rarity metrics of a batch against a fresh reference draw (metrics.csv, minority.csv).
    Metrics {
        #[command(flatten)]
        common: Common,
        /// Points CSV to evaluate.
        #[arg(long)]
        input: PathBuf,
        /// Replaces metrics.reference_seed from the config.
        #[arg(long)]
        reference_seed: Option<u64>,
    },
    /// Guided runs across sweep.etas, one summary row per strength (sweep.csv).
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Chain seed; replaces run.seed from the config.
        #[arg(long)]
        seed: u64,
    },
}

impl Cmd {
    fn common(&self) -> &Common {
        match self {
            Cmd::Sample { common, .. }
            | Cmd::GuidedSample { common, .. }
            | Cmd::Score { common, .. }
            | Cmd::Certify { common, .. }
            | Cmd::Spectrum { common, .. }
            | Cmd::Metrics { common, .. }
            | Cmd::Sweep { common, .. } => common,
        }
    }
}

fn run(cli: Cli) -> jepa_guide::Result<()> {
    let common = cli.command.common();
    let (mut cfg, hash) = ExperimentConfig::load(&common.config)?;

    let stage = match &cli.command {
        Cmd::Sample { seed, .. } => {
            cfg.run.seed = *seed;
            Stage::Sample
        }
        Cmd::GuidedSample { seed, .. } => {
            cfg.run.seed = *seed;
            Stage::GuidedSample
        }
        Cmd::Score { input, seed, .. } => {
            cfg.run.seed = *seed;
            Stage::Score {
                input: input.clone(),
            }
        }
        Cmd::Certify { input, seed, .. } => {
            cfg.run.seed = *seed;
            Stage::Certify {
                input: input.clone(),
            }
        }
        Cmd::Spectrum { input, .. } => Stage::Spectrum {
            input: input.clone(),
        },
        Cmd::Metrics {
            input,
            reference_seed,
            ..
        } => {
            if let Some(s) = reference_seed {
                cfg.metrics.reference_seed = *s;
            }
            Stage::Metrics {
                input: input.clone(),
            }
        }
        Cmd::Sweep { seed, .. } => {
            cfg.run.seed = *seed;
            Stage::Sweep
        }
    };

    let files = run_experiment(&cfg, &hash, &common.out, &stage)?;
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
