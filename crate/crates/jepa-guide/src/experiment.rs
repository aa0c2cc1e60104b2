//! Config-driven pipelines writing reproducible artifacts.
//!
//! Every stage validates the config first, stamps each CSV with the config
//! hash, and derives all randomness from the seeds in the config, so a rerun
//! of the same config file produces byte-identical CSVs. The manifest's
//! `created_unix` line is the one intentional exception.

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::ExperimentConfig;
use crate::diffusion::{guided_batch, guided_sample, sample_batch, GaussianMixture};
use crate::error::{Error, Result};
use crate::matrix::format_float;
use crate::metrics::{
    avg_knn_distance, density_coverage, minority_select, MinoritySetSpec, SelectionKind,
    ThresholdMode,
};
use crate::plot::scatter_svg;
use crate::score::{certify, jepa_score_approx, jepa_score_exact, spectrum_stats, ScoreReport};
use crate::seeding::derive_seed;

/// What the pipeline should run. Input-taking commands read a points CSV
/// produced by an earlier `Sample`/`GuidedSample` run (or any file with the
/// same shape).
#[derive(Debug, Clone)]
pub enum Command {
    Sample,
    GuidedSample,
    Score { input: PathBuf },
    Certify { input: PathBuf },
    Spectrum { input: PathBuf },
    Metrics { input: PathBuf },
    Sweep,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::GuidedSample => "guided-sample",
            Command::Score { .. } => "score",
            Command::Certify { .. } => "certify",
            Command::Spectrum { .. } => "spectrum",
            Command::Metrics { .. } => "metrics",
            Command::Sweep => "sweep",
        }
    }
}

/// Validates, runs one command, writes its artifacts plus a manifest, and
/// returns the paths written (manifest last).
pub fn run_experiment(
    cfg: &ExperimentConfig,
    config_hash: &str,
    out_dir: &Path,
    command: &Command,
) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::Io {
        context: format!("creating output directory {}", out_dir.display()),
        source: e,
    })?;

    let mut files = match command {
        Command::Sample => stage_samples(cfg, config_hash, out_dir, false)?,
        Command::GuidedSample => stage_samples(cfg, config_hash, out_dir, true)?,
        Command::Score { input } => stage_score(cfg, config_hash, out_dir, input)?,
        Command::Certify { input } => stage_certify(cfg, config_hash, out_dir, input)?,
        Command::Spectrum { input } => stage_spectrum(cfg, config_hash, out_dir, input)?,
        Command::Metrics { input } => stage_metrics(cfg, config_hash, out_dir, input)?,
        Command::Sweep => stage_sweep(cfg, config_hash, out_dir)?,
    };

    let manifest = out_dir.join("manifest.txt");
    let created = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    write_text(
        &manifest,
        &format!(
            "config_hash={config_hash}\ncommand={}\nseed={}\nversion={}\ncreated_unix={created}\n",
            command.name(),
            cfg.run.seed,
            env!("CARGO_PKG_VERSION"),
        ),
    )?;
    files.push(manifest);
    Ok(files)
}

fn stage_samples(
    cfg: &ExperimentConfig,
    hash: &str,
    out_dir: &Path,
    guided: bool,
) -> Result<Vec<PathBuf>> {
    let gmm = cfg.build_mixture()?;
    let schedule = cfg.build_schedule()?;
    let encoder = cfg.build_encoder()?;
    let mut files = Vec::new();

    let batch = if guided {
        let g = cfg.guidance_config()?;
        guided_batch(&encoder, &gmm, &schedule, &g, cfg.run.samples)?
    } else {
        sample_batch(&gmm, &schedule, cfg.run.seed, cfg.run.samples)?
    };

    let samples_path = out_dir.join("samples.csv");
    write_text(&samples_path, &points_csv(hash, &batch))?;
    files.push(samples_path);

    if guided {
        // Re-run chain 0 of the batch with per-step records: batch chain i
        // is seeded with derive_seed(run.seed, i), so seed 0's chain is
        // reproducible in isolation.
        let mut g0 = cfg.guidance_config()?;
        g0.seed = derive_seed(cfg.run.seed, 0);
        let trace = guided_sample(encoder.as_dyn(), &gmm, &schedule, &g0, true)?;
        let trace_path = out_dir.join("trace.csv");
        write_text(
            &trace_path,
            &format!("# config={hash}\n{}", trace.to_csv()),
        )?;
        files.push(trace_path);
    }

    if cfg.dim() == 2 {
        let values = batch
            .iter()
            .map(|x| jepa_score_exact(encoder.as_dyn(), x).map(|s| s.value))
            .collect::<Result<Vec<f64>>>()?;
        let title = format!(
            "{} samples, spectral score (config {})",
            command_label(guided),
            &hash[..12.min(hash.len())]
        );
        let svg_path = out_dir.join("scatter.svg");
        write_text(&svg_path, &scatter_svg(&batch, &values, &title))?;
        files.push(svg_path);
    }
    Ok(files)
}

fn command_label(guided: bool) -> &'static str {
    if guided {
        "guided"
    } else {
        "unguided"
    }
}

fn stage_score(
    cfg: &ExperimentConfig,
    hash: &str,
    out_dir: &Path,
    input: &Path,
) -> Result<Vec<PathBuf>> {
    let encoder = cfg.build_encoder()?;
    let points = read_points(input)?;
    let rsvd_cfg = cfg.rsvd_config();
    let mut out = format!("# config={hash}\nindex,js_exact,js_approx,numerical_rank\n");
    for (i, x) in points.iter().enumerate() {
        let exact = jepa_score_exact(encoder.as_dyn(), x)?;
        let (approx, _) =
            jepa_score_approx(encoder.as_dyn(), x, &rsvd_cfg, derive_seed(cfg.run.seed, i as u64))?;
        out.push_str(&format!(
            "{i},{},{},{}\n",
            format_float(exact.value),
            format_float(approx),
            exact.rank
        ));
    }
    let path = out_dir.join("scores.csv");
    write_text(&path, &out)?;
    Ok(vec![path])
}

fn stage_certify(
    cfg: &ExperimentConfig,
    hash: &str,
    out_dir: &Path,
    input: &Path,
) -> Result<Vec<PathBuf>> {
    let encoder = cfg.build_encoder()?;
    let points = read_points(input)?;
    let rsvd_cfg = cfg.rsvd_config();
    let mut out = format!("# config={hash}\nindex,{}\n", ScoreReport::CSV_HEADER);
    for (i, x) in points.iter().enumerate() {
        let report = certify(
            encoder.as_dyn(),
            x,
            &rsvd_cfg,
            derive_seed(cfg.run.seed, i as u64),
        )?;
        out.push_str(&format!("{i},{}\n", report.to_csv_row()));
    }
    let path = out_dir.join("certificates.csv");
    write_text(&path, &out)?;
    Ok(vec![path])
}

fn stage_spectrum(
    cfg: &ExperimentConfig,
    hash: &str,
    out_dir: &Path,
    input: &Path,
) -> Result<Vec<PathBuf>> {
    let encoder = cfg.build_encoder()?;
    let points = read_points(input)?;
    let stats = spectrum_stats(encoder.as_dyn(), &points, None)?;
    let path = out_dir.join("spectrum.csv");
    write_text(&path, &format!("# config={hash}\n{}", stats.to_csv()))?;
    Ok(vec![path])
}

fn stage_metrics(
    cfg: &ExperimentConfig,
    hash: &str,
    out_dir: &Path,
    input: &Path,
) -> Result<Vec<PathBuf>> {
    let gmm = cfg.build_mixture()?;
    let encoder = cfg.build_encoder()?;
    let generated = read_points(input)?;
    let reference = reference_draw(&gmm, cfg);

    let knn = avg_knn_distance(&generated, &reference, cfg.metrics.knn_k)?;
    let knn_mean = knn.iter().sum::<f64>() / knn.len() as f64;
    let (density, coverage) = density_coverage(&generated, &reference, cfg.metrics.density_k)?;

    let frac = ThresholdMode::BottomFraction(cfg.metrics.minority_fraction);
    let generator_set = minority_select(
        &generated,
        &MinoritySetSpec {
            kind: SelectionKind::GeneratorCentric,
            threshold_mode: frac,
            knn_k: cfg.metrics.knn_k,
        },
        Some(&gmm),
        None,
    )?;
    let world_set = minority_select(
        &generated,
        &MinoritySetSpec {
            kind: SelectionKind::WorldCentric,
            threshold_mode: frac,
            knn_k: cfg.metrics.knn_k,
        },
        None,
        Some(encoder.as_dyn()),
    )?;
    let inter = generator_set.iter().filter(|i| world_set.contains(i)).count();
    let union = generator_set.len() + world_set.len() - inter;
    let jaccard = if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    };

    let mut summary = format!("# config={hash}\nmetric,value\n");
    summary.push_str(&format!("avg_knn_mean,{}\n", format_float(knn_mean)));
    summary.push_str(&format!("density,{}\n", format_float(density)));
    summary.push_str(&format!("coverage,{}\n", format_float(coverage)));
    summary.push_str(&format!("minority_generator_size,{}\n", generator_set.len()));
    summary.push_str(&format!("minority_world_size,{}\n", world_set.len()));
    summary.push_str(&format!("minority_jaccard,{}\n", format_float(jaccard)));
    let metrics_path = out_dir.join("metrics.csv");
    write_text(&metrics_path, &summary)?;

    let mut membership = format!("# config={hash}\nindex,generator_selected,world_selected\n");
    for i in 0..generated.len() {
        membership.push_str(&format!(
            "{i},{},{}\n",
            u8::from(generator_set.contains(&i)),
            u8::from(world_set.contains(&i))
        ));
    }
    let minority_path = out_dir.join("minority.csv");
    write_text(&minority_path, &membership)?;
    Ok(vec![metrics_path, minority_path])
}

fn stage_sweep(cfg: &ExperimentConfig, hash: &str, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if cfg.sweep.etas.is_empty() {
        return Err(Error::BadConfig {
            field: "sweep.etas".into(),
            what: "sweep needs at least one guidance strength".into(),
        });
    }
    let gmm = cfg.build_mixture()?;
    let schedule = cfg.build_schedule()?;
    let encoder = cfg.build_encoder()?;
    let reference = reference_draw(&gmm, cfg);
    let modes = gmm.n_components();

    let mut out = format!("# config={hash}\neta,mean_js,se_js");
    for j in 0..modes {
        out.push_str(&format!(",occupancy{j}"));
    }
    out.push_str(",density,coverage\n");

    for &eta in &cfg.sweep.etas {
        // All strengths share the same chain seeds, so rows differ only
        // through the guidance term itself.
        let mut g = cfg.guidance_config()?;
        g.eta = eta;
        let batch = guided_batch(&encoder, &gmm, &schedule, &g, cfg.run.samples)?;

        let scores = batch
            .iter()
            .map(|x| jepa_score_exact(encoder.as_dyn(), x).map(|s| s.value))
            .collect::<Result<Vec<f64>>>()?;
        let n = scores.len() as f64;
        let mean = scores.iter().sum::<f64>() / n;
        let var = scores.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();

        let occupancy = occupancy(&batch, &gmm);
        let (density, coverage) = density_coverage(&batch, &reference, cfg.metrics.density_k)?;

        out.push_str(&format!("{},{},{}", format_float(eta), format_float(mean), format_float(se)));
        for o in occupancy {
            out.push_str(&format!(",{}", format_float(o)));
        }
        out.push_str(&format!(",{},{}\n", format_float(density), format_float(coverage)));
    }
    let path = out_dir.join("sweep.csv");
    write_text(&path, &out)?;
    Ok(vec![path])
}

/// Fraction of points nearest to each mixture mean, in component order.
fn occupancy(batch: &[Vec<f64>], gmm: &GaussianMixture) -> Vec<f64> {
    let mut counts = vec![0usize; gmm.n_components()];
    for x in batch {
        let nearest = (0..gmm.n_components())
            .min_by(|&a, &b| {
                sq_dist(x, gmm.mean(a)).total_cmp(&sq_dist(x, gmm.mean(b)))
            })
            .unwrap();
        counts[nearest] += 1;
    }
    counts
        .iter()
        .map(|&c| c as f64 / batch.len() as f64)
        .collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn reference_draw(gmm: &GaussianMixture, cfg: &ExperimentConfig) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.metrics.reference_seed);
    (0..cfg.metrics.reference_count)
        .map(|_| gmm.sample(&mut rng))
        .collect()
}

/// Points CSV: config-hash comment, `x0..x{n-1}` header, one row per point.
pub fn points_csv(hash: &str, points: &[Vec<f64>]) -> String {
    let dim = points.first().map_or(0, Vec::len);
    let mut out = format!("# config={hash}\n");
    let header: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for p in points {
        let row: Vec<String> = p.iter().map(|v| format_float(*v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Reads a points CSV: `#` comments and blank lines are skipped, a leading
/// non-numeric line is treated as the header, and rows must be rectangular.
pub fn read_points(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        context: format!("reading points from {}", path.display()),
        source: e,
    })?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut saw_data_or_header = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        match parsed {
            Ok(row) => {
                if let Some(first) = rows.first() {
                    if row.len() != first.len() {
                        return Err(Error::Parse {
                            path: format!("{} line {}", path.display(), lineno + 1),
                            what: format!("expected {} fields, got {}", first.len(), row.len()),
                        });
                    }
                }
                rows.push(row);
                saw_data_or_header = true;
            }
            Err(_) if !saw_data_or_header => {
                // Header row.
                saw_data_or_header = true;
            }
            Err(_) => {
                return Err(Error::Parse {
                    path: format!("{} line {}", path.display(), lineno + 1),
                    what: "non-numeric field after data started".into(),
                });
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            path: path.display().to_string(),
            what: "no data rows".into(),
        });
    }
    Ok(rows)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        context: format!("writing {}", path.display()),
        source: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_csv_round_trips() {
        let pts = vec![vec![1.5, -2.25], vec![0.0, 3.5]];
        let text = points_csv("deadbeef", &pts);
        let dir = std::env::temp_dir().join("jepa-guide-points-test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("pts.csv");
        fs::write(&path, &text).unwrap();
        let back = read_points(&path).unwrap();
        assert_eq!(back, pts);
        fs::remove_file(&path).ok();
    }

    #[test]
    fn read_points_rejects_ragged_and_empty() {
        let dir = std::env::temp_dir().join("jepa-guide-points-test");
        fs::create_dir_all(&dir).unwrap();
        let ragged = dir.join("ragged.csv");
        fs::write(&ragged, "x0,x1\n1.0,2.0\n3.0\n").unwrap();
        assert!(matches!(read_points(&ragged), Err(Error::Parse { .. })));
        let empty = dir.join("empty.csv");
        fs::write(&empty, "# nothing\n").unwrap();
        assert!(matches!(read_points(&empty), Err(Error::Parse { .. })));
        fs::remove_file(&ragged).ok();
        fs::remove_file(&empty).ok();
    }
}
