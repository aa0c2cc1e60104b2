//! Drives the compiled binary through every subcommand on a small config,
//! checking artifact shape, reproducibility, and the error surface.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use jepa_guide::config::{config_hash, ExperimentConfig};
use jepa_guide::diffusion::guided_sample;
use jepa_guide::seeding::derive_seed;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_jepa-guide");
const SEED: u64 = 11;

const CONFIG: &str = r#"
[mixture]
weights = [0.8, 0.2]
means = [[-2.0, 0.0], [2.0, 0.0]]
variances = [0.16, 0.16]

[encoder]
kind = "tanh-mlp"
output_dim = 12
hidden_dim = 8
seed = 7

[schedule]
t_max = 40

[guidance]
eta = 1.0
tau = 0.8
every = 2
k = 2
p = 0
q = 1

[run]
samples = 24
seed = 2024

[sweep]
etas = [0.0, 1.0]
"#;

fn write_config(dir: &Path) -> PathBuf {
    let path = dir.join("exp.toml");
    fs::write(&path, CONFIG).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

fn without_created_line(manifest: &str) -> String {
    manifest
        .lines()
        .filter(|l| !l.starts_with("created_unix="))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Data rows of a CSV (comment and header lines dropped), parsed as f64.
fn data_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .filter_map(|l| {
            l.split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .ok()
        })
        .collect()
}

#[test]
fn sample_rerun_is_byte_identical_and_hash_stamped() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path());
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    for out in [&out_a, &out_b] {
        run_ok(&[
            "sample",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            &SEED.to_string(),
        ]);
    }

    let samples_a = read(&out_a.join("samples.csv"));
    let samples_b = read(&out_b.join("samples.csv"));
    assert_eq!(samples_a, samples_b);
    assert_eq!(
        read(&out_a.join("scatter.svg")),
        read(&out_b.join("scatter.svg"))
    );
    assert_eq!(
        without_created_line(&read(&out_a.join("manifest.txt"))),
        without_created_line(&read(&out_b.join("manifest.txt")))
    );

    let hash = config_hash(CONFIG.as_bytes());
    assert!(samples_a.starts_with(&format!("# config={hash}\n")));
    assert_eq!(data_rows(&samples_a).len(), 24);
    assert!(read(&out_a.join("manifest.txt")).contains(&format!("seed={SEED}")));
}

#[test]
fn guided_sample_trace_replays_chain_zero() {
    let tmp = TempDir::new().unwrap();
    let cfg_path = write_config(tmp.path());
    let out = tmp.path().join("g");
    run_ok(&[
        "guided-sample",
        "--config",
        cfg_path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        &SEED.to_string(),
    ]);

    let rows = data_rows(&read(&out.join("samples.csv")));
    assert_eq!(rows.len(), 24);

    // Batch chain i is seeded with derive_seed(seed, i); replaying chain 0
    // in process must land on samples.csv row 0 exactly.
    let cfg = ExperimentConfig::from_toml_str(CONFIG).unwrap();
    let gmm = cfg.build_mixture().unwrap();
    let schedule = cfg.build_schedule().unwrap();
    let encoder = cfg.build_encoder().unwrap();
    let mut g0 = cfg.guidance_config().unwrap();
    g0.seed = derive_seed(SEED, 0);
    let trace = guided_sample(encoder.as_dyn(), &gmm, &schedule, &g0, false).unwrap();
    assert_eq!(trace.final_sample, rows[0]);

    // The trace artifact carries one record per step and guidance columns
    // that are populated only on active steps.
    let trace_text = read(&out.join("trace.csv"));
    let body: Vec<&str> = trace_text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with('t'))
        .collect();
    assert_eq!(body.len(), 40);
    let with_guidance = body
        .iter()
        .filter(|l| !l.ends_with(",,") && !l.ends_with(','))
        .count();
    assert!(with_guidance > 0, "no guided steps recorded");
}

#[test]
fn score_and_certify_consume_sample_output() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path());
    let samples_dir = tmp.path().join("s");
    run_ok(&[
        "sample",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        samples_dir.to_str().unwrap(),
        "--seed",
        &SEED.to_string(),
    ]);
    let samples = samples_dir.join("samples.csv");

    let score_dir = tmp.path().join("scores");
    run_ok(&[
        "score",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        score_dir.to_str().unwrap(),
        "--input",
        samples.to_str().unwrap(),
        "--seed",
        "5",
    ]);
    let scores = data_rows(&read(&score_dir.join("scores.csv")));
    assert_eq!(scores.len(), 24);
    for row in &scores {
        assert!(row[1].is_finite() && row[2].is_finite());
        assert_eq!(row[3], 2.0, "full-rank Jacobian expected on R^2");
    }

    let cert_dir = tmp.path().join("certs");
    run_ok(&[
        "certify",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        cert_dir.to_str().unwrap(),
        "--input",
        samples.to_str().unwrap(),
        "--seed",
        "5",
    ]);
    let text = read(&cert_dir.join("certificates.csv"));
    let mut checked = 0;
    for line in text.lines().filter(|l| !l.starts_with('#') && !l.starts_with("index")) {
        let f: Vec<&str> = line.split(',').collect();
        let (js_exact, js_approx): (f64, f64) = (f[1].parse().unwrap(), f[2].parse().unwrap());
        let (e_rsvd, e_trunc): (f64, f64) = (f[3].parse().unwrap(), f[4].parse().unwrap());
        let (bound_rsvd, bound_trunc): (f64, f64) = (f[5].parse().unwrap(), f[6].parse().unwrap());
        assert!(((js_exact - js_approx) - (e_rsvd + e_trunc)).abs() <= 1e-8);
        assert!(e_rsvd.abs() <= bound_rsvd + 1e-12);
        assert!(e_trunc <= bound_trunc + 1e-12);
        checked += 1;
    }
    assert_eq!(checked, 24);
}

#[test]
fn spectrum_and_metrics_emit_expected_artifacts() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path());
    let samples_dir = tmp.path().join("s");
    run_ok(&[
        "sample",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        samples_dir.to_str().unwrap(),
        "--seed",
        &SEED.to_string(),
    ]);
    let samples = samples_dir.join("samples.csv");

    let spec_dir = tmp.path().join("spec");
    run_ok(&[
        "spectrum",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        spec_dir.to_str().unwrap(),
        "--input",
        samples.to_str().unwrap(),
    ]);
    let stats = data_rows(&read(&spec_dir.join("spectrum.csv")));
    assert_eq!(stats.len(), 2);
    let last_ratio = stats.last().unwrap()[3];
    assert!((last_ratio - 1.0).abs() <= 1e-12);

    let met_dir = tmp.path().join("met");
    run_ok(&[
        "metrics",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        met_dir.to_str().unwrap(),
        "--input",
        samples.to_str().unwrap(),
    ]);
    let metrics_text = read(&met_dir.join("metrics.csv"));
    for name in [
        "avg_knn_mean",
        "density",
        "coverage",
        "minority_generator_size",
        "minority_world_size",
        "minority_jaccard",
    ] {
        assert!(metrics_text.contains(&format!("\n{name},")), "missing {name}");
    }
    let membership = data_rows(&read(&met_dir.join("minority.csv")));
    assert_eq!(membership.len(), 24);
}

#[test]
fn sweep_rerun_is_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path());
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    for out in [&out_a, &out_b] {
        run_ok(&[
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            &SEED.to_string(),
        ]);
    }
    let a = read(&out_a.join("sweep.csv"));
    assert_eq!(a, read(&out_b.join("sweep.csv")));
    assert_eq!(data_rows(&a).len(), 2, "one row per sweep strength");
}

#[test]
fn failures_exit_nonzero_with_error_line() {
    let tmp = TempDir::new().unwrap();
    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, CONFIG.replace("k = 2", "k = 40")).unwrap();
    let out_dir = tmp.path().join("never");
    let out = run(&[
        "sample",
        "--config",
        bad.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--seed",
        "1",
    ]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.lines().any(|l| l.starts_with("error: ")),
        "stderr was: {stderr}"
    );
    assert!(stderr.contains("guidance.k"), "stderr was: {stderr}");
    assert!(!out_dir.exists(), "failed run must not leave artifacts");

    // A stochastic subcommand without --seed is a usage error.
    let cfg = write_config(tmp.path());
    let out = run(&[
        "sample",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
}
