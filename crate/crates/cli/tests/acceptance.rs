//! End-to-end acceptance checks for the experiment binary. Every test runs
//! pinned configs through the compiled CLI, reads back the CSV tables, and
//! prints exactly one "acceptance <name>: PASS|FAIL (...)" line; tolerances
//! are pinned next to each check. Seeds are fixed, so reruns are bit-stable.

use cliffvar_cli::stats::{linear_fit, mean_and_stderr};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

/// One acceptance criterion: collects failures, prints a single verdict
/// line, and panics with details if anything failed.
struct Criterion {
    name: &'static str,
    started: Instant,
    failed: usize,
    details: Vec<String>,
}

impl Criterion {
    fn new(name: &'static str) -> Self {
        Criterion { name, started: Instant::now(), failed: 0, details: Vec::new() }
    }

    fn check(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        if !ok {
            self.failed += 1;
            if self.details.len() < 20 {
                self.details.push(detail());
            }
        }
    }

    fn finish(self) {
        let verdict = if self.failed == 0 { "PASS" } else { "FAIL" };
        println!(
            "acceptance {}: {} ({:.1}s)",
            self.name,
            verdict,
            self.started.elapsed().as_secs_f64()
        );
        assert!(
            self.failed == 0,
            "{}: {} failed checks\n{}",
            self.name,
            self.failed,
            self.details.join("\n")
        );
    }
}

/// Writes the config, runs `cliffvar run` into a sibling directory, and
/// returns the output directory and the child's wall time in seconds.
fn run_config(dir_name: &str, config: &str) -> (PathBuf, f64, std::process::Output) {
    let base = Path::new(env!("CARGO_TARGET_TMPDIR")).join(dir_name);
    std::fs::create_dir_all(&base).unwrap();
    let config_path = base.join("config.json");
    std::fs::write(&config_path, config).unwrap();
    let out_dir = base.join("out");
    let started = Instant::now();
    let output = Command::new(env!("CARGO_BIN_EXE_cliffvar"))
        .arg("run")
        .arg(&config_path)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    (out_dir, started.elapsed().as_secs_f64(), output)
}

/// Named columns of a CSV file, all parsed as f64 (missing cells skipped).
fn csv_columns(path: &Path) -> BTreeMap<String, Vec<f64>> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let headers: Vec<String> =
        reader.headers().unwrap().iter().map(str::to_string).collect();
    let mut columns: BTreeMap<String, Vec<f64>> =
        headers.iter().map(|h| (h.clone(), Vec::new())).collect();
    for record in reader.records() {
        let record = record.unwrap();
        for (header, cell) in headers.iter().zip(record.iter()) {
            if let Ok(value) = cell.parse::<f64>() {
                columns.get_mut(header).unwrap().push(value);
            }
        }
    }
    columns
}

/// Per-group means of `values` keyed by the paired `keys` column.
fn group_by(keys: &[f64], values: &[f64]) -> BTreeMap<u64, Vec<f64>> {
    let mut groups: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for (&key, &value) in keys.iter().zip(values) {
        groups.entry(key as u64).or_default().push(value);
    }
    groups
}

fn log_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let lys: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (slope, _, r2) = linear_fit(xs, &lys).unwrap();
    (slope, r2)
}

/// Sampled squared-gradient means agree with a dense Monte Carlo reference
/// across n = 2..=10 and decay log-linearly in n.
#[test]
fn cross_validation_small_n() {
    let mut crit = Criterion::new("cross_validation_small_n");
    let config = r#"{
        "experiment": "variance_vs_n",
        "seed": 2028,
        "template": {"layers": 1},
        "n": [2, 3, 4, 5, 6, 7, 8, 9, 10],
        "dist": {"dist": "uniform"},
        "observable": {"kind": "zero_projector"},
        "parameter": 0,
        "k": 500,
        "architectures": 100,
        "dense_reference": {"draws": 500}
    }"#;
    let (out, wall, output) = run_config("cross_validation", config);
    crit.check(output.status.success(), || {
        format!("run failed: {}", String::from_utf8_lossy(&output.stderr))
    });
    crit.check(wall < 900.0, || format!("wall time {wall:.0}s exceeds 900s"));
    if output.status.success() {
        let cols = csv_columns(&out.join("variance_vs_n.csv"));
        let sampled = group_by(&cols["n"], &cols["estimate"]);
        let dense = group_by(&cols["n"], &cols["dense_estimate"]);
        crit.check(sampled.len() == 9, || format!("{} sizes, want 9", sampled.len()));
        let mut xs = Vec::new();
        let mut lys = Vec::new();
        for (&n, estimates) in &sampled {
            let (mean, se) = mean_and_stderr(estimates);
            let (dense_mean, dense_se) = mean_and_stderr(&dense[&n]);
            // Agreement within three combined standard errors at every size.
            let tolerance = 3.0 * (se * se + dense_se * dense_se).sqrt();
            crit.check((mean - dense_mean).abs() <= tolerance, || {
                format!("n={n}: sampled {mean:.3e} vs dense {dense_mean:.3e}, tol {tolerance:.3e}")
            });
            crit.check(mean > 0.0, || format!("n={n}: nonpositive mean {mean:.3e}"));
            xs.push(n as f64);
            lys.push(mean.ln());
        }
        let (slope, _, r2) = linear_fit(&xs, &lys).unwrap();
        crit.check(slope < 0.0, || format!("slope {slope:.3} not negative"));
        crit.check(r2 > 0.95, || format!("r^2 {r2:.3} below 0.95"));
    }
    crit.finish();
}

/// Squared bias and variance of the squared-gradient estimator both scale
/// as 1/K: log-log slopes within -1 +- 0.2 over K = 10..2000 at n = 5.
#[test]
fn error_scaling_vs_samples() {
    let mut crit = Criterion::new("error_scaling_vs_samples");
    let config = r#"{
        "experiment": "bias_vs_k",
        "seed": 2027,
        "template": {"layers": 1},
        "n": 5,
        "dist": {"dist": "uniform"},
        "observable": {"kind": "zero_projector"},
        "parameter": 0,
        "k_grid": [10, 20, 50, 100, 200, 500, 1000, 2000],
        "batch": 100,
        "architectures": 50,
        "truth": {"kind": "enumerate"}
    }"#;
    let (out, wall, output) = run_config("error_scaling", config);
    crit.check(output.status.success(), || {
        format!("run failed: {}", String::from_utf8_lossy(&output.stderr))
    });
    crit.check(wall < 900.0, || format!("wall time {wall:.0}s exceeds 900s"));
    if output.status.success() {
        let cols = csv_columns(&out.join("bias_vs_k.csv"));
        let lks: Vec<f64> = cols["k"].iter().map(|k| k.ln()).collect();
        for column in ["squared_bias", "estimator_variance"] {
            let (slope, r2) = log_fit(&lks, &cols[column]);
            crit.check((slope + 1.0).abs() <= 0.2, || {
                format!("{column}: slope {slope:.3} outside -1 +- 0.2")
            });
            crit.check(r2 > 0.9, || format!("{column}: r^2 {r2:.3} below 0.9"));
        }
    }
    crit.finish();
}

/// A 100-qubit second-order run (200-qubit doubled tableaus, K = 10^4)
/// finishes within the time budget and reports a finite estimate at
/// gamma = 1; per-size means keep decaying log-linearly up to n = 100.
#[test]
fn large_n_capability_and_decay() {
    let mut crit = Criterion::new("large_n_capability_and_decay");
    let capability = r#"{
        "experiment": "variance_vs_n",
        "seed": 2026,
        "template": {"layers": 50},
        "n": [100],
        "dist": {"dist": "uniform"},
        "observable": {"kind": "zero_projector"},
        "parameter": 0,
        "k": 10000,
        "architectures": 1
    }"#;
    let (out, wall, output) = run_config("large_n_capability", capability);
    crit.check(output.status.success(), || {
        format!("capability run failed: {}", String::from_utf8_lossy(&output.stderr))
    });
    crit.check(wall < 1800.0, || format!("capability wall {wall:.0}s exceeds 1800s"));
    if output.status.success() {
        let cols = csv_columns(&out.join("variance_vs_n.csv"));
        let estimate = cols["estimate"][0];
        crit.check(estimate.is_finite() && estimate > 0.0, || {
            format!("estimate {estimate:.3e} not finite positive")
        });
        crit.check(cols["gamma_total"][0] == 1.0, || {
            format!("gamma {} differs from 1", cols["gamma_total"][0])
        });
    }
    let decay = r#"{
        "experiment": "variance_vs_n",
        "seed": 2026,
        "template": {"layers": 50},
        "n": [20, 40, 60, 80, 100],
        "dist": {"dist": "uniform"},
        "observable": {"kind": "zero_projector"},
        "parameter": 0,
        "k": 5000,
        "architectures": 6
    }"#;
    let (out, wall, output) = run_config("large_n_decay", decay);
    crit.check(output.status.success(), || {
        format!("decay run failed: {}", String::from_utf8_lossy(&output.stderr))
    });
    crit.check(wall < 1800.0, || format!("decay wall {wall:.0}s exceeds 1800s"));
    if output.status.success() {
        let cols = csv_columns(&out.join("variance_vs_n.csv"));
        let groups = group_by(&cols["n"], &cols["estimate"]);
        crit.check(groups.len() == 5, || format!("{} sizes, want 5", groups.len()));
        let mut xs = Vec::new();
        let mut lys = Vec::new();
        for (&n, estimates) in &groups {
            let (mean, _) = mean_and_stderr(estimates);
            crit.check(mean > 0.0, || format!("n={n}: nonpositive mean {mean:.3e}"));
            xs.push(n as f64);
            lys.push(mean.ln());
        }
        let (slope, _, r2) = linear_fit(&xs, &lys).unwrap();
        crit.check(slope < 0.0, || format!("slope {slope:.4} not negative"));
        crit.check(r2 > 0.9, || format!("r^2 {r2:.4} below 0.9"));
    }
    crit.finish();
}
