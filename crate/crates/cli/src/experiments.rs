//! Experiment runners. Each produces one or two CSV tables plus a
//! summary.json with aggregate statistics and decay fits.
//!
//! Reproducibility contract: every row derives its own seeds from the master
//! seed through counter-based streams, so reruns of the same config produce
//! byte-identical CSV output except for the trailing wall_time_s column, and
//! any single row can be recomputed in isolation from the seeds it carries.

use crate::config::{
    ArchitectureScanConfig, BiasVsKConfig, BudgetSpec, DistSpec, ExperimentConfig,
    ObservableSpec, QuantitySpec, SingleEstimateConfig, TemplateSpec, TruthSpec,
    VarVsKConfig, VarianceVsNConfig,
};
use crate::stats::{linear_fit, mean_and_stderr, percentile};
use crate::template::{build, BuiltCircuit};
use anyhow::{Context, Result};
use cliffvar::{
    circuit_from_json, derive_rng, enumerate_exact, estimate_first_order,
    estimate_gradient_variance, estimate_second_order, estimate_squared_gradient,
    gamma_total, mc_average, param_mixtures, plan_samples, AngleDistribution,
    DenseQuantity, EstimateReport, EstimatorError, ExactSpec, Observable, ParamCircuit,
    PlanMode, SamplePlan, ShiftSign,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;
use serde_json::json;
use std::path::Path;
use std::time::Instant;

/// What a run produced, for the final console line.
pub struct RunOutput {
    pub rows: usize,
    pub files: Vec<String>,
}

/// A decorrelated seed for one sub-task of a master stream.
fn sub_seed(master: u64, stream: u64) -> u64 {
    derive_rng(master, stream).random()
}

/// A plan that pins the draw count instead of deriving it from an accuracy
/// target; the estimators only read `k` from it.
fn fixed_plan(k: u64, m: usize, norm_bound: f64) -> SamplePlan {
    SamplePlan {
        epsilon: 0.0,
        delta: 0.0,
        m,
        norm_bound,
        gamma_total: 1.0,
        k,
        mode: PlanMode::Convex,
    }
}

/// Exact counterpart of `estimate_squared_gradient` by weighted enumeration.
fn exact_squared_gradient(
    circuit: &ParamCircuit,
    observable: &Observable,
    dists: &[AngleDistribution],
    k: usize,
) -> Result<f64, EstimatorError> {
    use ShiftSign::{Minus, Plus};
    let pp = enumerate_exact(
        circuit,
        observable,
        dists,
        ExactSpec::SecondOrder(Some((k, Plus, Plus))),
    )?;
    let pm = enumerate_exact(
        circuit,
        observable,
        dists,
        ExactSpec::SecondOrder(Some((k, Plus, Minus))),
    )?;
    let mm = enumerate_exact(
        circuit,
        observable,
        dists,
        ExactSpec::SecondOrder(Some((k, Minus, Minus))),
    )?;
    Ok((pp - 2.0 * pm + mm) / 4.0)
}

/// Rewrite a drawn circuit into the sampling form: all-Z rotations, symmetry
/// centers folded into the fixed gates.
fn prepare(built: &BuiltCircuit) -> Result<(ParamCircuit, Vec<AngleDistribution>)> {
    let canonical = built.circuit.canonicalize_to_z();
    canonical
        .extract_symmetry_center(&built.dists)
        .context("symmetry center extraction")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path)
        .with_context(|| format!("create {}", path.display()))?;
    Ok(csv::Writer::from_writer(file))
}

fn write_summary(out: &Path, summary: &serde_json::Value) -> Result<()> {
    let path = out.join("summary.json");
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    std::fs::write(&path, text).with_context(|| format!("write {}", path.display()))
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

/// Log-log (or with `linear_x` log-linear) decay fit over the positive
/// values; null when fewer than two usable points remain.
fn decay_fit(xs: &[f64], ys: &[f64], linear_x: bool) -> serde_json::Value {
    let pairs: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(_, &y)| y > 0.0)
        .map(|(&x, &y)| (if linear_x { x } else { x.ln() }, y.ln()))
        .collect();
    let fx: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let fy: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    match linear_fit(&fx, &fy) {
        Some((slope, intercept, r2)) => json!({
            "slope": slope,
            "intercept": intercept,
            "r_squared": r2,
            "points": fx.len(),
        }),
        None => serde_json::Value::Null,
    }
}

pub fn run(config: &ExperimentConfig, out: &Path) -> Result<RunOutput> {
    match config {
        ExperimentConfig::VarianceVsN(c) => run_variance_vs_n(c, out),
        ExperimentConfig::BiasVsK(c) => run_vs_k(&VsKParams::bias(c), out),
        ExperimentConfig::VarVsK(c) => run_vs_k(&VsKParams::variance(c), out),
        ExperimentConfig::ArchitectureScan(c) => run_architecture_scan(c, out),
        ExperimentConfig::SingleEstimate(c) => run_single_estimate(c, out),
    }
}

fn run_variance_vs_n(c: &VarianceVsNConfig, out: &Path) -> Result<RunOutput> {
    let total = Instant::now();
    let file = "variance_vs_n.csv";
    let mut writer = csv_writer(&out.join(file))?;
    writer.write_record([
        "n",
        "arch_seed",
        "estimate",
        "stderr",
        "k",
        "gamma_total",
        "seed",
        "dense_estimate",
        "dense_stderr",
        "wall_time_s",
    ])?;
    let mut aggregates = Vec::new();
    let mut n_means = Vec::new();
    let mut rows = 0usize;
    let mut row_counter = 0u64;
    for &n in &c.n {
        let mut estimates = Vec::new();
        let mut dense_estimates = Vec::new();
        for _ in 0..c.architectures {
            let started = Instant::now();
            let arch_seed = sub_seed(c.seed, row_counter);
            row_counter += 1;
            let mut rng = ChaCha8Rng::seed_from_u64(arch_seed);
            let built = build(&c.template, &c.dist, &c.observable, n, &mut rng)?;
            let (prepared, laws) = prepare(&built)?;
            let plan = fixed_plan(c.k, prepared.m(), built.observable.norm_bound());
            let est_seed = sub_seed(arch_seed, 1);
            let report = estimate_squared_gradient(
                &prepared,
                &built.observable,
                &laws,
                c.parameter,
                &plan,
                est_seed,
            )?;
            let dense = match &c.dense_reference {
                Some(reference) => {
                    let mut dense_rng = derive_rng(arch_seed, 2);
                    Some(mc_average(
                        &built.circuit,
                        &built.observable,
                        &built.dists,
                        DenseQuantity::SquaredGradient(c.parameter),
                        reference.draws,
                        &mut dense_rng,
                    )?)
                }
                None => None,
            };
            writer.write_record([
                n.to_string(),
                arch_seed.to_string(),
                fmt(report.estimate),
                fmt(report.stderr),
                c.k.to_string(),
                fmt(report.gamma_total),
                est_seed.to_string(),
                fmt_opt(dense.map(|d| d.0)),
                fmt_opt(dense.map(|d| d.1)),
                fmt(started.elapsed().as_secs_f64()),
            ])?;
            rows += 1;
            estimates.push(report.estimate);
            if let Some((mean, _)) = dense {
                dense_estimates.push(mean);
            }
        }
        let (mean, stderr) = mean_and_stderr(&estimates);
        let dense_stats = if dense_estimates.is_empty() {
            None
        } else {
            Some(mean_and_stderr(&dense_estimates))
        };
        aggregates.push(json!({
            "n": n,
            "mean_estimate": mean,
            "stderr": stderr,
            "dense_mean": dense_stats.map(|d| d.0),
            "dense_stderr": dense_stats.map(|d| d.1),
        }));
        n_means.push((n as f64, mean));
    }
    writer.flush()?;
    let xs: Vec<f64> = n_means.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = n_means.iter().map(|p| p.1).collect();
    let summary = json!({
        "experiment": "variance_vs_n",
        "seed": c.seed,
        "rows": rows,
        "aggregates": aggregates,
        "fit": decay_fit(&xs, &ys, true),
        "wall_time_s": total.elapsed().as_secs_f64(),
    });
    write_summary(out, &summary)?;
    Ok(RunOutput { rows, files: vec![file.to_string(), "summary.json".to_string()] })
}

/// Shared shape of the bias_vs_k and var_vs_k runs.
struct VsKParams<'a> {
    name: &'static str,
    seed: u64,
    template: &'a TemplateSpec,
    n: usize,
    dist: &'a DistSpec,
    observable: &'a ObservableSpec,
    parameter: usize,
    k_grid: &'a [u64],
    batch: u64,
    architectures: u64,
    truth: Option<TruthSpec>,
}

impl<'a> VsKParams<'a> {
    fn bias(c: &'a BiasVsKConfig) -> Self {
        VsKParams {
            name: "bias_vs_k",
            seed: c.seed,
            template: &c.template,
            n: c.n,
            dist: &c.dist,
            observable: &c.observable,
            parameter: c.parameter,
            k_grid: &c.k_grid,
            batch: c.batch,
            architectures: c.architectures,
            truth: Some(c.truth),
        }
    }

    fn variance(c: &'a VarVsKConfig) -> Self {
        VsKParams {
            name: "var_vs_k",
            seed: c.seed,
            template: &c.template,
            n: c.n,
            dist: &c.dist,
            observable: &c.observable,
            parameter: c.parameter,
            k_grid: &c.k_grid,
            batch: c.batch,
            architectures: c.architectures,
            truth: None,
        }
    }
}

fn run_vs_k(p: &VsKParams, out: &Path) -> Result<RunOutput> {
    let total = Instant::now();
    let grid = p.k_grid;
    // per grid index, across architectures
    let mut sq_biases: Vec<Vec<f64>> = vec![Vec::new(); grid.len()];
    let mut variances: Vec<Vec<f64>> = vec![Vec::new(); grid.len()];
    let mut grid_seconds = vec![0.0f64; grid.len()];
    let mut gamma = 1.0;
    for arch in 0..p.architectures {
        let arch_seed = sub_seed(p.seed, arch);
        let mut rng = ChaCha8Rng::seed_from_u64(arch_seed);
        let built = build(p.template, p.dist, p.observable, p.n, &mut rng)?;
        let (prepared, laws) = prepare(&built)?;
        let truth = match p.truth {
            Some(TruthSpec::Enumerate) => exact_squared_gradient(
                &prepared,
                &built.observable,
                &laws,
                p.parameter,
            )?,
            Some(TruthSpec::DenseMc { draws }) => {
                let mut dense_rng = derive_rng(arch_seed, 3);
                mc_average(
                    &built.circuit,
                    &built.observable,
                    &built.dists,
                    DenseQuantity::SquaredGradient(p.parameter),
                    draws,
                    &mut dense_rng,
                )?
                .0
            }
            None => 0.0,
        };
        for (gi, &k) in grid.iter().enumerate() {
            let started = Instant::now();
            let plan = fixed_plan(k, prepared.m(), built.observable.norm_bound());
            let mut batch_estimates = Vec::with_capacity(p.batch as usize);
            for b in 0..p.batch {
                let est_seed = sub_seed(arch_seed, 0x100 + gi as u64 * p.batch + b);
                let report = estimate_squared_gradient(
                    &prepared,
                    &built.observable,
                    &laws,
                    p.parameter,
                    &plan,
                    est_seed,
                )?;
                gamma = report.gamma_total;
                batch_estimates.push(report.estimate);
            }
            let batch_mean =
                batch_estimates.iter().sum::<f64>() / batch_estimates.len() as f64;
            if p.truth.is_some() {
                let bias = batch_mean - truth;
                sq_biases[gi].push(bias * bias);
            }
            let var = if batch_estimates.len() > 1 {
                batch_estimates
                    .iter()
                    .map(|v| (v - batch_mean) * (v - batch_mean))
                    .sum::<f64>()
                    / (batch_estimates.len() - 1) as f64
            } else {
                0.0
            };
            variances[gi].push(var);
            grid_seconds[gi] += started.elapsed().as_secs_f64();
        }
    }
    let file = format!("{}.csv", p.name);
    let mut writer = csv_writer(&out.join(&file))?;
    writer.write_record([
        "k",
        "squared_bias",
        "estimator_variance",
        "percentile_20",
        "percentile_80",
        "gamma_total",
        "seed",
        "wall_time_s",
    ])?;
    let mut bias_means = Vec::new();
    let mut var_means = Vec::new();
    for (gi, &k) in grid.iter().enumerate() {
        let bias_mean = if p.truth.is_some() {
            Some(mean_and_stderr(&sq_biases[gi]).0)
        } else {
            None
        };
        let var_mean = mean_and_stderr(&variances[gi]).0;
        // Scatter band across architectures of the experiment's own metric.
        let band = if p.truth.is_some() { &sq_biases[gi] } else { &variances[gi] };
        writer.write_record([
            k.to_string(),
            fmt_opt(bias_mean),
            fmt(var_mean),
            fmt(percentile(band, 20.0)),
            fmt(percentile(band, 80.0)),
            fmt(gamma),
            p.seed.to_string(),
            fmt(grid_seconds[gi]),
        ])?;
        if let Some(b) = bias_mean {
            bias_means.push(b);
        }
        var_means.push(var_mean);
    }
    writer.flush()?;
    let ks: Vec<f64> = grid.iter().map(|&k| k as f64).collect();
    let mut fits = serde_json::Map::new();
    if p.truth.is_some() {
        fits.insert("squared_bias".into(), decay_fit(&ks, &bias_means, false));
    }
    fits.insert("estimator_variance".into(), decay_fit(&ks, &var_means, false));
    let summary = json!({
        "experiment": p.name,
        "seed": p.seed,
        "rows": grid.len(),
        "fits": fits,
        "wall_time_s": total.elapsed().as_secs_f64(),
    });
    write_summary(out, &summary)?;
    Ok(RunOutput { rows: grid.len(), files: vec![file, "summary.json".to_string()] })
}

fn run_architecture_scan(c: &ArchitectureScanConfig, out: &Path) -> Result<RunOutput> {
    let total = Instant::now();
    let arch_file = "architecture_scan.csv";
    let param_file = "architecture_scan_params.csv";
    let mut arch_writer = csv_writer(&out.join(arch_file))?;
    arch_writer.write_record([
        "arch_index",
        "arch_seed",
        "parameters",
        "mean_cost",
        "mean_cost_stderr",
        "mean_variance",
        "dense_mean_cost",
        "dense_mean_cost_stderr",
        "k",
        "gamma_total",
        "wall_time_s",
    ])?;
    let mut param_writer = csv_writer(&out.join(param_file))?;
    param_writer.write_record([
        "arch_index",
        "arch_seed",
        "rank",
        "parameter",
        "estimate",
        "stderr",
        "k_used",
        "gamma_total",
        "seed",
        "dense_estimate",
        "dense_stderr",
        "wall_time_s",
    ])?;
    let mut rows = 0usize;
    let mut arch_summaries = Vec::new();
    for arch in 0..c.architectures {
        let started = Instant::now();
        let arch_seed = sub_seed(c.seed, arch);
        let mut rng = ChaCha8Rng::seed_from_u64(arch_seed);
        let built = build(&c.template, &c.dist, &c.observable, c.n, &mut rng)?;
        let (prepared, laws) = prepare(&built)?;
        let m = prepared.m();
        // A parameterless draw is deterministic: one sample evaluates it.
        let cost_plan =
            fixed_plan(if m == 0 { 1 } else { c.k }, m, built.observable.norm_bound());
        let cost = estimate_first_order(
            &prepared,
            &built.observable,
            &laws,
            None,
            &cost_plan,
            sub_seed(arch_seed, 1),
        )?;
        let dense_cost = match &c.dense_reference {
            Some(reference) => {
                let mut dense_rng = derive_rng(arch_seed, 2);
                Some(mc_average(
                    &built.circuit,
                    &built.observable,
                    &built.dists,
                    DenseQuantity::Cost,
                    reference.draws,
                    &mut dense_rng,
                )?)
            }
            None => None,
        };
        let plan = fixed_plan(c.k, m, built.observable.norm_bound());
        let mut reports = Vec::with_capacity(m);
        for parameter in 0..m {
            let est_seed = sub_seed(arch_seed, 0x100 + parameter as u64);
            let report = estimate_gradient_variance(
                &prepared,
                &built.observable,
                &laws,
                parameter,
                &plan,
                est_seed,
            )?;
            let dense = match &c.dense_reference {
                Some(reference) => {
                    let mut dense_rng = derive_rng(arch_seed, 0x10000 + parameter as u64);
                    let (m2, se2) = mc_average(
                        &built.circuit,
                        &built.observable,
                        &built.dists,
                        DenseQuantity::SquaredGradient(parameter),
                        reference.draws,
                        &mut dense_rng,
                    )?;
                    let (m1, se1) = mc_average(
                        &built.circuit,
                        &built.observable,
                        &built.dists,
                        DenseQuantity::Gradient(parameter),
                        reference.draws,
                        &mut dense_rng,
                    )?;
                    let variance = m2 - m1 * m1;
                    let stderr =
                        (se2 * se2 + 4.0 * m1 * m1 * se1 * se1).sqrt();
                    Some((variance, stderr))
                }
                None => None,
            };
            reports.push((parameter, report, dense));
        }
        reports.sort_by(|a, b| b.1.estimate.total_cmp(&a.1.estimate));
        let mean_variance = if m == 0 {
            0.0
        } else {
            reports.iter().map(|r| r.1.estimate).sum::<f64>() / m as f64
        };
        for (rank, (parameter, report, dense)) in reports.iter().enumerate() {
            param_writer.write_record([
                arch.to_string(),
                arch_seed.to_string(),
                rank.to_string(),
                parameter.to_string(),
                fmt(report.estimate),
                fmt(report.stderr),
                report.k_used.to_string(),
                fmt(report.gamma_total),
                report.seed.to_string(),
                fmt_opt(dense.map(|d| d.0)),
                fmt_opt(dense.map(|d| d.1)),
                fmt(report.wall_time_s),
            ])?;
            rows += 1;
        }
        arch_writer.write_record([
            arch.to_string(),
            arch_seed.to_string(),
            m.to_string(),
            fmt(cost.estimate),
            fmt(cost.stderr),
            fmt(mean_variance),
            fmt_opt(dense_cost.map(|d| d.0)),
            fmt_opt(dense_cost.map(|d| d.1)),
            c.k.to_string(),
            fmt(cost.gamma_total),
            fmt(started.elapsed().as_secs_f64()),
        ])?;
        rows += 1;
        arch_summaries.push(json!({
            "arch_index": arch,
            "arch_seed": arch_seed,
            "parameters": m,
            "mean_cost": cost.estimate,
            "mean_variance": mean_variance,
        }));
    }
    arch_writer.flush()?;
    param_writer.flush()?;
    let summary = json!({
        "experiment": "architecture_scan",
        "seed": c.seed,
        "rows": rows,
        "architectures": arch_summaries,
        "wall_time_s": total.elapsed().as_secs_f64(),
    });
    write_summary(out, &summary)?;
    Ok(RunOutput {
        rows,
        files: vec![
            arch_file.to_string(),
            param_file.to_string(),
            "summary.json".to_string(),
        ],
    })
}

fn run_single_estimate(c: &SingleEstimateConfig, out: &Path) -> Result<RunOutput> {
    let total = Instant::now();
    let text = serde_json::to_string(&c.circuit)?;
    let (circuit, dists, observable) = circuit_from_json(&text)?;
    let canonical = circuit.canonicalize_to_z();
    let (prepared, laws) = canonical
        .extract_symmetry_center(&dists)
        .context("symmetry center extraction")?;
    let order = match c.quantity {
        QuantitySpec::MeanCost | QuantitySpec::Gradient { .. } => 1,
        _ => 2,
    };
    let mixtures = param_mixtures(&prepared, &laws, order)?;
    let plan = match c.budget {
        BudgetSpec::Fixed(budget) => {
            fixed_plan(budget.k, prepared.m(), observable.norm_bound())
        }
        BudgetSpec::Accuracy(budget) => plan_samples(
            budget.epsilon,
            budget.delta,
            prepared.m(),
            observable.norm_bound(),
            gamma_total(&mixtures),
        )?,
    };
    let report = match c.quantity {
        QuantitySpec::MeanCost => {
            estimate_first_order(&prepared, &observable, &laws, None, &plan, c.seed)?
        }
        QuantitySpec::MeanSquaredCost => {
            estimate_second_order(&prepared, &observable, &laws, None, &plan, c.seed)?
        }
        QuantitySpec::Gradient { parameter } => {
            estimate_gradient(&prepared, &observable, &laws, parameter, &plan, c.seed)?
        }
        QuantitySpec::SquaredGradient { parameter } => estimate_squared_gradient(
            &prepared,
            &observable,
            &laws,
            parameter,
            &plan,
            c.seed,
        )?,
        QuantitySpec::GradientVariance { parameter } => estimate_gradient_variance(
            &prepared,
            &observable,
            &laws,
            parameter,
            &plan,
            c.seed,
        )?,
    };
    let file = "single_estimate.csv";
    let mut writer = csv_writer(&out.join(file))?;
    writer.write_record([
        "quantity",
        "estimate",
        "stderr",
        "k_used",
        "gamma_total",
        "seed",
        "wall_time_s",
    ])?;
    writer.write_record([
        report.quantity.clone(),
        fmt(report.estimate),
        fmt(report.stderr),
        report.k_used.to_string(),
        fmt(report.gamma_total),
        report.seed.to_string(),
        fmt(report.wall_time_s),
    ])?;
    writer.flush()?;
    let summary = json!({
        "experiment": "single_estimate",
        "seed": c.seed,
        "rows": 1,
        "report": {
            "quantity": report.quantity,
            "estimate": report.estimate,
            "stderr": report.stderr,
            "k_used": report.k_used,
            "gamma_total": report.gamma_total,
        },
        "plan_k": plan.k,
        "wall_time_s": total.elapsed().as_secs_f64(),
    });
    write_summary(out, &summary)?;
    Ok(RunOutput { rows: 1, files: vec![file.to_string(), "summary.json".to_string()] })
}

/// E[dC/dtheta_k] = (E[C(theta + pi/2 e_k)] - E[C(theta - pi/2 e_k)]) / 2.
fn estimate_gradient(
    circuit: &ParamCircuit,
    observable: &Observable,
    dists: &[AngleDistribution],
    k: usize,
    plan: &SamplePlan,
    master_seed: u64,
) -> Result<EstimateReport, EstimatorError> {
    let started = Instant::now();
    let plus = estimate_first_order(
        circuit,
        observable,
        dists,
        Some((k, ShiftSign::Plus)),
        plan,
        sub_seed(master_seed, 0),
    )?;
    let minus = estimate_first_order(
        circuit,
        observable,
        dists,
        Some((k, ShiftSign::Minus)),
        plan,
        sub_seed(master_seed, 1),
    )?;
    Ok(EstimateReport {
        quantity: format!("gradient[parameter={k}]"),
        estimate: (plus.estimate - minus.estimate) / 2.0,
        k_used: 2 * plan.k,
        stderr: (plus.stderr * plus.stderr + minus.stderr * minus.stderr).sqrt() / 2.0,
        gamma_total: plus.gamma_total,
        seed: master_seed,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}
