use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use knnfl::scenarios::{optimized_mse, EpsRule, Estimator, KRule, ScenarioSpec};
use knnfl::stats::{loglog_fit, LogLogFit};

use super::export::parse_scenario;
use super::{solver_config, write_text, Context};
use crate::config::{merge, output_dir, require, write_resolved, SCHEMA_VERSION};
use crate::error::{usage, CliResult};

#[derive(Args, Serialize, Deserialize, Default, Debug, Clone)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: Option<String>,
    /// Comma-separated sample sizes [default: 1000]
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Replicates per size [default: 20]
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Base seed; replicate r uses seed + r [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dimension for s3 and s4 [default: 2]
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Comma-separated estimators: knnfl, epsfl, knnreg [default: knnfl,knnreg]
    #[arg(long, value_delimiter = ',')]
    pub estimators: Option<Vec<String>>,
    /// Fixed K for the K-NN fused lasso [default: 5]
    #[arg(long)]
    pub k: Option<usize>,
    /// Use K = ceil(ln(n)^p) instead of a fixed K
    #[arg(long)]
    pub k_log_power: Option<f64>,
    /// Epsilon rule scale * ln(n)^log_power / n^(1/root) [defaults: 1, 0.5, d]
    #[arg(long)]
    pub eps_scale: Option<f64>,
    #[arg(long)]
    pub eps_log_power: Option<f64>,
    #[arg(long)]
    pub eps_root: Option<f64>,
    /// Comma-separated penalty grid for the fused lassos [default: 25 values from 20 down to 0.02]
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    /// Comma-separated K grid for K-NN regression [default: 1..=100]
    #[arg(long, value_delimiter = ',')]
    pub knnreg_grid: Option<Vec<usize>>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct CurveRecord {
    n: usize,
    estimator: String,
    best_param: f64,
    best_mse: f64,
    best_stderr: f64,
    failures: usize,
    grid: Vec<f64>,
    mse: Vec<f64>,
    stderr: Vec<f64>,
}

#[derive(Serialize)]
struct RateRecord {
    estimator: String,
    fit: LogLogFit,
}

#[derive(Serialize)]
struct SimulateReport {
    schema_version: u32,
    scenario: String,
    results: Vec<CurveRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    rates: Vec<RateRecord>,
}

pub fn run(flags: &SimulateArgs, ctx: &Context) -> CliResult<()> {
    let mut a: SimulateArgs = merge(flags, &ctx.file, &[&["k", "k_log_power"]])?;
    let name = parse_scenario(&require(&a.scenario, "scenario")?)?;
    let sizes = a.sizes.get_or_insert_with(|| vec![1000]).clone();
    let replicates = *a.replicates.get_or_insert(20);
    let seed = *a.seed.get_or_insert(0);
    let d = *a.d.get_or_insert(2);
    let estimator_names = a
        .estimators
        .get_or_insert_with(|| vec!["knnfl".into(), "knnreg".into()])
        .clone();
    let lambdas = a
        .lambdas
        .get_or_insert_with(|| knnfl::cv::log_grid(20.0, 1e-3, 25))
        .clone();
    let knnreg_grid: Vec<f64> = a
        .knnreg_grid
        .get_or_insert_with(|| (1..=100).collect())
        .iter()
        .map(|&k| k as f64)
        .collect();
    let k_rule = match a.k_log_power {
        Some(p) => KRule::LogPower { power: p, scale: 1.0 },
        None => KRule::Fixed {
            k: *a.k.get_or_insert(5),
        },
    };
    let eps_rule = EpsRule {
        scale: *a.eps_scale.get_or_insert(1.0),
        log_power: *a.eps_log_power.get_or_insert(0.5),
        root: *a.eps_root.get_or_insert(d as f64),
    };
    if sizes.is_empty() || replicates == 0 || lambdas.is_empty() || knnreg_grid.is_empty() {
        return Err(usage("sizes, replicates and grids must be non-empty"));
    }
    let estimators: Vec<Estimator> = estimator_names
        .iter()
        .map(|e| match e.as_str() {
            "knnfl" => Ok(Estimator::KnnFl { k: k_rule }),
            "epsfl" => Ok(Estimator::EpsFl { eps: eps_rule }),
            "knnreg" => Ok(Estimator::KnnReg),
            other => Err(usage(format!(
                "unknown estimator {other:?}; valid: knnfl, epsfl, knnreg"
            ))),
        })
        .collect::<CliResult<_>>()?;
    let mut specs = Vec::new();
    for &n in &sizes {
        let mut spec = ScenarioSpec::new(name, n, d, seed).map_err(|e| usage(e.to_string()))?;
        if let Some(s2) = a.sigma2 {
            spec = spec.with_sigma2(s2);
        }
        spec.validate().map_err(|e| usage(e.to_string()))?;
        specs.push(spec);
    }
    let config = solver_config(a.tol)?;
    let dir = output_dir(&a.out)?;
    write_resolved(&dir, "simulate", ctx.threads, &a)?;

    let mut results = Vec::new();
    for spec in &specs {
        for est in &estimators {
            let grid = if matches!(est, Estimator::KnnReg) {
                &knnreg_grid
            } else {
                &lambdas
            };
            let opt = optimized_mse(spec, est, grid, replicates, &config)?;
            results.push(CurveRecord {
                n: spec.n,
                estimator: est.label().to_string(),
                best_param: opt.best_param,
                best_mse: opt.best_mse,
                best_stderr: opt.stderr[opt.best_index],
                failures: opt.failures,
                grid: opt.grid,
                mse: opt.mse,
                stderr: opt.stderr,
            });
        }
    }
    let mut rates = Vec::new();
    if sizes.len() >= 4 {
        for est in &estimators {
            let pts: Vec<&CurveRecord> = results.iter().filter(|r| r.estimator == est.label()).collect();
            let x: Vec<f64> = pts.iter().map(|r| r.n as f64).collect();
            let y: Vec<f64> = pts.iter().map(|r| r.best_mse).collect();
            if y.iter().all(|v| *v > 1e-12 && v.is_finite()) {
                rates.push(RateRecord {
                    estimator: est.label().to_string(),
                    fit: loglog_fit(&x, &y),
                });
            }
        }
    }

    let header = [
        "scenario",
        "n",
        "estimator",
        "best_param",
        "best_mse",
        "stderr",
        "failures",
        "schema_version",
    ]
    .map(String::from);
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| {
            vec![
                name.to_string(),
                r.n.to_string(),
                r.estimator.clone(),
                r.best_param.to_string(),
                r.best_mse.to_string(),
                r.best_stderr.to_string(),
                r.failures.to_string(),
                SCHEMA_VERSION.to_string(),
            ]
        })
        .collect();
    let mut buf = Vec::new();
    knnfl::io::write_csv(&mut buf, &header, &rows)?;
    write_text(&dir.join("simulate.csv"), buf)?;
    knnfl::io::write_json(
        &dir.join("curves.json"),
        &SimulateReport {
            schema_version: SCHEMA_VERSION,
            scenario: name.to_string(),
            results,
            rates,
        },
    )?;
    Ok(())
}
