use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use knnfl::scenarios::{Estimator, KRule, ScenarioName};
use knnfl::theory::{
    aerr_scaling, degree_check, embedding_suite, manifold_contrast, penalty_scaling, radius_scaling, rate_experiment,
    uniform_cloud, AerrConfig, AerrSignal, ContrastConfig, EmbeddingConfig, PenaltyConfig, RadiusConfig, RateConfig,
    ScalingReport,
};

use super::{write_text, Context};
use crate::config::{merge, output_dir, write_resolved, SCHEMA_VERSION};
use crate::error::{usage, CliError, CliResult};

const ALL_CHECKS: [&str; 7] = ["embedding", "radius", "degree", "penalty", "aerr", "rate", "contrast"];

#[derive(Args, Serialize, Deserialize, Default, Debug, Clone)]
#[serde(default, deny_unknown_fields)]
pub struct TheoryArgs {
    /// Comma-separated checks: embedding, radius, degree, penalty, aerr, rate, contrast
    /// [default: embedding,radius,degree,penalty,aerr]
    #[arg(long, value_delimiter = ',')]
    pub checks: Option<Vec<String>>,
    /// Dimension [default: 2]
    #[arg(long)]
    pub d: Option<usize>,
    /// Base seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replicates per size in scaling checks [default: 5]
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Comma-separated sizes for scaling checks [default: 500,1000,2000,4000]
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Points per cloud in the embedding check [default: 500]
    #[arg(long)]
    pub embedding_n: Option<usize>,
    /// Clouds in the embedding check [default: 50]
    #[arg(long)]
    pub embedding_clouds: Option<usize>,
    /// K of the embedding check [default: ceil(ln(n)^2)]
    #[arg(long)]
    pub embedding_k: Option<usize>,
    /// Mesh resolution N of the embedding check [default: derived from n, K and d]
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Points per cloud in the degree check [default: 2000]
    #[arg(long)]
    pub degree_n: Option<usize>,
    /// K of the degree check [default: 5]
    #[arg(long)]
    pub degree_k: Option<usize>,
    /// Clouds in the degree check [default: 50]
    #[arg(long)]
    pub degree_clouds: Option<usize>,
    /// Degree constant tau_d [default: kissing number of d]
    #[arg(long)]
    pub tau: Option<f64>,
    /// Half-width of the radius slope band around -1/d [default: 0.1]
    #[arg(long)]
    pub radius_tol: Option<f64>,
    /// Fixed K of the penalty check [default: 5]
    #[arg(long)]
    pub penalty_k: Option<usize>,
    /// Half-width of the penalty slope band around 1 - 1/d [default: 0.12]
    #[arg(long)]
    pub penalty_tol: Option<f64>,
    /// Fresh query points per approximation-error estimate [default: 20000]
    #[arg(long)]
    pub aerr_queries: Option<usize>,
    /// Rate slope band [default: -0.8 to -0.3 for d = 2, -1/d - 0.3 to -1/d + 0.2 otherwise]
    #[arg(long, allow_hyphen_values = true)]
    pub rate_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub rate_max: Option<f64>,
    /// Sheet size of the manifold contrast [default: 2000]
    #[arg(long)]
    pub contrast_n_base: Option<usize>,
    /// Replicates of the manifold contrast [default: 10]
    #[arg(long)]
    pub contrast_replicates: Option<usize>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize, Clone, Copy, PartialEq, Eq, Debug)]
#[serde(rename_all = "snake_case")]
enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Serialize)]
struct CheckResult {
    name: String,
    status: Status,
    message: String,
    details: Value,
}

#[derive(Serialize)]
struct ValidationReport {
    schema_version: u32,
    passed: bool,
    checks: Vec<CheckResult>,
}

fn write_report_csv(dir: &Path, name: &str, report: &ScalingReport) -> CliResult<()> {
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    write_text(&dir.join(format!("{name}.csv")), buf)
}

fn slope_check(name: &str, report: &ScalingReport, lo: f64, hi: f64) -> CliResult<CheckResult> {
    let (status, message) = match report.slope() {
        Some(s) if (lo..=hi).contains(&s) => (Status::Pass, format!("slope {s:.4} within [{lo:.4}, {hi:.4}]")),
        Some(s) => (Status::Fail, format!("slope {s:.4} outside [{lo:.4}, {hi:.4}]")),
        None => (Status::Skipped, report.skipped.clone().unwrap_or_default()),
    };
    Ok(CheckResult {
        name: name.into(),
        status,
        message,
        details: serde_json::to_value(report)?,
    })
}

pub fn run(flags: &TheoryArgs, ctx: &Context) -> CliResult<()> {
    let mut a: TheoryArgs = merge(flags, &ctx.file, &[])?;
    let checks = a
        .checks
        .get_or_insert_with(|| {
            ["embedding", "radius", "degree", "penalty", "aerr"]
                .map(String::from)
                .to_vec()
        })
        .clone();
    if let Some(bad) = checks.iter().find(|c| !ALL_CHECKS.contains(&c.as_str())) {
        return Err(usage(format!(
            "unknown check {bad:?}; valid: {}",
            ALL_CHECKS.join(", ")
        )));
    }
    let d = *a.d.get_or_insert(2);
    if d == 0 {
        return Err(usage("--d must be at least 1"));
    }
    let df = d as f64;
    let seed = *a.seed.get_or_insert(0);
    let replicates = *a.replicates.get_or_insert(5);
    let sizes = a.sizes.get_or_insert_with(|| vec![500, 1000, 2000, 4000]).clone();
    let embedding_n = *a.embedding_n.get_or_insert(500);
    let embedding_clouds = *a.embedding_clouds.get_or_insert(50);
    let degree_n = *a.degree_n.get_or_insert(2000);
    let degree_k = *a.degree_k.get_or_insert(5);
    let degree_clouds = *a.degree_clouds.get_or_insert(50);
    let radius_tol = *a.radius_tol.get_or_insert(0.1);
    let penalty_k = *a.penalty_k.get_or_insert(5);
    let penalty_tol = *a.penalty_tol.get_or_insert(0.12);
    let aerr_queries = *a.aerr_queries.get_or_insert(20_000);
    let (rate_lo, rate_hi) = if d == 2 {
        (-0.8, -0.3)
    } else {
        (-1.0 / df - 0.3, -1.0 / df + 0.2)
    };
    let rate_min = *a.rate_min.get_or_insert(rate_lo);
    let rate_max = *a.rate_max.get_or_insert(rate_hi);
    let contrast_n_base = *a.contrast_n_base.get_or_insert(2000);
    let contrast_replicates = *a.contrast_replicates.get_or_insert(10);
    let dir = output_dir(&a.out)?;
    write_resolved(&dir, "validate-theory", ctx.threads, &a)?;

    let scenario = if d == 2 { ScenarioName::S1 } else { ScenarioName::S3 };
    let solver = knnfl::SolverConfig64::default();
    let mut results = Vec::new();
    for check in &checks {
        let result = match check.as_str() {
            "embedding" => {
                let cfg = EmbeddingConfig {
                    n: embedding_n,
                    d,
                    k: a.embedding_k,
                    resolution: a.resolution,
                    clouds: embedding_clouds,
                    seed,
                };
                let suite = embedding_suite(&cfg)?;
                let header = [
                    "seed",
                    "signal",
                    "omega_holds",
                    "lhs_1",
                    "rhs_1",
                    "holds_1",
                    "lhs_2",
                    "rhs_2",
                    "holds_2",
                ]
                .map(String::from);
                let rows: Vec<Vec<String>> = suite
                    .cases
                    .iter()
                    .map(|c| {
                        let k = &c.check;
                        vec![
                            c.seed.to_string(),
                            c.signal.clone(),
                            k.omega_holds.to_string(),
                            k.lhs_1.to_string(),
                            k.rhs_1.to_string(),
                            k.holds_1.to_string(),
                            k.lhs_2.to_string(),
                            k.rhs_2.to_string(),
                            k.holds_2.to_string(),
                        ]
                    })
                    .collect();
                let mut buf = Vec::new();
                knnfl::io::write_csv(&mut buf, &header, &rows)?;
                write_text(&dir.join("embedding.csv"), buf)?;
                let skipped = embedding_clouds - suite.omega_clouds;
                let (status, message) = if suite.omega_clouds == 0 {
                    (
                        Status::Skipped,
                        format!(
                            "connectivity event failed on all {embedding_clouds} clouds; inequalities not asserted"
                        ),
                    )
                } else if suite.conditional_failures > 0 {
                    (
                        Status::Fail,
                        format!(
                            "{} inequality violations while the event held",
                            suite.conditional_failures
                        ),
                    )
                } else {
                    (
                        Status::Pass,
                        format!(
                            "both inequalities held on all {} clouds with the event ({skipped} clouds without it not counted)",
                            suite.omega_clouds
                        ),
                    )
                };
                CheckResult {
                    name: "embedding".into(),
                    status,
                    message,
                    details: serde_json::json!({
                        "k": suite.k,
                        "resolution": suite.resolution,
                        "omega_clouds": suite.omega_clouds,
                        "clouds": embedding_clouds,
                        "conditional_failures": suite.conditional_failures,
                    }),
                }
            }
            "radius" => {
                let cfg = RadiusConfig {
                    d,
                    k: KRule::LogPower { power: 1.1, scale: 1.0 },
                    sizes: sizes.clone(),
                    replicates,
                    seed,
                };
                let report = radius_scaling(&cfg)?;
                write_report_csv(&dir, "radius", &report)?;
                slope_check("radius", &report, -1.0 / df - radius_tol, -1.0 / df + radius_tol)?
            }
            "degree" => {
                let mut worst = 0.0f64;
                let mut failures = 0;
                for s in 0..degree_clouds {
                    let cloud = uniform_cloud(degree_n, d, seed.wrapping_add(s as u64))?;
                    let c = degree_check(&cloud, degree_k, a.tau)?;
                    worst = worst.max(c.max_degree as f64 / degree_k as f64);
                    failures += usize::from(!c.bound_ok);
                }
                let tau = a.tau.unwrap_or_else(|| knnfl::theory::scaling::default_tau(d));
                CheckResult {
                    name: "degree".into(),
                    status: if failures == 0 { Status::Pass } else { Status::Fail },
                    message: format!("largest max_degree / K = {worst} against tau = {tau} ({failures} violations)"),
                    details: serde_json::json!({ "worst_ratio": worst, "tau": tau, "violations": failures }),
                }
            }
            "penalty" => {
                let cfg = PenaltyConfig {
                    scenario,
                    d,
                    k: KRule::Fixed { k: penalty_k },
                    sizes: sizes.clone(),
                    replicates,
                    seed,
                };
                let report = penalty_scaling(&cfg)?;
                write_report_csv(&dir, "penalty", &report)?;
                let target = 1.0 - 1.0 / df;
                slope_check("penalty", &report, target - penalty_tol, target + penalty_tol)?
            }
            "aerr" => {
                let cfg = AerrConfig {
                    signal: AerrSignal::FirstCoordinate,
                    d,
                    k: KRule::LogPower { power: 2.0, scale: 1.0 },
                    sizes: sizes.clone(),
                    replicates,
                    n_query: aerr_queries,
                    seed,
                };
                let report = aerr_scaling(&cfg)?;
                write_report_csv(&dir, "aerr", &report)?;
                let mut r = slope_check("aerr", &report, -2.0 / df - 0.2, -1.0 / df + 0.2)?;
                if r.status == Status::Pass && !report.is_non_increasing() {
                    r.status = Status::Fail;
                    r.message = "approximation error increased with n".into();
                }
                r
            }
            "rate" => {
                let cfg = RateConfig {
                    scenario,
                    d,
                    sigma2: None,
                    estimator: Estimator::KnnFl {
                        k: KRule::LogPower { power: 1.1, scale: 1.0 },
                    },
                    grid: knnfl::cv::log_grid(20.0, 1e-3, 25),
                    sizes: sizes.clone(),
                    replicates,
                    seed,
                };
                let report = rate_experiment(&cfg, &solver)?;
                write_report_csv(&dir, "rate", &report)?;
                slope_check("rate", &report, rate_min, rate_max)?
            }
            "contrast" => {
                let cfg = ContrastConfig::new(contrast_n_base, contrast_replicates, seed);
                let c = manifold_contrast(&cfg, &solver)?;
                let needed = (0.8 * contrast_replicates as f64).ceil() as usize;
                CheckResult {
                    name: "contrast".into(),
                    status: if c.knnfl_wins >= needed {
                        Status::Pass
                    } else {
                        Status::Fail
                    },
                    message: format!(
                        "K-NN-FL won {}/{} replicates (need {needed}); MSE {:.5} vs {:.5}",
                        c.knnfl_wins, contrast_replicates, c.knnfl.mse, c.epsfl.mse
                    ),
                    details: serde_json::to_value(&c)?,
                }
            }
            _ => unreachable!("checks were validated"),
        };
        if result.status == Status::Skipped {
            eprintln!("knnfl: warning: {} check skipped: {}", result.name, result.message);
        }
        results.push(result);
    }
    let passed = results.iter().all(|r| r.status != Status::Fail);
    knnfl::io::write_json(
        &dir.join("validation.json"),
        &ValidationReport {
            schema_version: SCHEMA_VERSION,
            passed,
            checks: results,
        },
    )?;
    if !passed {
        return Err(CliError::Assertion(
            "one or more theory checks failed; see validation.json".into(),
        ));
    }
    Ok(())
}
