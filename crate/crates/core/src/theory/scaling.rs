//! Monte-Carlo scaling experiments: neighbor radii, graph degrees, the
//! K-NN penalty of the true signal, MSE rates, approximation error and the
//! sheet-plus-cube contrast between K-NN and epsilon graphs.
//!
//! Every experiment is a pure function of its config. Replicate `r` uses
//! seed `seed + r` at every size, so sizes share common random numbers.
//! Cells run in parallel and are collected in `(size, replicate)` order.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{invalid, Result};
use crate::graph::{build_graph, build_knn_graph, GraphKind};
use crate::incidence::total_variation;
use crate::io::write_csv;
use crate::kdtree::KdTree;
use crate::regression::{fit_path, FittedModel};
use crate::scenarios::{
    generate, generate_manifold_mix, optimized_mse, EpsRule, Estimator, KRule, ScenarioName, ScenarioSpec,
    COVARIATE_STREAM,
};
use crate::stats::{self, loglog_fit, LogLogFit};
use crate::tv::SolverConfig;

/// Stream used for fresh query points.
pub const QUERY_STREAM: u64 = 2;

/// Per-size measurements and their fitted log-log slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub quantity: String,
    /// What the slope is taken against (`n` or `n/K`).
    pub regressor: String,
    pub sizes: Vec<usize>,
    /// Neighborhood size used at each sample size (empty when unused).
    pub k: Vec<usize>,
    pub x: Vec<f64>,
    /// Aggregated measurement per size.
    pub values: Vec<f64>,
    /// `per_replicate[size][replicate]`.
    pub per_replicate: Vec<Vec<f64>>,
    pub fit: Option<LogLogFit>,
    /// Why no slope was fitted.
    pub skipped: Option<String>,
    pub config: serde_json::Value,
}

impl ScalingReport {
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        quantity: &str,
        regressor: &str,
        sizes: &[usize],
        k: Vec<usize>,
        x: Vec<f64>,
        values: Vec<f64>,
        per_replicate: Vec<Vec<f64>>,
        config: serde_json::Value,
    ) -> Self {
        let (fit, skipped) = if values.iter().all(|v| v.is_finite() && *v > 1e-12) {
            (Some(loglog_fit(&x, &values)), None)
        } else {
            (
                None,
                Some(format!(
                    "{quantity} is zero or undefined at some size; slope not fitted"
                )),
            )
        };
        Self {
            quantity: quantity.to_string(),
            regressor: regressor.to_string(),
            sizes: sizes.to_vec(),
            k,
            x,
            values,
            per_replicate,
            fit,
            skipped,
            config,
        }
    }

    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }

    /// Whether the slope lies in `[lo, hi]`; `None` when the fit was skipped.
    pub fn slope_within(&self, lo: f64, hi: f64) -> Option<bool> {
        self.slope().map(|s| (lo..=hi).contains(&s))
    }

    /// Values never increase with the sample size.
    pub fn is_non_increasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0])
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let header = ["n", "k", "x", "value", "replicate_stderr"].map(String::from);
        let rows: Vec<Vec<String>> = (0..self.sizes.len())
            .map(|i| {
                vec![
                    self.sizes[i].to_string(),
                    self.k.get(i).map_or(String::new(), |k| k.to_string()),
                    self.x[i].to_string(),
                    self.values[i].to_string(),
                    stats::std_error(&self.per_replicate[i]).to_string(),
                ]
            })
            .collect();
        write_csv(out, &header, &rows)
    }
}

fn check_sizes(sizes: &[usize], replicates: usize) -> Result<()> {
    if sizes.len() < 4 {
        return Err(invalid(format!(
            "a scaling experiment needs at least 4 sizes, got {}",
            sizes.len()
        )));
    }
    if sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("sizes must be strictly ascending"));
    }
    if sizes[0] < 2 {
        return Err(invalid("sizes must be at least 2"));
    }
    if replicates == 0 {
        return Err(invalid("at least one replicate is required"));
    }
    Ok(())
}

/// Runs `cell(size_index, replicate)` over the grid and groups by size.
fn run_cells<F>(sizes: usize, replicates: usize, cell: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(usize, usize) -> Result<f64> + Sync,
{
    let flat: Vec<f64> = (0..sizes * replicates)
        .into_par_iter()
        .map(|c| cell(c / replicates, c % replicates))
        .collect::<Result<_>>()?;
    Ok(flat.chunks(replicates).map(<[f64]>::to_vec).collect())
}

/// `n` points uniform on `[0,1]^d` from the covariate stream of `seed`.
pub fn uniform_cloud(n: usize, d: usize, seed: u64) -> Result<PointCloud<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(COVARIATE_STREAM);
    let flat: Vec<f64> = (0..n * d).map(|_| rng.random()).collect();
    PointCloud::from_flat(d, flat)
}

/// Largest distance from a point to its K-th nearest other point.
pub fn max_knn_radius(cloud: &PointCloud<f64>, k: usize) -> Result<f64> {
    if k == 0 || k >= cloud.len() {
        return Err(invalid(format!(
            "K must satisfy 1 <= K <= n-1 (K = {k}, n = {})",
            cloud.len()
        )));
    }
    let tree = KdTree::build(cloud);
    let r2 = (0..cloud.len())
        .into_par_iter()
        .map(|i| tree.knn(cloud.point(i), k, Some(i))[k - 1].sq_dist)
        .reduce(|| 0.0, f64::max);
    Ok(r2.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusConfig {
    pub d: usize,
    pub k: KRule,
    pub sizes: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
}

/// Median over replicates of the maximal K-th neighbor distance on uniform
/// clouds, regressed on `n/K`.
pub fn radius_scaling(cfg: &RadiusConfig) -> Result<ScalingReport> {
    check_sizes(&cfg.sizes, cfg.replicates)?;
    if cfg.d == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    let ks: Vec<usize> = cfg.sizes.iter().map(|&n| cfg.k.k(n)).collect();
    let per = run_cells(cfg.sizes.len(), cfg.replicates, |s, r| {
        let cloud = uniform_cloud(cfg.sizes[s], cfg.d, cfg.seed.wrapping_add(r as u64))?;
        max_knn_radius(&cloud, ks[s])
    })?;
    let x = cfg.sizes.iter().zip(&ks).map(|(&n, &k)| n as f64 / k as f64).collect();
    let values = per.iter().map(|v| stats::median(v)).collect();
    Ok(ScalingReport::assemble(
        "max_knn_radius",
        "n/K",
        &cfg.sizes,
        ks,
        x,
        values,
        per,
        serde_json::to_value(cfg)?,
    ))
}

/// Default degree constant per dimension: kissing numbers (best known
/// values for 5 to 8), then `3^d - 1`.
pub fn default_tau(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 6.0,
        3 => 12.0,
        4 => 24.0,
        5 => 40.0,
        6 => 72.0,
        7 => 126.0,
        8 => 240.0,
        _ => 3f64.powi(d as i32) - 1.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeCheck {
    pub k: usize,
    pub max_degree: usize,
    pub tau: f64,
    pub bound_ok: bool,
}

/// Maximum degree of the symmetric K-NN graph against `tau * K`.
pub fn degree_check(cloud: &PointCloud<f64>, k: usize, tau: Option<f64>) -> Result<DegreeCheck> {
    let g = build_knn_graph(cloud, k)?;
    let tau = tau.unwrap_or_else(|| default_tau(cloud.dim()));
    let max_degree = g.stats().max_degree;
    Ok(DegreeCheck {
        k,
        max_degree,
        tau,
        bound_ok: max_degree as f64 <= tau * k as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub scenario: ScenarioName,
    pub d: usize,
    pub k: KRule,
    pub sizes: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
}

/// Median over replicates of the K-NN total variation of the noiseless
/// signal, regressed on `n`.
pub fn penalty_scaling(cfg: &PenaltyConfig) -> Result<ScalingReport> {
    check_sizes(&cfg.sizes, cfg.replicates)?;
    let ks: Vec<usize> = cfg.sizes.iter().map(|&n| cfg.k.k(n)).collect();
    let per = run_cells(cfg.sizes.len(), cfg.replicates, |s, r| {
        let spec = ScenarioSpec::new(cfg.scenario, cfg.sizes[s], cfg.d, cfg.seed.wrapping_add(r as u64))?;
        let data = generate(&spec)?;
        let g = build_knn_graph(&data.cloud, ks[s])?;
        total_variation(&g, &data.theta_star)
    })?;
    let x = cfg.sizes.iter().map(|&n| n as f64).collect();
    let values = per.iter().map(|v| stats::median(v)).collect();
    Ok(ScalingReport::assemble(
        "knn_penalty_of_truth",
        "n",
        &cfg.sizes,
        ks,
        x,
        values,
        per,
        serde_json::to_value(cfg)?,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateConfig {
    pub scenario: ScenarioName,
    pub d: usize,
    /// Noise variance; the scenario default when absent.
    #[serde(default)]
    pub sigma2: Option<f64>,
    pub estimator: Estimator,
    /// Penalties for the fused lassos, neighborhood sizes for K-NN regression.
    pub grid: Vec<f64>,
    pub sizes: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
}

/// Optimized MSE at each size, regressed on `n`. The per-replicate entries
/// are the replicate MSEs at the selected tuning value.
pub fn rate_experiment(cfg: &RateConfig, solver: &SolverConfig<f64>) -> Result<ScalingReport> {
    check_sizes(&cfg.sizes, cfg.replicates)?;
    let mut values = Vec::new();
    let mut per = Vec::new();
    let mut ks = Vec::new();
    let mut noiseless = false;
    for &n in &cfg.sizes {
        let mut spec = ScenarioSpec::new(cfg.scenario, n, cfg.d, cfg.seed)?;
        if let Some(s2) = cfg.sigma2 {
            spec = spec.with_sigma2(s2);
        }
        noiseless = spec.sigma2 == 0.0;
        spec.validate()?;
        let opt = optimized_mse(&spec, &cfg.estimator, &cfg.grid, cfg.replicates, solver)?;
        values.push(opt.best_mse);
        per.push(opt.per_replicate.iter().map(|r| r[opt.best_index]).collect());
        match cfg.estimator {
            Estimator::KnnFl { k } => ks.push(k.k(spec.total_n())),
            Estimator::KnnReg => ks.push(opt.best_param.round() as usize),
            Estimator::EpsFl { .. } => {}
        }
    }
    let x = cfg.sizes.iter().map(|&n| n as f64).collect();
    let mut report = ScalingReport::assemble(
        "optimized_mse",
        "n",
        &cfg.sizes,
        ks,
        x,
        values,
        per,
        serde_json::to_value(cfg)?,
    );
    if noiseless || report.fit.is_none() {
        report.fit = None;
        report.skipped = Some("optimized MSE vanishes (noiseless data); slope test skipped".into());
    }
    Ok(report)
}

/// Estimate of the approximation error of neighbor averaging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AerrEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_query: usize,
    /// Queries whose epsilon-ball was empty and used the nearest point.
    pub fallbacks: usize,
}

/// Monte-Carlo estimate of `E (f0(X) - avg_{i in N(X)} f0(x_i))^2` over
/// `n_query` fresh draws from `sampler`, using the model's neighborhoods.
pub fn estimate_aerr<F, S>(
    model: &FittedModel<f64>,
    f0: F,
    mut sampler: S,
    n_query: usize,
    seed: u64,
) -> Result<AerrEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
    S: FnMut(&mut ChaCha8Rng) -> Vec<f64>,
{
    if n_query == 0 {
        return Err(invalid("n_query must be at least 1"));
    }
    let truth: Vec<f64> = model.cloud().points().map(&f0).collect();
    let smoother = FittedModel::new(model.cloud().clone(), model.kind(), model.lambda(), truth)?;
    let predictor = smoother.predictor();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(QUERY_STREAM);
    let queries: Vec<Vec<f64>> = (0..n_query).map(|_| sampler(&mut rng)).collect();
    let scored: Vec<(f64, bool)> = queries
        .par_iter()
        .map(|q| {
            let (avg, fell_back) = predictor.predict_or_nearest(q)?;
            let r = f0(q) - avg;
            Ok((r * r, fell_back))
        })
        .collect::<Result<_>>()?;
    let sq: Vec<f64> = scored.iter().map(|s| s.0).collect();
    Ok(AerrEstimate {
        value: stats::mean(&sq),
        stderr: stats::std_error(&sq),
        n_query,
        fallbacks: scored.iter().filter(|s| s.1).count(),
    })
}

/// Signals on `[0,1]^d` for approximation-error experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AerrSignal {
    Constant,
    /// `f0(x) = x_1`.
    FirstCoordinate,
    /// Half-plane indicator of scenario s1 (d = 2 only).
    S1,
}

impl AerrSignal {
    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            AerrSignal::Constant => 1.0,
            AerrSignal::FirstCoordinate => x[0],
            AerrSignal::S1 => crate::scenarios::f0_s1(x).unwrap_or(f64::NAN),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AerrConfig {
    pub signal: AerrSignal,
    pub d: usize,
    pub k: KRule,
    pub sizes: Vec<usize>,
    pub replicates: usize,
    pub n_query: usize,
    pub seed: u64,
}

/// Median over replicates of the K-NN approximation error on uniform data,
/// regressed on `n`.
pub fn aerr_scaling(cfg: &AerrConfig) -> Result<ScalingReport> {
    check_sizes(&cfg.sizes, cfg.replicates)?;
    if cfg.signal == AerrSignal::S1 && cfg.d != 2 {
        return Err(invalid("the s1 signal needs d = 2"));
    }
    let ks: Vec<usize> = cfg.sizes.iter().map(|&n| cfg.k.k(n)).collect();
    let d = cfg.d;
    let per = run_cells(cfg.sizes.len(), cfg.replicates, |s, r| {
        let seed = cfg.seed.wrapping_add(r as u64);
        let cloud = uniform_cloud(cfg.sizes[s], d, seed)?;
        let n = cloud.len();
        let model = FittedModel::new(cloud, GraphKind::Knn { k: ks[s] }, 0.0, vec![0.0; n])?;
        let est = estimate_aerr(
            &model,
            |x| cfg.signal.eval(x),
            |rng| (0..d).map(|_| rng.random::<f64>()).collect(),
            cfg.n_query,
            seed,
        )?;
        Ok(est.value)
    })?;
    let x = cfg.sizes.iter().map(|&n| n as f64).collect();
    let values = per.iter().map(|v| stats::median(v)).collect();
    Ok(ScalingReport::assemble(
        "approximation_error",
        "n",
        &cfg.sizes,
        ks,
        x,
        values,
        per,
        serde_json::to_value(cfg)?,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastConfig {
    pub n_base: usize,
    /// Cube size; `ceil(n_base^{3/4})` when absent.
    #[serde(default)]
    pub n2: Option<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub sigma2: f64,
    /// Sheet height (negative).
    pub c: f64,
    pub k: KRule,
    pub eps: EpsRule,
    /// Penalty grid shared by both estimators.
    pub lambdas: Vec<f64>,
}

impl ContrastConfig {
    pub fn new(n_base: usize, replicates: usize, seed: u64) -> Self {
        Self {
            n_base,
            n2: None,
            replicates,
            seed,
            sigma2: 1.0,
            c: -0.5,
            k: KRule::LogPower { power: 1.0, scale: 1.0 },
            eps: EpsRule {
                scale: 1.0,
                log_power: 0.5,
                root: 2.0,
            },
            lambdas: crate::cv::log_grid(10.0, 1e-3, 30),
        }
    }

    pub fn n2(&self) -> usize {
        self.n2
            .unwrap_or_else(|| (self.n_base as f64).powf(0.75).ceil() as usize)
    }
}

/// MSE of one estimator at its optimized penalty, split by component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentMse {
    pub lambda: f64,
    pub mse: f64,
    pub sheet_mse: f64,
    pub cube_mse: f64,
    /// Replicate MSEs at the selected penalty.
    pub per_replicate: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldContrast {
    pub n1: usize,
    pub n2: usize,
    pub k: usize,
    pub eps: f64,
    pub knnfl: ComponentMse,
    pub epsfl: ComponentMse,
    /// `epsfl.mse / knnfl.mse`.
    pub ratio: f64,
    /// Replicates where K-NN-FL had the smaller MSE.
    pub knnfl_wins: usize,
    pub config: ContrastConfig,
}

type PathMse = Vec<[f64; 3]>;

/// `[grid][total, sheet, cube]` MSEs of a fused lasso path on one dataset.
fn path_mse(
    data: &crate::scenarios::Dataset,
    kind: GraphKind,
    lambdas: &[f64],
    solver: &SolverConfig<f64>,
) -> Result<PathMse> {
    let labels = data.labels.as_deref().expect("mixture data carry labels");
    let path = fit_path(&data.cloud, &data.y, kind, lambdas, solver)?;
    Ok(path
        .into_iter()
        .map(|sol| match sol {
            Ok(sol) => {
                let mut sums = [0.0; 3];
                let mut counts = [0usize; 3];
                for (i, (&a, &b)) in sol.theta.iter().zip(&data.theta_star).enumerate() {
                    let sq = (a - b) * (a - b);
                    let slot = labels[i] as usize;
                    sums[0] += sq;
                    sums[slot] += sq;
                    counts[0] += 1;
                    counts[slot] += 1;
                }
                std::array::from_fn(|j| {
                    if counts[j] == 0 {
                        0.0
                    } else {
                        sums[j] / counts[j] as f64
                    }
                })
            }
            Err(_) => [f64::NAN; 3],
        })
        .collect())
}

fn select(per: &[PathMse], lambdas: &[f64]) -> ComponentMse {
    let avg = |g: usize, j: usize| stats::mean(&per.iter().map(|r| r[g][j]).collect::<Vec<_>>());
    let curve: Vec<f64> = (0..lambdas.len()).map(|g| avg(g, 0)).collect();
    let best = crate::cv::argmin_with_ties(lambdas, &curve);
    ComponentMse {
        lambda: lambdas[best],
        mse: curve[best],
        sheet_mse: avg(best, 1),
        cube_mse: avg(best, 2),
        per_replicate: per.iter().map(|r| r[best][0]).collect(),
    }
}

/// Optimized MSE of K-NN-FL and epsilon-NN-FL on sheet-plus-cube data.
pub fn manifold_contrast(cfg: &ContrastConfig, solver: &SolverConfig<f64>) -> Result<ManifoldContrast> {
    if cfg.replicates == 0 || cfg.lambdas.is_empty() {
        return Err(invalid("need at least one replicate and one penalty"));
    }
    let n1 = cfg.n_base;
    let n2 = cfg.n2();
    let n = n1 + n2;
    let k = cfg.k.k(n);
    let eps = cfg.eps.eps(n);
    let mut lambdas = cfg.lambdas.clone();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    let runs: Vec<(PathMse, PathMse)> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let data = generate_manifold_mix(n1, n2, cfg.sigma2, cfg.c, cfg.seed.wrapping_add(r as u64))?;
            let a = path_mse(&data, GraphKind::Knn { k }, &lambdas, solver)?;
            let b = path_mse(&data, GraphKind::Epsilon { eps }, &lambdas, solver)?;
            Ok((a, b))
        })
        .collect::<Result<_>>()?;
    let (knn_runs, eps_runs): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
    let knnfl = select(&knn_runs, &lambdas);
    let epsfl = select(&eps_runs, &lambdas);
    let knnfl_wins = knnfl
        .per_replicate
        .iter()
        .zip(&epsfl.per_replicate)
        .filter(|(a, b)| a < b)
        .count();
    Ok(ManifoldContrast {
        n1,
        n2,
        k,
        eps,
        ratio: epsfl.mse / knnfl.mse,
        knnfl,
        epsfl,
        knnfl_wins,
        config: cfg.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingConfig {
    pub n: usize,
    pub d: usize,
    /// Neighborhood size; `ceil(ln(n)^2)` when absent.
    #[serde(default)]
    pub k: Option<usize>,
    /// Mesh resolution; the default resolution formula with uniform-cube constants when absent.
    #[serde(default)]
    pub resolution: Option<usize>,
    /// Number of clouds; cloud `s` uses seed `seed + s`.
    pub clouds: usize,
    pub seed: u64,
}

impl EmbeddingConfig {
    pub fn k(&self) -> usize {
        self.k
            .unwrap_or_else(|| KRule::LogPower { power: 2.0, scale: 1.0 }.k(self.n))
    }

    pub fn resolution(&self) -> Result<usize> {
        match self.resolution {
            Some(r) => Ok(r),
            None => crate::theory::mesh_resolution(
                self.n,
                self.k(),
                self.d,
                crate::theory::MeshConstants::uniform_cube(self.d),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingCase {
    pub seed: u64,
    pub signal: String,
    pub check: crate::theory::EmbeddingCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSuite {
    pub k: usize,
    pub resolution: usize,
    pub cases: Vec<EmbeddingCase>,
    /// Clouds on which the connectivity event held.
    pub omega_clouds: usize,
    /// Cases where an inequality failed although the event held.
    pub conditional_failures: usize,
    pub config: EmbeddingConfig,
}

/// Evaluates both embedding inequalities on uniform clouds for four signals
/// per cloud: the scenario truth (s1 for d = 2, s3 otherwise), the noisy
/// responses, the noise itself and a constant. The test vector `e` is the
/// noise.
pub fn embedding_suite(cfg: &EmbeddingConfig) -> Result<EmbeddingSuite> {
    if cfg.clouds == 0 {
        return Err(invalid("at least one cloud is required"));
    }
    let k = cfg.k();
    let resolution = cfg.resolution()?;
    let name = if cfg.d == 2 { ScenarioName::S1 } else { ScenarioName::S3 };
    let per_cloud: Vec<Vec<EmbeddingCase>> = (0..cfg.clouds)
        .into_par_iter()
        .map(|s| {
            let seed = cfg.seed.wrapping_add(s as u64);
            let data = generate(&ScenarioSpec::new(name, cfg.n, cfg.d, seed)?)?;
            let g = build_knn_graph(&data.cloud, k)?;
            let noise: Vec<f64> = data.y.iter().zip(&data.theta_star).map(|(a, b)| a - b).collect();
            let signals = [
                ("truth", data.theta_star.clone()),
                ("noisy", data.y.clone()),
                ("noise", noise.clone()),
                ("constant", vec![1.0; cfg.n]),
            ];
            let mesh = crate::theory::build_mesh(&data.cloud, &data.theta_star, resolution)?;
            signals
                .into_iter()
                .map(|(label, theta)| {
                    Ok(EmbeddingCase {
                        seed,
                        signal: label.to_string(),
                        check: crate::theory::check_embedding_inequalities(&mesh, &g, &theta, &noise)?,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let omega_clouds = per_cloud.iter().filter(|c| c[0].check.omega_holds).count();
    let cases: Vec<EmbeddingCase> = per_cloud.into_iter().flatten().collect();
    let conditional_failures = cases.iter().filter(|c| c.check.conditional_failure()).count();
    Ok(EmbeddingSuite {
        k,
        resolution,
        cases,
        omega_clouds,
        conditional_failures,
        config: cfg.clone(),
    })
}

/// Builds the graph an estimator would use at sample size `n`.
pub fn estimator_graph(cloud: &PointCloud<f64>, estimator: &Estimator) -> Result<Option<crate::graph::NeighborGraph>> {
    estimator
        .graph_kind(cloud.len())
        .map(|kind| build_graph(cloud, kind))
        .transpose()
}
