//! Synthetic regression scenarios and the Monte-Carlo optimized-MSE protocol.
//!
//! Randomness: a scenario's seed keys a ChaCha8 generator; covariates are
//! drawn from stream 0 and Gaussian noise from stream 1, so the noise of a
//! dataset does not depend on how many uniforms the covariate sampler used.
//! Replicate `r` of an experiment uses seed `base_seed + r`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::cv::argmin_with_ties;
use crate::error::{invalid, Result};
use crate::graph::GraphKind;
use crate::io::write_csv;
use crate::regression::{fit_path, KnnRegressor};
use crate::scalar::sq_dist;
use crate::stats;
use crate::tv::SolverConfig;

pub const COVARIATE_STREAM: u64 = 0;
pub const NOISE_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioName {
    /// Concentrated density with a small disc signal.
    IntroExample,
    /// Uniform square, half-plane indicator.
    S1,
    /// Concentrated density with the small disc signal, unit noise.
    S2,
    /// Uniform cube, +-1 across the bisecting hyperplane.
    S3,
    /// Uniform cube, four Voronoi cells with values 2, 1, 0, -1.
    S4,
    /// A planar sheet below a cube, each with its own signal.
    ManifoldMix,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 6] = [
        Self::IntroExample,
        Self::S1,
        Self::S2,
        Self::S3,
        Self::S4,
        Self::ManifoldMix,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::IntroExample => "intro_example",
            Self::S1 => "s1",
            Self::S2 => "s2",
            Self::S3 => "s3",
            Self::S4 => "s4",
            Self::ManifoldMix => "manifold_mix",
        }
    }

    pub fn default_sigma2(self) -> f64 {
        match self {
            Self::IntroExample => 0.5,
            Self::S1 | Self::S2 | Self::ManifoldMix => 1.0,
            Self::S3 | Self::S4 => 0.3,
        }
    }

    /// Ambient dimension, when the scenario fixes it.
    pub fn fixed_dim(self) -> Option<usize> {
        match self {
            Self::IntroExample | Self::S1 | Self::S2 => Some(2),
            Self::ManifoldMix => Some(3),
            Self::S3 | Self::S4 => None,
        }
    }

    /// Values the noiseless signal can take.
    pub fn signal_values(self) -> &'static [f64] {
        match self {
            Self::IntroExample | Self::S1 | Self::S2 => &[0.0, 1.0],
            Self::S3 => &[-1.0, 1.0],
            Self::S4 => &[-1.0, 0.0, 1.0, 2.0],
            Self::ManifoldMix => &[-1.0, 0.0, 1.0],
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|n| n.as_str() == s).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|n| n.as_str()).collect();
            invalid(format!("unknown scenario {s:?}; valid names: {}", names.join(", ")))
        })
    }
}

/// Parameters of the sheet-plus-cube mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixParams {
    /// Points in the cube (the sheet gets `n`).
    pub n2: usize,
    /// Height of the sheet `[0,1]^2 x {c}`; must be negative.
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: ScenarioName,
    pub n: usize,
    pub d: usize,
    /// Noise variance.
    pub sigma2: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mix: Option<MixParams>,
}

impl ScenarioSpec {
    /// Spec with the scenario's default noise. `d` is ignored for scenarios
    /// with a fixed dimension. A mixture gets `n2 = ceil(n^{3/4})` and
    /// `c = -0.5`.
    pub fn new(name: ScenarioName, n: usize, d: usize, seed: u64) -> Result<Self> {
        let d = name.fixed_dim().unwrap_or(d);
        let mix = (name == ScenarioName::ManifoldMix).then(|| MixParams {
            n2: (n as f64).powf(0.75).ceil() as usize,
            c: -0.5,
        });
        let spec = Self {
            name,
            n,
            d,
            sigma2: name.default_sigma2(),
            seed,
            mix,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_sigma2(mut self, sigma2: f64) -> Self {
        self.sigma2 = sigma2;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("sample size must be at least 1"));
        }
        if !(self.sigma2 >= 0.0) || !self.sigma2.is_finite() {
            return Err(invalid("noise variance must be finite and non-negative"));
        }
        if let Some(d) = self.name.fixed_dim() {
            if self.d != d {
                return Err(invalid(format!("scenario {} requires d = {d}", self.name)));
            }
        }
        match self.name {
            ScenarioName::S3 if self.d < 1 => Err(invalid("scenario s3 requires d >= 1")),
            ScenarioName::S4 if self.d < 2 => Err(invalid("scenario s4 requires d >= 2")),
            ScenarioName::ManifoldMix => match self.mix {
                Some(m) if m.c < 0.0 => Ok(()),
                _ => Err(invalid("manifold_mix requires mixture parameters with c < 0")),
            },
            _ => Ok(()),
        }
    }

    /// Total number of observations.
    pub fn total_n(&self) -> usize {
        self.n + self.mix.map_or(0, |m| m.n2)
    }

    /// Noiseless regression function of the scenario at `x`.
    pub fn f0(&self, x: &[f64]) -> Result<f64> {
        match self.name {
            ScenarioName::IntroExample | ScenarioName::S2 => f0_intro(x),
            ScenarioName::S1 => f0_s1(x),
            ScenarioName::S3 => f0_s3(x),
            ScenarioName::S4 => f0_s4(x),
            ScenarioName::ManifoldMix => f0_mix(x, self.mix.map_or(-0.5, |m| m.c)),
        }
    }

    /// Draws one covariate from the scenario's density. Mixtures draw from
    /// the cube (used for fresh-query sampling of non-mixture scenarios only).
    pub fn sample_covariate<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        match self.name {
            ScenarioName::IntroExample | ScenarioName::S2 => sample_intro_point(rng).to_vec(),
            _ => (0..self.d).map(|_| rng.random::<f64>()).collect(),
        }
    }
}

/// Observations with their noiseless signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub cloud: PointCloud<f64>,
    pub y: Vec<f64>,
    pub theta_star: Vec<f64>,
    /// Mixture component of each point (1 = sheet, 2 = cube).
    pub labels: Option<Vec<u8>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Header `x1..xd, y, theta_star[, label]` and formatted rows.
    pub fn to_table(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let mut header: Vec<String> = (1..=self.cloud.dim()).map(|k| format!("x{k}")).collect();
        header.extend(["y".to_string(), "theta_star".to_string()]);
        if self.labels.is_some() {
            header.push("label".into());
        }
        let rows = (0..self.len())
            .map(|i| {
                let mut row: Vec<String> = self.cloud.point(i).iter().map(f64::to_string).collect();
                row.push(self.y[i].to_string());
                row.push(self.theta_star[i].to_string());
                if let Some(l) = &self.labels {
                    row.push(l[i].to_string());
                }
                row
            })
            .collect();
        (header, rows)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let (header, rows) = self.to_table();
        write_csv(out, &header, &rows)
    }
}

fn rngs(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut cov = ChaCha8Rng::seed_from_u64(seed);
    cov.set_stream(COVARIATE_STREAM);
    let mut noise = ChaCha8Rng::seed_from_u64(seed);
    noise.set_stream(NOISE_STREAM);
    (cov, noise)
}

fn uniform_in<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> [f64; 2] {
    [
        lo + (hi - lo) * rng.random::<f64>(),
        lo + (hi - lo) * rng.random::<f64>(),
    ]
}

fn in_square(p: &[f64; 2], lo: f64, hi: f64) -> bool {
    p.iter().all(|&c| (lo..=hi).contains(&c))
}

/// One draw from the concentrated density: with probability 0.64 uniform on
/// `[0.45,0.55]^2`, 0.16 uniform on `[0.4,0.6]^2 \ [0.45,0.55]^2`, and 0.20
/// uniform on `[0,1]^2 \ [0.4,0.6]^2`.
pub fn sample_intro_point<R: Rng>(rng: &mut R) -> [f64; 2] {
    let u: f64 = rng.random();
    if u < 0.64 {
        uniform_in(rng, 0.45, 0.55)
    } else if u < 0.80 {
        loop {
            let p = uniform_in(rng, 0.4, 0.6);
            if !in_square(&p, 0.45, 0.55) {
                return p;
            }
        }
    } else {
        loop {
            let p = uniform_in(rng, 0.0, 1.0);
            if !in_square(&p, 0.4, 0.6) {
                return p;
            }
        }
    }
}

pub fn sample_intro_density(n: usize, seed: u64) -> Result<PointCloud<f64>> {
    if n == 0 {
        return Err(invalid("sample size must be at least 1"));
    }
    let (mut rng, _) = rngs(seed);
    let flat: Vec<f64> = (0..n).flat_map(|_| sample_intro_point(&mut rng)).collect();
    PointCloud::from_flat(2, flat)
}

fn check_dim(x: &[f64], d: usize, what: &str) -> Result<()> {
    if x.len() != d {
        return Err(invalid(format!("{what} expects a point in R^{d}, got R^{}", x.len())));
    }
    Ok(())
}

fn constant(d: usize, v: f64) -> Vec<f64> {
    vec![v; d]
}

/// 1 on the closed disc `||x - (1/2, 1/2)||^2 <= 2/1000`, else 0.
pub fn f0_intro(x: &[f64]) -> Result<f64> {
    check_dim(x, 2, "intro signal")?;
    Ok(if sq_dist(x, &[0.5, 0.5]) <= 2.0 / 1000.0 {
        1.0
    } else {
        0.0
    })
}

/// 1 where `x` is strictly closer to `(3/4, 3/4)` than to `(1/2, 1/2)`.
pub fn f0_s1(x: &[f64]) -> Result<f64> {
    check_dim(x, 2, "scenario s1 signal")?;
    Ok(if sq_dist(x, &[0.75, 0.75]) < sq_dist(x, &[0.5, 0.5]) {
        1.0
    } else {
        0.0
    })
}

/// 1 where `x` is strictly closer to `1/4` than to `3/4` (all coordinates),
/// else -1. Any dimension.
pub fn f0_s3(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(invalid("scenario s3 signal expects d >= 1"));
    }
    let d = x.len();
    Ok(if sq_dist(x, &constant(d, 0.25)) < sq_dist(x, &constant(d, 0.75)) {
        1.0
    } else {
        -1.0
    })
}

/// The four centers of scenario s4 in dimension `d`.
pub fn s4_centers(d: usize) -> [Vec<f64>; 4] {
    let h = d / 2;
    let make = |a: f64, b: f64| -> Vec<f64> { (0..d).map(|i| if i < h { a } else { b }).collect() };
    [make(0.25, 0.5), make(0.5, 0.25), make(0.75, 0.5), make(0.5, 0.75)]
}

/// 2, 1 or 0 when `x` is strictly closest to `q1`, `q2` or `q3`; -1 otherwise
/// (including every tie).
pub fn f0_s4(x: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(invalid("scenario s4 signal expects d >= 2"));
    }
    let q = s4_centers(x.len());
    let dist: Vec<f64> = q.iter().map(|c| sq_dist(x, c)).collect();
    let strictly_closest = |k: usize| (0..4).filter(|&j| j != k).all(|j| dist[k] < dist[j]);
    Ok(if strictly_closest(0) {
        2.0
    } else if strictly_closest(1) {
        1.0
    } else if strictly_closest(2) {
        0.0
    } else {
        -1.0
    })
}

/// Mixture signal: s1 indicator on the sheet's first two coordinates when
/// `x` lies on the sheet at height `c`, s3 indicator in the cube otherwise.
pub fn f0_mix(x: &[f64], c: f64) -> Result<f64> {
    check_dim(x, 3, "mixture signal")?;
    if x[2] == c {
        f0_s1(&x[..2])
    } else {
        f0_s3(x)
    }
}

pub fn generate(spec: &ScenarioSpec) -> Result<Dataset> {
    spec.validate()?;
    if spec.name == ScenarioName::ManifoldMix {
        let m = spec.mix.expect("validated");
        return generate_manifold_mix(spec.n, m.n2, spec.sigma2, m.c, spec.seed);
    }
    let (mut cov, mut noise) = rngs(spec.seed);
    let n = spec.n;
    let mut flat = Vec::with_capacity(n * spec.d);
    for _ in 0..n {
        flat.extend(spec.sample_covariate(&mut cov));
    }
    let cloud = PointCloud::from_flat(spec.d, flat)?;
    let theta_star = cloud.points().map(|p| spec.f0(p)).collect::<Result<Vec<_>>>()?;
    let y = add_noise(&theta_star, spec.sigma2, &mut noise);
    Ok(Dataset {
        cloud,
        y,
        theta_star,
        labels: None,
    })
}

fn add_noise<R: Rng>(theta: &[f64], sigma2: f64, rng: &mut R) -> Vec<f64> {
    if sigma2 == 0.0 {
        return theta.to_vec();
    }
    let normal = Normal::new(0.0, sigma2.sqrt()).expect("valid noise scale");
    theta.iter().map(|t| t + normal.sample(rng)).collect()
}

/// `n1` points uniform on the sheet `[0,1]^2 x {c}` followed by `n2` points
/// uniform in `[0,1]^3`, labelled 1 and 2.
pub fn generate_manifold_mix(n1: usize, n2: usize, sigma2: f64, c: f64, seed: u64) -> Result<Dataset> {
    if n1 == 0 {
        return Err(invalid("the sheet needs at least one point"));
    }
    if !(c < 0.0) {
        return Err(invalid(format!("sheet height must be negative (got {c})")));
    }
    if !(sigma2 >= 0.0) {
        return Err(invalid("noise variance must be non-negative"));
    }
    let (mut cov, mut noise) = rngs(seed);
    let mut flat = Vec::with_capacity(3 * (n1 + n2));
    for _ in 0..n1 {
        flat.extend([cov.random::<f64>(), cov.random::<f64>(), c]);
    }
    for _ in 0..n2 {
        flat.extend([cov.random::<f64>(), cov.random::<f64>(), cov.random::<f64>()]);
    }
    let cloud = PointCloud::from_flat(3, flat)?;
    let theta_star = cloud.points().map(|p| f0_mix(p, c)).collect::<Result<Vec<_>>>()?;
    let y = add_noise(&theta_star, sigma2, &mut noise);
    let labels = (0..n1 + n2).map(|i| if i < n1 { 1 } else { 2 }).collect();
    Ok(Dataset {
        cloud,
        y,
        theta_star,
        labels: Some(labels),
    })
}

/// `(1/n) sum (a_i - b_i)^2`.
pub fn mse(theta_hat: &[f64], theta_star: &[f64]) -> Result<f64> {
    if theta_hat.len() != theta_star.len() {
        return Err(invalid(format!(
            "length mismatch: {} vs {}",
            theta_hat.len(),
            theta_star.len()
        )));
    }
    if theta_hat.is_empty() {
        return Err(invalid("empty vectors"));
    }
    let sse: f64 = theta_hat.iter().zip(theta_star).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sse / theta_hat.len() as f64)
}

/// Neighborhood size as a function of the sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum KRule {
    Fixed {
        k: usize,
    },
    /// `ceil(scale * ln(n)^power)`.
    LogPower {
        power: f64,
        scale: f64,
    },
}

impl KRule {
    pub fn k(&self, n: usize) -> usize {
        let k = match *self {
            KRule::Fixed { k } => k,
            KRule::LogPower { power, scale } => (scale * (n as f64).ln().powf(power)).ceil() as usize,
        };
        k.clamp(1, n.saturating_sub(1).max(1))
    }
}

/// Epsilon radius as a function of the sample size: `scale * ln(n)^log_power / n^(1/root)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsRule {
    pub scale: f64,
    pub log_power: f64,
    pub root: f64,
}

impl EpsRule {
    pub fn eps(&self, n: usize) -> f64 {
        let nf = n as f64;
        self.scale * nf.ln().powf(self.log_power) / nf.powf(1.0 / self.root)
    }
}

/// Estimator whose tuning grid is scanned by [`optimized_mse`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Estimator {
    /// K-NN fused lasso; grid over the penalty.
    KnnFl { k: KRule },
    /// Epsilon-NN fused lasso; grid over the penalty.
    EpsFl { eps: EpsRule },
    /// K-NN regression; grid over K.
    KnnReg,
}

impl Estimator {
    pub fn label(&self) -> &'static str {
        match self {
            Estimator::KnnFl { .. } => "knnfl",
            Estimator::EpsFl { .. } => "epsfl",
            Estimator::KnnReg => "knnreg",
        }
    }

    pub fn graph_kind(&self, n: usize) -> Option<GraphKind> {
        match self {
            Estimator::KnnFl { k } => Some(GraphKind::Knn { k: k.k(n) }),
            Estimator::EpsFl { eps } => Some(GraphKind::Epsilon { eps: eps.eps(n) }),
            Estimator::KnnReg => None,
        }
    }
}

/// In-sample MSE of `estimator` on `data` at every grid value, in grid order.
/// Failed fits yield `NaN`.
pub fn grid_mse(data: &Dataset, estimator: &Estimator, grid: &[f64], config: &SolverConfig<f64>) -> Result<Vec<f64>> {
    let n = data.len();
    let mut out = vec![f64::NAN; grid.len()];
    match estimator.graph_kind(n) {
        Some(kind) => {
            let mut order: Vec<usize> = (0..grid.len()).collect();
            order.sort_by(|&a, &b| grid[b].total_cmp(&grid[a]));
            let lambdas: Vec<f64> = order.iter().map(|&i| grid[i]).collect();
            let path = fit_path(&data.cloud, &data.y, kind, &lambdas, config)?;
            for (slot, sol) in order.into_iter().zip(path) {
                if let Ok(sol) = sol {
                    out[slot] = mse(&sol.theta, &data.theta_star)?;
                }
            }
        }
        None => {
            for (slot, &kf) in grid.iter().enumerate() {
                let k = kf.round() as usize;
                let Ok(reg) = KnnRegressor::new(&data.cloud, &data.y, k) else {
                    continue;
                };
                let fitted = data
                    .cloud
                    .points()
                    .map(|p| reg.predict(p))
                    .collect::<Result<Vec<_>>>()?;
                out[slot] = mse(&fitted, &data.theta_star)?;
            }
        }
    }
    Ok(out)
}

/// Monte-Carlo MSE curve over a tuning grid and its minimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizedMse {
    pub grid: Vec<f64>,
    /// Average MSE per grid value over successful replicates.
    pub mse: Vec<f64>,
    pub stderr: Vec<f64>,
    pub best_index: usize,
    pub best_param: f64,
    pub best_mse: f64,
    /// `per_replicate[r][g]`.
    pub per_replicate: Vec<Vec<f64>>,
    /// Failed (replicate, grid value) fits.
    pub failures: usize,
    pub base_seed: u64,
}

pub fn optimized_mse(
    spec: &ScenarioSpec,
    estimator: &Estimator,
    grid: &[f64],
    replicates: usize,
    config: &SolverConfig<f64>,
) -> Result<OptimizedMse> {
    if replicates == 0 {
        return Err(invalid("at least one replicate is required"));
    }
    if grid.is_empty() {
        return Err(invalid("tuning grid is empty"));
    }
    let per_replicate: Vec<Vec<f64>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let s = spec.clone().with_seed(spec.seed.wrapping_add(r as u64));
            let data = generate(&s)?;
            grid_mse(&data, estimator, grid, config)
        })
        .collect::<Result<_>>()?;
    Ok(summarize(grid, per_replicate, spec.seed))
}

/// Plot-ready view of an MSE curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseCurve {
    pub grid: Vec<f64>,
    pub mse: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl OptimizedMse {
    pub fn curve(&self) -> MseCurve {
        MseCurve {
            grid: self.grid.clone(),
            mse: self.mse.clone(),
            stderr: self.stderr.clone(),
        }
    }

    /// One row per grid value: `param, mse, stderr`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let header = ["param", "mse", "stderr"].map(String::from);
        let rows: Vec<Vec<String>> = (0..self.grid.len())
            .map(|g| {
                vec![
                    self.grid[g].to_string(),
                    self.mse[g].to_string(),
                    self.stderr[g].to_string(),
                ]
            })
            .collect();
        write_csv(out, &header, &rows)
    }
}

pub(crate) fn summarize(grid: &[f64], per_replicate: Vec<Vec<f64>>, base_seed: u64) -> OptimizedMse {
    let mut failures = 0;
    let mut mse = Vec::with_capacity(grid.len());
    let mut stderr = Vec::with_capacity(grid.len());
    for g in 0..grid.len() {
        let ok: Vec<f64> = per_replicate.iter().map(|r| r[g]).filter(|v| v.is_finite()).collect();
        failures += per_replicate.len() - ok.len();
        mse.push(if ok.is_empty() { f64::NAN } else { stats::mean(&ok) });
        stderr.push(stats::std_error(&ok));
    }
    let best_index = argmin_with_ties(grid, &mse);
    OptimizedMse {
        grid: grid.to_vec(),
        best_param: grid[best_index],
        best_mse: mse[best_index],
        best_index,
        mse,
        stderr,
        per_replicate,
        failures,
        base_seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intro_signal() {
        assert_eq!(f0_intro(&[0.5, 0.5]).unwrap(), 1.0);
        assert_eq!(f0_intro(&[0.0, 0.0]).unwrap(), 0.0);
        // 0.5 + 1/32 is exact; squared offset 2 * 2^-10 < 0.002
        assert_eq!(f0_intro(&[0.53125, 0.53125]).unwrap(), 1.0);
        assert!(f0_intro(&[0.5]).is_err());
    }

    #[test]
    fn intro_signal_boundary_is_closed() {
        // (0.5 + 0.002^(1/2), 0.5) sits on the boundary up to rounding;
        // the exactly representable boundary point below has squared distance
        // 0.001953125 + 0.0000469... -> use a point with exact squared distance.
        let x = [0.5 + 0.04, 0.5 + 0.02]; // 0.0016 + 0.0004 = 0.002 in exact arithmetic
        let d2 = sq_dist(&x, &[0.5, 0.5]);
        let expect = if d2 <= 0.002 { 1.0 } else { 0.0 };
        assert_eq!(f0_intro(&x).unwrap(), expect);
    }

    #[test]
    fn s1_signal() {
        assert_eq!(f0_s1(&[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(f0_s1(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(f0_s1(&[0.625, 0.625]).unwrap(), 0.0);
    }

    #[test]
    fn s3_signal() {
        assert_eq!(f0_s3(&[0.0; 4]).unwrap(), 1.0);
        assert_eq!(f0_s3(&[1.0; 4]).unwrap(), -1.0);
        assert_eq!(f0_s3(&[0.5; 4]).unwrap(), -1.0);
    }

    #[test]
    fn s4_signal() {
        assert_eq!(f0_s4(&[0.25, 0.5]).unwrap(), 2.0);
        assert_eq!(f0_s4(&[0.5, 0.25]).unwrap(), 1.0);
        assert_eq!(f0_s4(&[0.75, 0.5]).unwrap(), 0.0);
        assert_eq!(f0_s4(&[0.5, 0.75]).unwrap(), -1.0);
        // center of the square ties all four: "otherwise"
        assert_eq!(f0_s4(&[0.5, 0.5]).unwrap(), -1.0);
        let q = s4_centers(5);
        assert_eq!(q[0], vec![0.25, 0.25, 0.5, 0.5, 0.5]);
        assert_eq!(q[3], vec![0.5, 0.5, 0.75, 0.75, 0.75]);
    }

    #[test]
    fn spec_validation() {
        assert!(ScenarioSpec::new(ScenarioName::S4, 10, 1, 0).is_err());
        let s = ScenarioSpec::new(ScenarioName::S1, 10, 7, 0).unwrap();
        assert_eq!(s.d, 2);
        assert_eq!(s.sigma2, 1.0);
        assert_eq!(ScenarioSpec::new(ScenarioName::S3, 10, 3, 0).unwrap().sigma2, 0.3);
        assert!("s9".parse::<ScenarioName>().unwrap_err().to_string().contains("s1, s2"));
        assert_eq!(
            "manifold_mix".parse::<ScenarioName>().unwrap(),
            ScenarioName::ManifoldMix
        );
    }

    #[test]
    fn deterministic_generation() {
        let s = ScenarioSpec::new(ScenarioName::S1, 100, 2, 42).unwrap();
        let a = generate(&s).unwrap();
        let b = generate(&s).unwrap();
        assert_eq!(a, b);
        let c = generate(&s.clone().with_seed(43)).unwrap();
        assert_ne!(a.y, c.y);
    }

    #[test]
    fn mixture_layout() {
        let d = generate_manifold_mix(40, 12, 0.5, -0.3, 1).unwrap();
        assert_eq!(d.len(), 52);
        let labels = d.labels.as_ref().unwrap();
        assert_eq!(labels.iter().filter(|&&l| l == 1).count(), 40);
        for i in 0..40 {
            assert_eq!(d.cloud.point(i)[2], -0.3);
        }
        for i in 40..52 {
            assert!(d.cloud.point(i)[2] >= 0.0);
        }
        assert!(generate_manifold_mix(40, 12, 0.5, 0.3, 1).is_err());
    }

    #[test]
    fn mse_basic() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse(&[1.0; 4], &[0.0; 4]).unwrap(), 1.0);
        assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn k_rules() {
        assert_eq!(KRule::Fixed { k: 5 }.k(100), 5);
        assert_eq!(KRule::Fixed { k: 500 }.k(100), 99);
        // ln(500)^2 = 38.6
        assert_eq!(KRule::LogPower { power: 2.0, scale: 1.0 }.k(500), 39);
    }
}
