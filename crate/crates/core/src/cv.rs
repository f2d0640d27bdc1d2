//! K-fold cross-validation over a penalty grid.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{invalid, Result};
use crate::graph::{GraphKind, NeighborGraph};
use crate::regression::{fit_path, FittedModel};
use crate::scalar::Scalar;
use crate::tv::{saturation_lambda, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    /// Penalty grid in the order supplied.
    pub lambdas: Vec<f64>,
    /// `fold_mse[f][l]`: validation MSE of fold `f` at `lambdas[l]`. A failed
    /// fit is recorded as infinity.
    pub fold_mse: Vec<Vec<f64>>,
    pub mean_mse: Vec<f64>,
    pub selected_index: usize,
    pub selected_lambda: f64,
    /// Validation fold of each observation.
    pub fold_of: Vec<usize>,
    pub seed: u64,
    /// Predictions that fell back to the nearest training point because the
    /// epsilon-ball was empty, summed over folds and penalties.
    pub empty_neighborhood_fallbacks: usize,
}

/// Assigns each of `n` indices to one of `folds` folds by splitting a seeded
/// random permutation into near-equal contiguous blocks.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of = vec![0; n];
    for (pos, &i) in perm.iter().enumerate() {
        fold_of[i] = pos * folds / n;
    }
    fold_of
}

/// Log-spaced grid of `count` penalties over `[1e-3 * top, top]` in
/// descending order, where `top` is the saturation penalty of `y` on `graph`.
pub fn default_lambda_grid(graph: &NeighborGraph, y: &[f64], count: usize) -> Result<Vec<f64>> {
    let top = saturation_lambda(graph, y)?;
    Ok(log_grid(top.max(f64::MIN_POSITIVE), 1e-3, count))
}

/// `count` values from `top` down to `top * ratio`, log-spaced.
pub fn log_grid(top: f64, ratio: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![top];
    }
    (0..count)
        .map(|i| top * ratio.powf(i as f64 / (count - 1) as f64))
        .collect()
}

/// Index of the smallest finite score; ties go to the smallest parameter.
pub fn argmin_with_ties(params: &[f64], scores: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..scores.len() {
        let (s, b) = (scores[i], scores[best]);
        if s < b || (s == b && params[i] < params[best]) || (b.is_nan() && !s.is_nan()) {
            best = i;
        }
    }
    best
}

#[allow(clippy::too_many_arguments)]
pub fn kfold_cv<T: Scalar>(
    cloud: &PointCloud<T>,
    y: &[T],
    kind: GraphKind,
    lambdas: &[f64],
    folds: usize,
    seed: u64,
    config: &SolverConfig<T>,
) -> Result<CvReport> {
    let n = cloud.len();
    if folds < 2 || folds > n {
        return Err(invalid(format!("folds must be in 2..=n (got {folds}, n = {n})")));
    }
    if lambdas.is_empty() {
        return Err(invalid("penalty grid is empty"));
    }
    if lambdas.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
        return Err(invalid("penalties must be finite and non-negative"));
    }
    if y.len() != n {
        return Err(invalid("response length differs from the number of points"));
    }
    let fold_of = fold_assignment(n, folds, seed);

    // solve in descending penalty order, report in the caller's order
    let mut order: Vec<usize> = (0..lambdas.len()).collect();
    order.sort_by(|&a, &b| lambdas[b].total_cmp(&lambdas[a]));
    let sorted: Vec<T> = order.iter().map(|&i| T::lit(lambdas[i])).collect();

    let per_fold: Vec<Result<(Vec<f64>, usize)>> = (0..folds)
        .into_par_iter()
        .map(|f| {
            let train: Vec<usize> = (0..n).filter(|&i| fold_of[i] != f).collect();
            let valid: Vec<usize> = (0..n).filter(|&i| fold_of[i] == f).collect();
            let tcloud = cloud.select(&train)?;
            let ty: Vec<T> = train.iter().map(|&i| y[i]).collect();
            let path = fit_path(&tcloud, &ty, kind, &sorted, config)?;
            let mut mse = vec![f64::INFINITY; lambdas.len()];
            let mut fallbacks = 0;
            for (slot, sol) in order.iter().zip(path) {
                let Ok(sol) = sol else { continue };
                let model = FittedModel::new(tcloud.clone(), kind, T::lit(lambdas[*slot]), sol.theta)?;
                let pred = model.predictor();
                let mut sse = 0.0;
                for &i in &valid {
                    let (v, fell_back) = pred.predict_or_nearest(cloud.point(i))?;
                    fallbacks += fell_back as usize;
                    let r = (v - y[i]).to_f64_lossy();
                    sse += r * r;
                }
                mse[*slot] = sse / valid.len() as f64;
            }
            Ok((mse, fallbacks))
        })
        .collect();

    let mut fold_mse = Vec::with_capacity(folds);
    let mut empty_neighborhood_fallbacks = 0;
    for r in per_fold {
        let (m, fb) = r?;
        fold_mse.push(m);
        empty_neighborhood_fallbacks += fb;
    }
    let mean_mse: Vec<f64> = (0..lambdas.len())
        .map(|l| fold_mse.iter().map(|row| row[l]).sum::<f64>() / folds as f64)
        .collect();
    let selected_index = argmin_with_ties(lambdas, &mean_mse);
    Ok(CvReport {
        lambdas: lambdas.to_vec(),
        fold_mse,
        mean_mse,
        selected_index,
        selected_lambda: lambdas[selected_index],
        fold_of,
        seed,
        empty_neighborhood_fallbacks,
    })
}
