//! The K-NN-FL / epsilon-NN-FL estimator and the plain K-NN regression
//! baseline.
//!
//! Fitting solves the graph fused lasso on the training responses. Prediction
//! at any point `x` (including training points) averages the fitted values
//! over the neighbors of `x` in the training set: the `K` nearest for a K-NN
//! model, or those strictly within `eps` for an epsilon model. A training
//! point coinciding with the query counts as one of its neighbors.

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{invalid, Error, Result};
use crate::graph::{build_graph, GraphKind, NeighborGraph};
use crate::kdtree::KdTree;
use crate::scalar::Scalar;
use crate::tv::{solve_path, solve_with, SolverConfig, TvProblem, TvSolution};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel<T> {
    cloud: PointCloud<T>,
    kind: GraphKind,
    lambda: T,
    theta_hat: Vec<T>,
}

impl<T: Scalar> FittedModel<T> {
    pub fn new(cloud: PointCloud<T>, kind: GraphKind, lambda: T, theta_hat: Vec<T>) -> Result<Self> {
        if theta_hat.len() != cloud.len() {
            return Err(invalid("fitted vector length differs from training size"));
        }
        check_kind(&kind, cloud.len())?;
        Ok(Self {
            cloud,
            kind,
            lambda,
            theta_hat,
        })
    }

    pub fn cloud(&self) -> &PointCloud<T> {
        &self.cloud
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn theta_hat(&self) -> &[T] {
        &self.theta_hat
    }

    /// Rebuilds the training graph.
    pub fn graph(&self) -> Result<NeighborGraph> {
        build_graph(&self.cloud, self.kind)
    }

    /// Prediction index over the training points. Build once for many queries.
    pub fn predictor(&self) -> Predictor<'_, T> {
        Predictor {
            tree: KdTree::build(&self.cloud),
            model: self,
        }
    }

    pub fn predict(&self, query: &[T]) -> Result<T> {
        self.predictor().predict(query)
    }

    pub fn to_document(&self) -> ModelDocument {
        ModelDocument {
            schema_version: MODEL_SCHEMA_VERSION,
            kind: self.kind,
            lambda: self.lambda.to_f64_lossy(),
            theta_hat: self.theta_hat.iter().map(|v| v.to_f64_lossy()).collect(),
            cloud_ref: CloudRef {
                source: None,
                dim: self.cloud.dim(),
                n: self.cloud.len(),
                points: self
                    .cloud
                    .points()
                    .map(|p| p.iter().map(|c| c.to_f64_lossy()).collect())
                    .collect(),
            },
        }
    }

    pub fn from_document(doc: &ModelDocument) -> Result<Self> {
        let cloud = PointCloud::from_rows(
            &doc.cloud_ref
                .points
                .iter()
                .map(|p| p.iter().map(|&c| T::lit(c)).collect::<Vec<T>>())
                .collect::<Vec<_>>(),
        )?;
        if cloud.len() != doc.cloud_ref.n || cloud.dim() != doc.cloud_ref.dim {
            return Err(invalid("model cloud_ref size does not match its points"));
        }
        Self::new(
            cloud,
            doc.kind,
            T::lit(doc.lambda),
            doc.theta_hat.iter().map(|&v| T::lit(v)).collect(),
        )
    }
}

/// JSON form of a [`FittedModel`]. The training cloud is embedded so a
/// model file is self-contained; `source` optionally records where it came
/// from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub schema_version: u32,
    #[serde(flatten)]
    pub kind: GraphKind,
    pub lambda: f64,
    pub theta_hat: Vec<f64>,
    pub cloud_ref: CloudRef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudRef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    pub dim: usize,
    pub n: usize,
    pub points: Vec<Vec<f64>>,
}

fn check_kind(kind: &GraphKind, n: usize) -> Result<()> {
    match *kind {
        GraphKind::Knn { k } if k == 0 || k >= n => {
            Err(invalid(format!("K must satisfy 1 <= K <= n-1 (K = {k}, n = {n})")))
        }
        GraphKind::Epsilon { eps } if !(eps > 0.0) || !eps.is_finite() => {
            Err(invalid(format!("epsilon must be positive and finite (got {eps})")))
        }
        GraphKind::Custom => Err(invalid("a fitted model needs a K-NN or epsilon graph")),
        _ => Ok(()),
    }
}

/// Borrowing predictor with a spatial index over the training points.
pub struct Predictor<'a, T> {
    tree: KdTree<'a, T>,
    model: &'a FittedModel<T>,
}

impl<T: Scalar> Predictor<'_, T> {
    fn check_dim(&self, query: &[T]) -> Result<()> {
        if query.len() != self.model.cloud.dim() {
            return Err(invalid(format!(
                "query has dimension {}, expected {}",
                query.len(),
                self.model.cloud.dim()
            )));
        }
        Ok(())
    }

    fn average(&self, idx: impl ExactSizeIterator<Item = usize>) -> T {
        let count = T::from_usize(idx.len()).unwrap();
        idx.map(|i| self.model.theta_hat[i]).sum::<T>() / count
    }

    /// Neighbor average of the fitted values at `query`.
    pub fn predict(&self, query: &[T]) -> Result<T> {
        self.check_dim(query)?;
        match self.model.kind {
            GraphKind::Knn { k } => {
                let nn = self.tree.knn(query, k, None);
                Ok(self.average(nn.iter().map(|n| n.index)))
            }
            GraphKind::Epsilon { eps } => {
                let e = T::lit(eps);
                let ball = self.tree.within(query, e * e, None);
                if ball.is_empty() {
                    return Err(Error::EmptyNeighborhood { eps });
                }
                Ok(self.average(ball.iter().map(|n| n.index)))
            }
            GraphKind::Custom => Err(invalid("a fitted model needs a K-NN or epsilon graph")),
        }
    }

    /// Like [`predict`](Self::predict), but an empty epsilon-ball falls back
    /// to the single nearest training point. The flag reports the fallback.
    pub fn predict_or_nearest(&self, query: &[T]) -> Result<(T, bool)> {
        match self.predict(query) {
            Err(Error::EmptyNeighborhood { .. }) => {
                let nn = self.tree.knn(query, 1, None);
                Ok((self.model.theta_hat[nn[0].index], true))
            }
            other => other.map(|v| (v, false)),
        }
    }
}

/// Fits the estimator at one penalty.
pub fn fit<T: Scalar>(cloud: &PointCloud<T>, y: &[T], kind: GraphKind, lambda: T) -> Result<FittedModel<T>> {
    fit_detailed(cloud, y, kind, lambda, &SolverConfig::default()).map(|(m, _)| m)
}

/// Fits and also returns the solver output (gap, cut count, timing).
pub fn fit_detailed<T: Scalar>(
    cloud: &PointCloud<T>,
    y: &[T],
    kind: GraphKind,
    lambda: T,
    config: &SolverConfig<T>,
) -> Result<(FittedModel<T>, TvSolution<T>)> {
    check_inputs(cloud, y, &kind)?;
    let graph = build_graph(cloud, kind)?;
    let problem = TvProblem::new(y, lambda, &graph)?;
    let sol = solve_with(&problem, config, None)?;
    let model = FittedModel::new(cloud.clone(), kind, lambda, sol.theta.clone())?;
    Ok((model, sol))
}

/// Fits along a descending penalty path with one graph construction and
/// warm starts. Failures are reported per penalty.
pub fn fit_path<T: Scalar>(
    cloud: &PointCloud<T>,
    y: &[T],
    kind: GraphKind,
    lambdas: &[T],
    config: &SolverConfig<T>,
) -> Result<Vec<Result<TvSolution<T>>>> {
    check_inputs(cloud, y, &kind)?;
    let graph = build_graph(cloud, kind)?;
    solve_path(y, &graph, lambdas, config)
}

fn check_inputs<T: Scalar>(cloud: &PointCloud<T>, y: &[T], kind: &GraphKind) -> Result<()> {
    if y.len() != cloud.len() {
        return Err(invalid(format!("{} responses for {} points", y.len(), cloud.len())));
    }
    check_kind(kind, cloud.len())
}

/// K-NN regression: average of `y` over the `k` nearest training points.
pub struct KnnRegressor<'a, T> {
    tree: KdTree<'a, T>,
    y: &'a [T],
    k: usize,
}

impl<'a, T: Scalar> KnnRegressor<'a, T> {
    pub fn new(cloud: &'a PointCloud<T>, y: &'a [T], k: usize) -> Result<Self> {
        if y.len() != cloud.len() {
            return Err(invalid("response length differs from the number of points"));
        }
        if k == 0 || k > cloud.len() {
            return Err(invalid(format!(
                "K must satisfy 1 <= K <= n (K = {k}, n = {})",
                cloud.len()
            )));
        }
        Ok(Self {
            tree: KdTree::build(cloud),
            y,
            k,
        })
    }

    pub fn predict(&self, query: &[T]) -> Result<T> {
        if query.len() != self.tree.cloud().dim() {
            return Err(invalid("query dimension does not match training data"));
        }
        let nn = self.tree.knn(query, self.k, None);
        let sum: T = nn.iter().map(|n| self.y[n.index]).sum();
        Ok(sum / T::from_usize(self.k).unwrap())
    }
}

pub fn knn_regression<T: Scalar>(cloud: &PointCloud<T>, y: &[T], k: usize, query: &[T]) -> Result<T> {
    KnnRegressor::new(cloud, y, k)?.predict(query)
}
