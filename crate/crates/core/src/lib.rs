//! Nonparametric regression by the fused lasso on nearest-neighbor graphs.
//!
//! The estimator builds a K-NN (or epsilon) graph over the covariates, solves
//! the graph total-variation denoising problem on the responses, and predicts
//! at new points by averaging fitted values over the query's neighbors.
//!
//! Geometry, graphs, the solver and the estimator are generic over the
//! floating-point type ([`Scalar`]); the simulation and validation modules
//! work in `f64`.

// `!(x >= 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cloud;
pub mod cv;
pub mod error;
pub mod graph;
pub mod incidence;
pub mod io;
pub mod kdtree;
pub mod maxflow;
pub mod regression;
pub mod scalar;
pub mod scenarios;
pub mod stats;
pub mod theory;
pub mod tv;

pub use cloud::PointCloud;
pub use error::{Error, Result};
pub use graph::{build_epsilon_graph, build_graph, build_knn_graph, GraphKind, GraphStats, NeighborGraph};
pub use incidence::IncidenceOperator;
pub use scalar::Scalar;
pub use tv::{duality_gap, solve, solve_path, solve_with, Method, SolverConfig, TvProblem, TvSolution};

/// Double-precision point cloud.
pub type PointCloud64 = PointCloud<f64>;
/// Single-precision point cloud.
pub type PointCloud32 = PointCloud<f32>;
pub type TvSolution64 = TvSolution<f64>;
pub type TvSolution32 = TvSolution<f32>;
pub type SolverConfig64 = SolverConfig<f64>;
pub type FittedModel64 = regression::FittedModel<f64>;
pub type FittedModel32 = regression::FittedModel<f32>;
