//! Graph total-variation denoising (the graph fused lasso):
//!
//! ```text
//! minimize  1/2 ||y - theta||^2 + lambda * ||D theta||_1
//! ```
//!
//! where `D` is the oriented incidence operator of the graph. The primary
//! solver ([`Method::ParametricCut`]) is exact: it recursively splits vertex
//! sets at level thresholds by minimum cuts. A first-order method on the dual
//! ([`Method::ProximalDual`]) serves as fallback and cross-check. Every
//! returned solution carries a duality-gap certificate computed from a dual
//! point recovered independently of the method that produced it.

mod cut;
mod dual;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use dual::{duality_gap, kkt_residuals, recover_dual, saturation_lambda, KktResiduals};

use crate::error::{invalid, Error, Result};
use crate::graph::NeighborGraph;
use crate::incidence::total_variation;
use crate::scalar::Scalar;

/// An instance of the TV-denoising problem. Borrowed, so a path of penalties
/// can share one response vector and graph.
#[derive(Debug, Clone, Copy)]
pub struct TvProblem<'a, T> {
    y: &'a [T],
    lambda: T,
    graph: &'a NeighborGraph,
}

impl<'a, T: Scalar> TvProblem<'a, T> {
    pub fn new(y: &'a [T], lambda: T, graph: &'a NeighborGraph) -> Result<Self> {
        if y.len() != graph.n() {
            return Err(invalid(format!(
                "response has length {}, graph has {} vertices",
                y.len(),
                graph.n()
            )));
        }
        if !lambda.is_finite() || lambda < T::zero() {
            return Err(invalid(format!(
                "lambda must be finite and non-negative (got {lambda})"
            )));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite response at index {i}")));
        }
        Ok(Self { y, lambda, graph })
    }

    pub fn y(&self) -> &'a [T] {
        self.y
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn graph(&self) -> &'a NeighborGraph {
        self.graph
    }

    /// `1/2 ||y - theta||^2 + lambda ||D theta||_1`.
    pub fn objective(&self, theta: &[T]) -> Result<T> {
        if theta.len() != self.y.len() {
            return Err(invalid("theta length does not match the problem"));
        }
        let half = T::lit(0.5);
        let fit: T = self.y.iter().zip(theta).map(|(a, b)| (*a - *b) * (*a - *b)).sum();
        Ok(half * fit + self.lambda * total_variation(self.graph, theta)?)
    }

    /// Duality-gap target for a given relative tolerance.
    pub fn gap_target(&self, tol: T, objective: T) -> T {
        tol * (T::one() + objective.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ParametricCut,
    ProximalDual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TvSolution<T> {
    pub theta: Vec<T>,
    pub objective: T,
    pub duality_gap: T,
    pub method: Method,
    /// Minimum cuts computed (parametric-cut method).
    pub cuts: usize,
    /// First-order iterations (proximal-dual method).
    pub iterations: usize,
    pub seconds: f64,
}

/// Per-solve diagnostic record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub lambda: f64,
    pub objective: f64,
    pub gap: f64,
    pub seconds: Option<f64>,
    pub cuts: usize,
    pub iterations: usize,
    pub method: Method,
}

impl<T: Scalar> TvSolution<T> {
    pub fn diagnostics(&self, lambda: T) -> SolveDiagnostics {
        SolveDiagnostics {
            lambda: lambda.to_f64_lossy(),
            objective: self.objective.to_f64_lossy(),
            gap: self.duality_gap.to_f64_lossy(),
            seconds: Some(self.seconds),
            cuts: self.cuts,
            iterations: self.iterations,
            method: self.method,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig<T> {
    /// Relative duality-gap tolerance: success means
    /// `gap <= tol * (1 + |objective|)`.
    pub tol: T,
    pub method: Method,
    /// Iteration budget of the proximal-dual method.
    pub max_iterations: usize,
    /// Whether a failed parametric-cut certificate falls back to the
    /// proximal-dual method before giving up.
    pub fallback: bool,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            tol: T::default_gap_tolerance(),
            method: Method::ParametricCut,
            max_iterations: 200_000,
            fallback: true,
        }
    }
}

impl<T: Scalar> SolverConfig<T> {
    pub fn with_tol(mut self, tol: T) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_max_iterations(mut self, it: usize) -> Self {
        self.max_iterations = it;
        self
    }
}

/// Solves with the default configuration.
pub fn solve<T: Scalar>(problem: &TvProblem<'_, T>) -> Result<TvSolution<T>> {
    solve_with(problem, &SolverConfig::default(), None)
}

/// Solves `problem`. `warm` is a previous solution (e.g. at a nearby
/// penalty) used only to speed up the search; the result does not depend
/// on it beyond rounding.
pub fn solve_with<T: Scalar>(
    problem: &TvProblem<'_, T>,
    config: &SolverConfig<T>,
    warm: Option<&[T]>,
) -> Result<TvSolution<T>> {
    if !(config.tol > T::zero()) {
        return Err(invalid("solver tolerance must be positive"));
    }
    if let Some(w) = warm {
        if w.len() != problem.y.len() {
            return Err(invalid("warm start has the wrong length"));
        }
    }
    let start = Instant::now();
    let mut prox_start = None;
    let mut cuts = 0;
    if config.method == Method::ParametricCut {
        let (theta, n_cuts) = cut::solve(problem, warm);
        cuts = n_cuts;
        let u = recover_dual(problem, &theta);
        let gap = dual::gap_with(problem, &theta, &u);
        let objective = problem.objective(&theta)?;
        if gap <= problem.gap_target(config.tol, objective) {
            return Ok(TvSolution {
                theta,
                objective,
                duality_gap: gap,
                method: Method::ParametricCut,
                cuts,
                iterations: 0,
                seconds: start.elapsed().as_secs_f64(),
            });
        }
        if !config.fallback {
            return Err(failure(&theta, gap, config.tol));
        }
        prox_start = Some(u);
    }
    let out = dual::proximal_dual(problem, config, prox_start.as_deref());
    let objective = problem.objective(&out.theta)?;
    if out.gap <= problem.gap_target(config.tol, objective) {
        Ok(TvSolution {
            theta: out.theta,
            objective,
            duality_gap: out.gap,
            method: Method::ProximalDual,
            cuts,
            iterations: out.iterations,
            seconds: start.elapsed().as_secs_f64(),
        })
    } else {
        Err(failure(&out.theta, out.gap, config.tol))
    }
}

fn failure<T: Scalar>(theta: &[T], gap: T, tol: T) -> Error {
    Error::SolverFailure {
        theta: theta.iter().map(|v| v.to_f64_lossy()).collect(),
        gap: gap.to_f64_lossy(),
        tol: tol.to_f64_lossy(),
    }
}

/// Solves along a descending sequence of penalties, warm-starting each solve
/// from the previous solution. Errors are reported per penalty and do not
/// stop the path.
pub fn solve_path<T: Scalar>(
    y: &[T],
    graph: &NeighborGraph,
    lambdas: &[T],
    config: &SolverConfig<T>,
) -> Result<Vec<Result<TvSolution<T>>>> {
    if lambdas.windows(2).any(|w| w[1] > w[0]) {
        return Err(invalid("penalty path must be sorted in descending order"));
    }
    let mut out = Vec::with_capacity(lambdas.len());
    let mut warm: Option<Vec<T>> = None;
    for &lambda in lambdas {
        let res = TvProblem::new(y, lambda, graph).and_then(|p| solve_with(&p, config, warm.as_deref()));
        if let Ok(sol) = &res {
            warm = Some(sol.theta.clone());
        }
        out.push(res);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_nodes() -> NeighborGraph {
        NeighborGraph::chain(2)
    }

    #[test]
    fn zero_penalty_returns_data() {
        let g = NeighborGraph::chain(5);
        let y = [0.3, -1.0, 2.0, 2.0, 7.5];
        let sol = solve(&TvProblem::new(&y, 0.0, &g).unwrap()).unwrap();
        assert_eq!(sol.theta, y.to_vec());
        assert_eq!(sol.duality_gap, 0.0);
    }

    #[test]
    fn two_node_closed_form() {
        let g = two_nodes();
        let y = [0.0f64, 1.0];
        let sol = solve(&TvProblem::new(&y, 0.25, &g).unwrap()).unwrap();
        assert!((sol.theta[0] - 0.25).abs() < 1e-15);
        assert!((sol.theta[1] - 0.75).abs() < 1e-15);
        let sol = solve(&TvProblem::new(&y, 1e6, &g).unwrap()).unwrap();
        assert_eq!(sol.theta, vec![0.5, 0.5]);
    }

    #[test]
    fn rejects_bad_input() {
        let g = two_nodes();
        assert!(TvProblem::new(&[0.0], 1.0, &g).is_err());
        assert!(TvProblem::new(&[0.0, f64::NAN], 1.0, &g).is_err());
        assert!(TvProblem::new(&[0.0, 1.0], -1.0, &g).is_err());
        let p = TvProblem::new(&[0.0, 1.0], 1.0, &g).unwrap();
        assert!(solve_with(&p, &SolverConfig::default().with_tol(0.0), None).is_err());
    }

    #[test]
    fn disconnected_components_saturate_independently() {
        let g = NeighborGraph::from_edges(5, [(0, 1), (1, 2), (3, 4)]).unwrap();
        let y = [1.0f64, 2.0, 6.0, -1.0, 5.0];
        let sol = solve(&TvProblem::new(&y, 1e6, &g).unwrap()).unwrap();
        for v in &sol.theta[..3] {
            assert!((v - 3.0).abs() < 1e-12);
        }
        for v in &sol.theta[3..] {
            assert!((v - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn path_requires_descending_order() {
        let g = two_nodes();
        assert!(solve_path(&[0.0, 1.0], &g, &[0.1, 0.2], &SolverConfig::default()).is_err());
        let path = solve_path(&[0.0, 1.0], &g, &[1e6, 0.0], &SolverConfig::default()).unwrap();
        assert_eq!(path[0].as_ref().unwrap().theta, vec![0.5, 0.5]);
        assert_eq!(path[1].as_ref().unwrap().theta, vec![0.0, 1.0]);
    }

    #[test]
    fn single_precision_works() {
        let g = NeighborGraph::chain(4);
        let y = [0.0f32, 0.1, 1.0, 1.1];
        let sol = solve(&TvProblem::new(&y, 0.2f32, &g).unwrap()).unwrap();
        let expect = [0.15f32, 0.15, 0.95, 0.95];
        for (a, b) in sol.theta.iter().zip(expect) {
            assert!((a - b).abs() < 1e-6, "{:?}", sol.theta);
        }
    }

    #[test]
    fn proximal_dual_agrees_with_cut() {
        let g = NeighborGraph::grid2d(4, 5);
        let y: Vec<f64> = (0..20).map(|i| ((i * 7919) % 13) as f64 / 4.0).collect();
        let p = TvProblem::new(&y, 0.7, &g).unwrap();
        let tol = 1e-9;
        let cut = solve_with(&p, &SolverConfig::default().with_tol(tol), None).unwrap();
        let prox = solve_with(
            &p,
            &SolverConfig::default()
                .with_tol(tol)
                .with_method(Method::ProximalDual)
                .with_max_iterations(2_000_000),
            None,
        )
        .unwrap();
        assert_eq!(prox.method, Method::ProximalDual);
        assert!((cut.objective - prox.objective).abs() <= 10.0 * tol * (1.0 + cut.objective));
    }
}
