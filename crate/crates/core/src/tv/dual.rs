//! Dual side of the TV problem.
//!
//! With edge duals `u` in the box `[-lambda, lambda]^|E|`, the dual problem is
//! `max 1/2 ||y||^2 - 1/2 ||y - D^T u||^2`, and for any primal `theta`
//!
//! ```text
//! gap(theta, u) = sum_k (lambda |(D theta)_k| - u_k (D theta)_k)
//!               + 1/2 ||y - theta - D^T u||^2  >=  0,
//! ```
//!
//! which is the form evaluated here (no cancellation between large terms).

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::incidence::IncidenceOperator;
use crate::maxflow::FlowNetwork;
use crate::scalar::{max_abs, Scalar};

use super::{SolverConfig, TvProblem};

fn tie_scale<T: Scalar>(problem: &TvProblem<'_, T>, theta: &[T]) -> T {
    max_abs(problem.y())
        .max(max_abs(theta))
        .max(problem.lambda())
        .max(T::one())
}

/// Recovers a feasible dual point from a primal candidate.
///
/// Edges whose endpoints differ get `u_k = lambda * sign((D theta)_k)`, as
/// complementary slackness requires. On the remaining (tied) edges the duals
/// are found by a max-flow that routes the residual `y - theta` through edge
/// capacities `lambda`; for an optimal `theta` that flow is feasible and
/// stationarity holds exactly.
pub fn recover_dual<T: Scalar>(problem: &TvProblem<'_, T>, theta: &[T]) -> Vec<T> {
    let graph = problem.graph();
    let lambda = problem.lambda();
    let n = graph.n();
    let tie = T::cut_tolerance() * tie_scale(problem, theta);
    let mut u = vec![T::zero(); graph.edge_count()];
    let mut supply: Vec<T> = problem.y().iter().zip(theta).map(|(a, b)| *a - *b).collect();
    let mut free = Vec::new();
    for (k, &(i, j)) in graph.edges().iter().enumerate() {
        let diff = theta[i] - theta[j];
        if diff.abs() > tie {
            u[k] = if diff > T::zero() { lambda } else { -lambda };
            supply[i] = supply[i] - u[k];
            supply[j] = supply[j] + u[k];
        } else {
            free.push(k);
        }
    }
    if free.is_empty() || lambda == T::zero() {
        return u;
    }
    // Node v must absorb a net inflow of supply[v].
    let (source, sink) = (n, n + 1);
    let mut net = FlowNetwork::new(n + 2);
    for (v, &s) in supply.iter().enumerate() {
        if s > T::zero() {
            net.add_edge(v, sink, s, T::zero());
        } else if s < T::zero() {
            net.add_edge(source, v, -s, T::zero());
        }
    }
    let ids: Vec<_> = free
        .iter()
        .map(|&k| {
            let (i, j) = graph.edges()[k];
            net.add_edge(i, j, lambda, lambda)
        })
        .collect();
    net.max_flow(
        source,
        sink,
        T::cut_tolerance() * max_abs(&supply).max(lambda) * T::lit(1e-3),
    );
    for (&k, id) in free.iter().zip(ids) {
        u[k] = (-net.flow(id)).max(-lambda).min(lambda);
    }
    u
}

/// Gap between the primal value at `theta` and the dual value at `u`.
pub(super) fn gap_with<T: Scalar>(problem: &TvProblem<'_, T>, theta: &[T], u: &[T]) -> T {
    let graph = problem.graph();
    let lambda = problem.lambda();
    let mut slack = T::zero();
    let mut stationarity = vec![T::zero(); theta.len()];
    for (v, s) in stationarity.iter_mut().enumerate() {
        *s = problem.y()[v] - theta[v];
    }
    for (k, &(i, j)) in graph.edges().iter().enumerate() {
        let d = theta[i] - theta[j];
        slack = slack + (lambda * d.abs() - u[k] * d);
        stationarity[i] = stationarity[i] - u[k];
        stationarity[j] = stationarity[j] + u[k];
    }
    let resid: T = stationarity.iter().map(|r| *r * *r).sum();
    (slack + T::lit(0.5) * resid).max(T::zero())
}

/// Duality gap of `theta` against the dual point recovered from it. Zero
/// (to rounding) iff `theta` is optimal, and always an upper bound on
/// `objective(theta) - optimum`.
pub fn duality_gap<T: Scalar>(problem: &TvProblem<'_, T>, theta: &[T]) -> Result<T> {
    if theta.len() != problem.y().len() {
        return Err(invalid("theta length does not match the problem"));
    }
    let u = recover_dual(problem, theta);
    Ok(gap_with(problem, theta, &u))
}

/// Optimality residuals of a primal-dual pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktResiduals {
    /// `||theta - y + D^T u||_inf`.
    pub stationarity: f64,
    /// `max_k (|u_k| - lambda)_+`.
    pub box_violation: f64,
    /// `max |lambda - u_k sign((D theta)_k)|` over edges whose endpoint
    /// values differ by more than `tie`.
    pub slackness: f64,
}

pub fn kkt_residuals<T: Scalar>(problem: &TvProblem<'_, T>, theta: &[T], u: &[T], tie: T) -> Result<KktResiduals> {
    let op = IncidenceOperator::new(problem.graph());
    let dtu = op.apply_transpose(u)?;
    if theta.len() != dtu.len() {
        return Err(invalid("theta length does not match the problem"));
    }
    let lambda = problem.lambda();
    let stationarity = theta
        .iter()
        .zip(problem.y())
        .zip(&dtu)
        .map(|((t, y), w)| (*t - *y + *w).abs())
        .fold(T::zero(), T::max);
    let box_violation = u
        .iter()
        .map(|v| (v.abs() - lambda).max(T::zero()))
        .fold(T::zero(), T::max);
    let slackness = problem
        .graph()
        .edges()
        .iter()
        .zip(u)
        .filter(|(&(i, j), _)| (theta[i] - theta[j]).abs() > tie)
        .map(|(&(i, j), v)| {
            let signed = if theta[i] > theta[j] { *v } else { -*v };
            (lambda - signed).abs()
        })
        .fold(T::zero(), T::max);
    Ok(KktResiduals {
        stationarity: stationarity.to_f64_lossy(),
        box_violation: box_violation.to_f64_lossy(),
        slackness: slackness.to_f64_lossy(),
    })
}

pub(super) struct ProxOutcome<T> {
    pub theta: Vec<T>,
    pub gap: T,
    pub iterations: usize,
}

const GAP_CHECK_EVERY: usize = 25;

/// Accelerated projected gradient on the dual, with adaptive restart.
/// The primal iterate is `theta = y - D^T u`, so stationarity holds by
/// construction and the gap reduces to the slackness term.
pub(super) fn proximal_dual<T: Scalar>(
    problem: &TvProblem<'_, T>,
    config: &SolverConfig<T>,
    start: Option<&[T]>,
) -> ProxOutcome<T> {
    let graph = problem.graph();
    let lambda = problem.lambda();
    let y = problem.y();
    let m = graph.edge_count();
    let clip = |v: T| v.max(-lambda).min(lambda);
    let primal = |u: &[T]| -> Vec<T> {
        let mut theta = y.to_vec();
        for (&(i, j), &uk) in graph.edges().iter().zip(u) {
            theta[i] = theta[i] - uk;
            theta[j] = theta[j] + uk;
        }
        theta
    };
    if m == 0 || lambda == T::zero() {
        return ProxOutcome {
            theta: y.to_vec(),
            gap: T::zero(),
            iterations: 0,
        };
    }
    let max_degree = graph.degrees().into_iter().max().unwrap_or(1).max(1);
    let step = T::one() / T::from_usize(2 * max_degree).unwrap();

    let mut u: Vec<T> = match start {
        Some(s) if s.len() == m => s.iter().map(|&v| clip(v)).collect(),
        _ => vec![T::zero(); m],
    };
    let mut z = u.clone();
    let mut u_prev = u.clone();
    let mut momentum = T::one();
    let mut best = (primal(&u), T::infinity());

    for iter in 1..=config.max_iterations {
        let theta_z = primal(&z);
        // gradient of 1/2 ||y - D^T z||^2 w.r.t. z is -D theta_z
        std::mem::swap(&mut u_prev, &mut u);
        for (k, &(i, j)) in graph.edges().iter().enumerate() {
            u[k] = clip(z[k] + step * (theta_z[i] - theta_z[j]));
        }
        let next = (T::one() + (T::one() + T::lit(4.0) * momentum * momentum).sqrt()) / T::lit(2.0);
        let beta = (momentum - T::one()) / next;
        momentum = next;
        // restart when the step opposes the momentum direction
        let mut dot = T::zero();
        for k in 0..m {
            dot = dot + (z[k] - u[k]) * (u[k] - u_prev[k]);
        }
        if dot > T::zero() {
            momentum = T::one();
            z.copy_from_slice(&u);
        } else {
            for k in 0..m {
                z[k] = u[k] + beta * (u[k] - u_prev[k]);
            }
        }

        if iter % GAP_CHECK_EVERY == 0 || iter == config.max_iterations {
            let theta = primal(&u);
            let gap = gap_with(problem, &theta, &u);
            let target = problem
                .objective(&theta)
                .map(|o| problem.gap_target(config.tol, o))
                .unwrap_or(T::zero());
            if gap < best.1 {
                best = (theta, gap);
            }
            if best.1 <= target {
                return ProxOutcome {
                    theta: best.0,
                    gap: best.1,
                    iterations: iter,
                };
            }
        }
    }
    ProxOutcome {
        theta: best.0,
        gap: best.1,
        iterations: config.max_iterations,
    }
}

/// Smallest penalty at which the solution is constant on every connected
/// component of `graph`, to relative precision about `1e-9`.
///
/// At penalty `c` the component means are optimal iff the centered response
/// can be routed as a flow with capacity `c` on every edge, which is checked
/// by max-flow inside a bisection on `c`.
pub fn saturation_lambda<T: Scalar>(graph: &crate::graph::NeighborGraph, y: &[T]) -> Result<T> {
    if y.len() != graph.n() {
        return Err(invalid("response length differs from the number of vertices"));
    }
    let mut resid = y.to_vec();
    for comp in graph.components() {
        let len = T::from_usize(comp.len()).unwrap();
        let mean = comp.iter().map(|&v| y[v]).sum::<T>() / len;
        comp.iter().for_each(|&v| resid[v] = y[v] - mean);
    }
    let demand: T = resid.iter().filter(|r| **r > T::zero()).copied().sum();
    if demand == T::zero() || graph.edge_count() == 0 {
        return Ok(T::zero());
    }
    let n = graph.n();
    let tol = T::cut_tolerance() * max_abs(&resid) * T::lit(1e-3);
    let routes = |cap: T| {
        let mut net = FlowNetwork::new(n + 2);
        for (v, &r) in resid.iter().enumerate() {
            if r > T::zero() {
                net.add_edge(n, v, r, T::zero());
            } else if r < T::zero() {
                net.add_edge(v, n + 1, -r, T::zero());
            }
        }
        for &(i, j) in graph.edges() {
            net.add_edge(i, j, cap, cap);
        }
        net.max_flow(n, n + 1, tol) >= demand - T::cut_tolerance() * demand
    };
    let (mut lo, mut hi) = (T::zero(), demand);
    let precision = T::cut_tolerance().max(T::lit(1e-9));
    while hi - lo > precision * hi {
        let mid = (lo + hi) / T::lit(2.0);
        if routes(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
