//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use knnfl::{NeighborGraph, PointCloud64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn sqd(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Symmetrized K-NN edge list by exhaustive sorting, ties by index.
pub fn brute_knn_edges(cloud: &PointCloud64, k: usize) -> Vec<(usize, usize)> {
    let n = cloud.len();
    let mut edges = Vec::new();
    for i in 0..n {
        let mut others: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (sqd(cloud.point(i), cloud.point(j)), j))
            .collect();
        others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in others.iter().take(k) {
            edges.push((i.min(j), i.max(j)));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    edges
}

/// All pairs at distance strictly below `eps`.
pub fn brute_eps_edges(cloud: &PointCloud64, eps: f64) -> Vec<(usize, usize)> {
    let n = cloud.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if sqd(cloud.point(i), cloud.point(j)) < eps * eps {
                edges.push((i, j));
            }
        }
    }
    edges
}

pub fn objective(y: &[f64], edges: &[(usize, usize)], lambda: f64, theta: &[f64]) -> f64 {
    let fit: f64 = y.iter().zip(theta).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() * 0.5;
    let tv: f64 = edges.iter().map(|&(i, j)| (theta[i] - theta[j]).abs()).sum();
    fit + lambda * tv
}

fn dt(n: usize, edges: &[(usize, usize)], u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (k, &(i, j)) in edges.iter().enumerate() {
        out[i] += u[k];
        out[j] -= u[k];
    }
    out
}

pub struct OracleResult {
    pub theta: Vec<f64>,
    pub gap: f64,
    pub steps: usize,
}

/// Accelerated projected gradient on the box-constrained dual
/// `min_u 1/2 ||y - D^T u||^2, |u| <= lambda`, restarted whenever the dual
/// objective increases. Stops after `max_steps` or once the primal-dual gap
/// of `theta = y - D^T u` falls below `gap_tol`.
pub fn fista_oracle(y: &[f64], edges: &[(usize, usize)], lambda: f64, max_steps: usize, gap_tol: f64) -> OracleResult {
    let n = y.len();
    let m = edges.len();
    if m == 0 || lambda == 0.0 {
        return OracleResult {
            theta: y.to_vec(),
            gap: 0.0,
            steps: 0,
        };
    }
    let mut deg = vec![0usize; n];
    for &(i, j) in edges {
        deg[i] += 1;
        deg[j] += 1;
    }
    let lip = 2.0 * *deg.iter().max().unwrap() as f64;
    let step = 1.0 / lip;
    let mut u = vec![0.0; m];
    let mut v = u.clone();
    let mut t = 1.0f64;
    let dual_obj = |u: &[f64]| -> f64 {
        let r = dt(n, edges, u);
        y.iter().zip(&r).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() * 0.5
    };
    let mut prev = dual_obj(&u);
    let mut steps = 0;
    let mut gap = f64::INFINITY;
    while steps < max_steps {
        steps += 1;
        let theta: Vec<f64> = y.iter().zip(dt(n, edges, &v)).map(|(a, b)| a - b).collect();
        let next: Vec<f64> = edges
            .iter()
            .zip(&v)
            .map(|(&(i, j), &vk)| (vk + step * (theta[i] - theta[j])).clamp(-lambda, lambda))
            .collect();
        let cur = dual_obj(&next);
        if cur > prev {
            t = 1.0;
            v = u.clone();
            continue;
        }
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let beta = (t - 1.0) / t_next;
        v = next.iter().zip(&u).map(|(a, b)| a + beta * (a - b)).collect();
        u = next;
        t = t_next;
        prev = cur;
        if steps % 50 == 0 {
            let theta: Vec<f64> = y.iter().zip(dt(n, edges, &u)).map(|(a, b)| a - b).collect();
            let primal = objective(y, edges, lambda, &theta);
            let dual = 0.5 * y.iter().map(|a| a * a).sum::<f64>() - cur;
            gap = primal - dual;
            if gap <= gap_tol {
                return OracleResult { theta, gap, steps };
            }
        }
    }
    let theta: Vec<f64> = y.iter().zip(dt(n, edges, &u)).map(|(a, b)| a - b).collect();
    let dual = 0.5 * y.iter().map(|a| a * a).sum::<f64>() - dual_obj(&u);
    gap = gap.min(objective(y, edges, lambda, &theta) - dual);
    OracleResult { theta, gap, steps }
}

/// Kinds of random test graphs.
#[derive(Debug, Clone, Copy)]
pub enum Family {
    Chain,
    Grid,
    Knn,
    Disconnected,
}

/// A random instance: graph, responses and penalty.
pub fn random_instance(family: Family, seed: u64) -> (NeighborGraph, Vec<f64>, f64) {
    let mut r = rng(seed);
    let graph = match family {
        Family::Chain => NeighborGraph::chain(r.random_range(2..=50)),
        Family::Grid => NeighborGraph::grid2d(r.random_range(2..=7), r.random_range(2..=7)),
        Family::Knn => {
            let n = r.random_range(5..=50);
            let flat: Vec<f64> = (0..2 * n).map(|_| r.random()).collect();
            let cloud = PointCloud64::from_flat(2, flat).unwrap();
            knnfl::build_knn_graph(&cloud, r.random_range(1..=4)).unwrap()
        }
        Family::Disconnected => {
            let a = r.random_range(2..=20);
            let b = r.random_range(2..=20);
            let c = r.random_range(1..=5);
            let mut edges: Vec<(usize, usize)> = (0..a - 1).map(|i| (i, i + 1)).collect();
            edges.extend((a..a + b - 1).map(|i| (i, i + 1)));
            edges.push((a, a + b - 1));
            NeighborGraph::from_edges(a + b + c, edges).unwrap()
        }
    };
    let n = graph.n();
    let normal = Normal::new(0.0, 1.0).unwrap();
    let levels: Vec<f64> = (0..3).map(|_| 3.0 * normal.sample(&mut r)).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| levels[(3 * i) / n.max(1)] + normal.sample(&mut r))
        .collect();
    let lambda = 10f64.powf(r.random_range(-2.0..1.0));
    (graph, y, lambda)
}
