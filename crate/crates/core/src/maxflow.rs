//! Dinic max-flow on real-valued capacities.
//!
//! Residual capacities at or below the caller's tolerance count as
//! saturated, both while augmenting and when reading off the minimum cut.

use std::collections::VecDeque;

use crate::scalar::Scalar;

#[derive(Debug, Clone)]
struct Arc<T> {
    to: usize,
    /// Residual capacity.
    cap: T,
    /// Capacity at construction, to recover the flow.
    orig: T,
}

#[derive(Debug, Clone)]
pub struct FlowNetwork<T> {
    adj: Vec<Vec<usize>>,
    arcs: Vec<Arc<T>>,
    level: Vec<i64>,
    cursor: Vec<usize>,
}

/// Handle to an arc pair added with [`FlowNetwork::add_edge`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeId(usize);

impl<T: Scalar> FlowNetwork<T> {
    pub fn new(nodes: usize) -> Self {
        Self {
            adj: vec![Vec::new(); nodes],
            arcs: Vec::new(),
            level: vec![-1; nodes],
            cursor: vec![0; nodes],
        }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    /// Adds arc `from -> to` with capacity `cap`, paired with `to -> from`
    /// of capacity `rev_cap` (zero for a directed edge, `cap` for an
    /// undirected one).
    pub fn add_edge(&mut self, from: usize, to: usize, cap: T, rev_cap: T) -> EdgeId {
        let id = self.arcs.len();
        self.arcs.push(Arc { to, cap, orig: cap });
        self.arcs.push(Arc {
            to: from,
            cap: rev_cap,
            orig: rev_cap,
        });
        self.adj[from].push(id);
        self.adj[to].push(id + 1);
        EdgeId(id)
    }

    /// Net flow pushed along `from -> to` of the given edge (negative when
    /// the flow runs backwards through an undirected edge).
    pub fn flow(&self, e: EdgeId) -> T {
        let a = &self.arcs[e.0];
        a.orig - a.cap
    }

    fn bfs(&mut self, s: usize, t: usize, tol: T) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &a in &self.adj[v] {
                let arc = &self.arcs[a];
                if arc.cap > tol && self.level[arc.to] < 0 {
                    self.level[arc.to] = self.level[v] + 1;
                    queue.push_back(arc.to);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, v: usize, t: usize, limit: T, tol: T) -> T {
        if v == t {
            return limit;
        }
        while self.cursor[v] < self.adj[v].len() {
            let a = self.adj[v][self.cursor[v]];
            let (to, cap) = (self.arcs[a].to, self.arcs[a].cap);
            if cap > tol && self.level[to] == self.level[v] + 1 {
                let pushed = self.dfs(to, t, limit.min(cap), tol);
                if pushed > T::zero() {
                    self.arcs[a].cap = self.arcs[a].cap - pushed;
                    self.arcs[a ^ 1].cap = self.arcs[a ^ 1].cap + pushed;
                    return pushed;
                }
            }
            self.cursor[v] += 1;
        }
        T::zero()
    }

    /// Pushes a maximum flow from `s` to `t` and returns its value.
    pub fn max_flow(&mut self, s: usize, t: usize, tol: T) -> T {
        let mut total = T::zero();
        while self.bfs(s, t, tol) {
            self.cursor.iter_mut().for_each(|c| *c = 0);
            loop {
                let pushed = self.dfs(s, t, T::infinity(), tol);
                if pushed <= T::zero() {
                    break;
                }
                total = total + pushed;
            }
        }
        total
    }

    /// Nodes reachable from `s` in the residual network: the source side of
    /// the minimal minimum cut once `max_flow` has run.
    pub fn source_side(&self, s: usize, tol: T) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &a in &self.adj[v] {
                let arc = &self.arcs[a];
                if arc.cap > tol && !seen[arc.to] {
                    seen[arc.to] = true;
                    queue.push_back(arc.to);
                }
            }
        }
        seen
    }
}
