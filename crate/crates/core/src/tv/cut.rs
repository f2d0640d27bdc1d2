//! Exact TV denoising by recursive minimum cuts.
//!
//! For a threshold `t`, the set `{theta_hat > t}` is the minimal minimizer of
//! the cut function `F_t(A) = sum_{i in A} (t - y_i) + lambda * cut(A)`.
//! Splitting a vertex set `S` at any `t` therefore separates it into two
//! sets whose values lie on either side of `t`; each edge crossing the split
//! then only contributes a linear term, folded into the effective response
//! (`-lambda` on the upper endpoint, `+lambda` on the lower one), and the two
//! halves are solved independently.
//!
//! Choosing `t` as the mean effective response of `S` also detects the
//! leaves: the solution on `S` is constant (and equal to that mean) exactly
//! when the cut at the mean is empty.

use crate::graph::Adjacency;
use crate::maxflow::FlowNetwork;
use crate::scalar::{max_abs, Scalar};

use super::TvProblem;

const UNASSIGNED: usize = usize::MAX;

struct Task {
    members: Vec<usize>,
    use_hint: bool,
}

/// Returns the minimizer and the number of minimum cuts computed.
pub(super) fn solve<T: Scalar>(problem: &TvProblem<'_, T>, warm: Option<&[T]>) -> (Vec<T>, usize) {
    let y = problem.y();
    let lambda = problem.lambda();
    let n = y.len();
    if lambda == T::zero() || problem.graph().edge_count() == 0 {
        return (y.to_vec(), 0);
    }
    let adj = problem.graph().adjacency();
    let mut solver = CutSolver {
        adj: &adj,
        lambda,
        y_eff: y.to_vec(),
        group: vec![UNASSIGNED; n],
        local: vec![UNASSIGNED; n],
        next_group: 0,
        theta: vec![T::zero(); n],
        hint: warm,
        cuts: 0,
        tol: T::cut_tolerance(),
    };
    let all: Vec<usize> = (0..n).collect();
    let mut stack = Vec::new();
    solver.push_components(&all, true, &mut stack);
    while let Some(task) = stack.pop() {
        solver.process(task, &mut stack);
    }
    (solver.theta, solver.cuts)
}

struct CutSolver<'a, T> {
    adj: &'a Adjacency,
    lambda: T,
    y_eff: Vec<T>,
    /// Current group of each vertex; edges only matter inside a group.
    group: Vec<usize>,
    /// Scratch: position of a vertex inside the task being processed.
    local: Vec<usize>,
    next_group: usize,
    theta: Vec<T>,
    hint: Option<&'a [T]>,
    cuts: usize,
    tol: T,
}

impl<T: Scalar> CutSolver<'_, T> {
    /// Splits `set` into connected components of its induced subgraph and
    /// queues each as a task.
    fn push_components(&mut self, set: &[usize], use_hint: bool, stack: &mut Vec<Task>) {
        let mark = self.next_group;
        self.next_group += 1;
        for &v in set {
            self.group[v] = mark;
        }
        let mut queue = Vec::new();
        for &root in set {
            if self.group[root] != mark {
                continue;
            }
            let id = self.next_group;
            self.next_group += 1;
            self.group[root] = id;
            queue.clear();
            queue.push(root);
            let mut head = 0;
            while head < queue.len() {
                let v = queue[head];
                head += 1;
                for &(w, _) in self.adj.neighbors(v) {
                    if self.group[w] == mark {
                        self.group[w] = id;
                        queue.push(w);
                    }
                }
            }
            let mut members = queue.clone();
            members.sort_unstable();
            stack.push(Task { members, use_hint });
        }
    }

    fn mean_effective(&self, members: &[usize]) -> T {
        let sum: T = members.iter().map(|&v| self.y_eff[v]).sum();
        sum / T::from_usize(members.len()).unwrap()
    }

    /// A threshold from the warm start that splits `members`, if it has
    /// more than one distinct value there.
    fn hint_threshold(&self, members: &[usize]) -> Option<T> {
        let hint = self.hint?;
        let mut vals: Vec<T> = members.iter().map(|&v| hint[v]).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (lo, hi) = (vals[0], vals[vals.len() - 1]);
        if hi - lo <= self.tol * (lo.abs().max(hi.abs()) + T::one()) {
            return None;
        }
        let half = T::lit(0.5);
        let b = vals[vals.len() / 2];
        match vals.iter().rev().copied().find(|&v| v < b) {
            Some(a) => Some(half * (a + b)),
            None => {
                let c = vals.iter().copied().find(|&v| v > b)?;
                Some(half * (b + c))
            }
        }
    }

    fn process(&mut self, task: Task, stack: &mut Vec<Task>) {
        let members = task.members;
        if members.len() == 1 {
            let v = members[0];
            self.theta[v] = self.y_eff[v];
            return;
        }
        let hinted = if task.use_hint {
            self.hint_threshold(&members)
        } else {
            None
        };
        let threshold = hinted.unwrap_or_else(|| self.mean_effective(&members));
        let upper = self.min_cut(&members, threshold);
        let count = upper.iter().filter(|&&b| b).count();
        if count == 0 || count == members.len() {
            if hinted.is_some() {
                stack.push(Task {
                    members,
                    use_hint: false,
                });
            } else {
                for &v in &members {
                    self.theta[v] = threshold;
                }
            }
            return;
        }

        let (mut above, mut below) = (Vec::with_capacity(count), Vec::new());
        for (k, &v) in members.iter().enumerate() {
            if upper[k] {
                above.push(v);
            } else {
                below.push(v);
            }
        }
        // Fold the crossing edges into the effective responses. `local`
        // still holds the task positions written by `min_cut`.
        let g = self.group[members[0]];
        for &v in &above {
            for &(w, _) in self.adj.neighbors(v) {
                if self.group[w] == g && !upper[self.local[w]] {
                    self.y_eff[v] = self.y_eff[v] - self.lambda;
                    self.y_eff[w] = self.y_eff[w] + self.lambda;
                }
            }
        }
        self.push_components(&above, task.use_hint, stack);
        self.push_components(&below, task.use_hint, stack);
    }

    /// Minimal minimizer of `F_t` restricted to `members`, as a mask over
    /// `members`.
    fn min_cut(&mut self, members: &[usize], threshold: T) -> Vec<bool> {
        self.cuts += 1;
        let m = members.len();
        for (k, &v) in members.iter().enumerate() {
            self.local[v] = k;
        }
        let (source, sink) = (m, m + 1);
        let mut net = FlowNetwork::new(m + 2);
        let excess: Vec<T> = members.iter().map(|&v| self.y_eff[v] - threshold).collect();
        for (k, &a) in excess.iter().enumerate() {
            if a > T::zero() {
                net.add_edge(source, k, a, T::zero());
            } else if a < T::zero() {
                net.add_edge(k, sink, -a, T::zero());
            }
        }
        let g = self.group[members[0]];
        for (k, &v) in members.iter().enumerate() {
            for &(w, _) in self.adj.neighbors(v) {
                if w > v && self.group[w] == g {
                    net.add_edge(k, self.local[w], self.lambda, self.lambda);
                }
            }
        }
        let tol = self.tol * max_abs(&excess).max(self.lambda);
        net.max_flow(source, sink, tol);
        let mut side = net.source_side(source, tol);
        side.truncate(m);
        side
    }
}
