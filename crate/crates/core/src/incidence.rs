//! Oriented edge-vertex incidence operator of a [`NeighborGraph`].
//!
//! Row `k` for edge `(i, j)`, `i < j`, has `+1` in column `i` and `-1` in
//! column `j`, so `(D theta)_k = theta_i - theta_j`.

use crate::error::{invalid, Result};
use crate::graph::NeighborGraph;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct IncidenceOperator<'a> {
    graph: &'a NeighborGraph,
}

impl<'a> IncidenceOperator<'a> {
    pub fn new(graph: &'a NeighborGraph) -> Self {
        Self { graph }
    }

    pub fn rows(&self) -> usize {
        self.graph.edge_count()
    }

    pub fn cols(&self) -> usize {
        self.graph.n()
    }

    /// `D theta`, one entry per edge.
    pub fn apply<T: Scalar>(&self, theta: &[T]) -> Result<Vec<T>> {
        if theta.len() != self.cols() {
            return Err(invalid(format!(
                "vector has length {}, graph has {} vertices",
                theta.len(),
                self.cols()
            )));
        }
        Ok(self.graph.edges().iter().map(|&(i, j)| theta[i] - theta[j]).collect())
    }

    /// `D^T u`, one entry per vertex.
    pub fn apply_transpose<T: Scalar>(&self, u: &[T]) -> Result<Vec<T>> {
        if u.len() != self.rows() {
            return Err(invalid(format!(
                "vector has length {}, graph has {} edges",
                u.len(),
                self.rows()
            )));
        }
        let mut out = vec![T::zero(); self.cols()];
        for (&(i, j), &uk) in self.graph.edges().iter().zip(u) {
            out[i] = out[i] + uk;
            out[j] = out[j] - uk;
        }
        Ok(out)
    }

    /// Total variation `||D theta||_1`.
    pub fn total_variation<T: Scalar>(&self, theta: &[T]) -> Result<T> {
        Ok(self.apply(theta)?.into_iter().map(|d| d.abs()).sum())
    }
}

/// `||D theta||_1` over `graph`.
pub fn total_variation<T: Scalar>(graph: &NeighborGraph, theta: &[T]) -> Result<T> {
    IncidenceOperator::new(graph).total_variation(theta)
}
