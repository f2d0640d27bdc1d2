//! K-NN and epsilon neighborhood graphs.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{invalid, Result};
use crate::kdtree::KdTree;
use crate::scalar::Scalar;

pub const GRAPH_SCHEMA_VERSION: u32 = 1;

/// How a graph was built.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase")]
pub enum GraphKind {
    /// Symmetrized (union) K-nearest-neighbor graph.
    Knn { k: usize },
    /// Edge iff distance strictly below `eps`.
    Epsilon { eps: f64 },
    /// Built directly from an edge list.
    Custom,
}

/// Undirected simple graph on `0..n` with canonical sorted edges `(i, j)`, `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    kind: GraphKind,
}

impl NeighborGraph {
    /// Builds a graph from arbitrary pairs; pairs are canonicalized, sorted and
    /// deduplicated. Self-loops and out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut edges = Vec::new();
        for (a, b) in pairs {
            if a == b {
                return Err(invalid(format!("self-loop at vertex {a}")));
            }
            if a >= n || b >= n {
                return Err(invalid(format!("edge ({a}, {b}) out of range for {n} vertices")));
            }
            edges.push((a.min(b), a.max(b)));
        }
        edges.sort_unstable();
        edges.dedup();
        Ok(Self {
            n,
            edges,
            kind: GraphKind::Custom,
        })
    }

    /// Path `0 - 1 - ... - (n-1)`.
    pub fn chain(n: usize) -> Self {
        Self {
            n,
            edges: (1..n).map(|i| (i - 1, i)).collect(),
            kind: GraphKind::Custom,
        }
    }

    /// Row-major `rows x cols` 4-connected grid.
    pub fn grid2d(rows: usize, cols: usize) -> Self {
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let v = r * cols + c;
                if c + 1 < cols {
                    edges.push((v, v + 1));
                }
                if r + 1 < rows {
                    edges.push((v, v + cols));
                }
            }
        }
        edges.sort_unstable();
        Self {
            n: rows * cols,
            edges,
            kind: GraphKind::Custom,
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let key = (a.min(b), a.max(b));
        self.edges.binary_search(&key).is_ok()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(i, j) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    pub fn adjacency(&self) -> Adjacency {
        Adjacency::new(self)
    }

    /// Component label of each vertex: the smallest vertex index in its component.
    pub fn component_labels(&self) -> Vec<usize> {
        let adj = self.adjacency();
        let mut label = vec![usize::MAX; self.n];
        let mut queue = VecDeque::new();
        for root in 0..self.n {
            if label[root] != usize::MAX {
                continue;
            }
            label[root] = root;
            queue.push_back(root);
            while let Some(v) = queue.pop_front() {
                for &(w, _) in adj.neighbors(v) {
                    if label[w] == usize::MAX {
                        label[w] = root;
                        queue.push_back(w);
                    }
                }
            }
        }
        label
    }

    /// Vertex sets of the connected components, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let labels = self.component_labels();
        let mut slot = vec![usize::MAX; self.n];
        let mut out: Vec<Vec<usize>> = Vec::new();
        for (v, &l) in labels.iter().enumerate() {
            if slot[l] == usize::MAX {
                slot[l] = out.len();
                out.push(Vec::new());
            }
            out[slot[l]].push(v);
        }
        out
    }

    pub fn stats(&self) -> GraphStats {
        let deg = self.degrees();
        let labels = self.component_labels();
        let component_count = labels.iter().enumerate().filter(|(v, &l)| *v == l).count();
        GraphStats {
            max_degree: deg.iter().copied().max().unwrap_or(0),
            min_degree: deg.iter().copied().min().unwrap_or(0),
            edge_count: self.edges.len(),
            component_count,
            component_labels: labels,
        }
    }

    /// Whether `self` is a subgraph of `other` on the same vertex set.
    pub fn is_subgraph_of(&self, other: &NeighborGraph) -> bool {
        self.n == other.n && self.edges.iter().all(|&(i, j)| other.has_edge(i, j))
    }

    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            schema_version: GRAPH_SCHEMA_VERSION,
            n: self.n,
            kind: self.kind,
            edges: self.edges.iter().map(|&(i, j)| [i, j]).collect(),
        }
    }

    pub fn from_document(doc: GraphDocument) -> Result<Self> {
        let mut g = Self::from_edges(doc.n, doc.edges.into_iter().map(|[i, j]| (i, j)))?;
        g.kind = doc.kind;
        Ok(g)
    }
}

/// Summary statistics of a graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub max_degree: usize,
    pub min_degree: usize,
    pub edge_count: usize,
    pub component_count: usize,
    pub component_labels: Vec<usize>,
}

/// JSON edge-list document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub schema_version: u32,
    pub n: usize,
    #[serde(flatten)]
    pub kind: GraphKind,
    pub edges: Vec<[usize; 2]>,
}

/// Compressed adjacency: for each vertex, `(neighbor, edge index)` pairs.
#[derive(Debug, Clone)]
pub struct Adjacency {
    offsets: Vec<usize>,
    entries: Vec<(usize, usize)>,
}

impl Adjacency {
    fn new(g: &NeighborGraph) -> Self {
        let deg = g.degrees();
        let mut offsets = vec![0; g.n + 1];
        for v in 0..g.n {
            offsets[v + 1] = offsets[v] + deg[v];
        }
        let mut fill = offsets.clone();
        let mut entries = vec![(0, 0); 2 * g.edges.len()];
        for (k, &(i, j)) in g.edges.iter().enumerate() {
            entries[fill[i]] = (j, k);
            fill[i] += 1;
            entries[fill[j]] = (i, k);
            fill[j] += 1;
        }
        Self { offsets, entries }
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.entries[self.offsets[v]..self.offsets[v + 1]]
    }
}

/// Symmetric K-NN graph: `(i, j)` is an edge iff `j` is among the `k` nearest
/// neighbors of `i` or vice versa. Equidistant candidates are ranked by index.
pub fn build_knn_graph<T: Scalar>(cloud: &PointCloud<T>, k: usize) -> Result<NeighborGraph> {
    let n = cloud.len();
    if k == 0 || k >= n {
        return Err(invalid(format!("K must satisfy 1 <= K <= n-1 (K = {k}, n = {n})")));
    }
    let tree = KdTree::build(cloud);
    let lists: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            tree.knn(cloud.point(i), k, Some(i))
                .into_iter()
                .map(|nb| nb.index)
                .collect()
        })
        .collect();
    let pairs = lists
        .iter()
        .enumerate()
        .flat_map(|(i, l)| l.iter().map(move |&j| (i, j)));
    let mut g = NeighborGraph::from_edges(n, pairs)?;
    g.kind = GraphKind::Knn { k };
    Ok(g)
}

/// Epsilon graph: `(i, j)` is an edge iff `|x_i - x_j| < eps`, evaluated as
/// `|x_i - x_j|^2 < eps^2`.
pub fn build_epsilon_graph<T: Scalar>(cloud: &PointCloud<T>, eps: T) -> Result<NeighborGraph> {
    if !(eps > T::zero()) || !eps.is_finite() {
        return Err(invalid(format!("epsilon must be positive and finite (got {eps})")));
    }
    let n = cloud.len();
    let tree = KdTree::build(cloud);
    let r2 = eps * eps;
    let lists: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            tree.within(cloud.point(i), r2, Some(i))
                .into_iter()
                .filter(|nb| nb.index > i)
                .map(|nb| nb.index)
                .collect()
        })
        .collect();
    let pairs = lists
        .iter()
        .enumerate()
        .flat_map(|(i, l)| l.iter().map(move |&j| (i, j)));
    let mut g = NeighborGraph::from_edges(n, pairs)?;
    g.kind = GraphKind::Epsilon {
        eps: eps.to_f64_lossy(),
    };
    Ok(g)
}

/// Builds the graph described by `kind` over `cloud`.
pub fn build_graph<T: Scalar>(cloud: &PointCloud<T>, kind: GraphKind) -> Result<NeighborGraph> {
    match kind {
        GraphKind::Knn { k } => build_knn_graph(cloud, k),
        GraphKind::Epsilon { eps } => build_epsilon_graph(cloud, T::lit(eps)),
        GraphKind::Custom => Err(invalid("cannot rebuild a custom graph from a point cloud")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> PointCloud<f64> {
        PointCloud::from_line(xs).unwrap()
    }

    #[test]
    fn knn_two_points() {
        let g = build_knn_graph(&line(&[0.0, 1.0]), 1).unwrap();
        assert_eq!(g.edges(), &[(0, 1)]);
        assert_eq!(g.kind(), GraphKind::Knn { k: 1 });
    }

    #[test]
    fn knn_union_symmetrization() {
        let g = build_knn_graph(&line(&[0.0, 1.0, 3.0]), 1).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn knn_rejects_bad_k() {
        let c = line(&[0.0, 1.0, 3.0]);
        assert!(build_knn_graph(&c, 3).is_err());
        assert!(build_knn_graph(&c, 0).is_err());
    }

    #[test]
    fn knn_duplicates_are_neighbors() {
        // vertex 2 is equidistant from 0 and 1 and picks the lower index
        let g = build_knn_graph(&line(&[0.0, 0.0, 5.0]), 1).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 2)]);
    }

    #[test]
    fn epsilon_strict() {
        assert_eq!(build_epsilon_graph(&line(&[0.0, 1.0]), 0.5).unwrap().edge_count(), 0);
        assert_eq!(build_epsilon_graph(&line(&[0.0, 1.0]), 1.0).unwrap().edge_count(), 0);
        let g = build_epsilon_graph(&line(&[0.0, 0.3, 1.0]), 0.5).unwrap();
        assert_eq!(g.edges(), &[(0, 1)]);
        assert!(build_epsilon_graph(&line(&[0.0]), 0.0).is_err());
        assert!(build_epsilon_graph(&line(&[0.0]), -1.0).is_err());
    }

    #[test]
    fn stats_edgeless_and_path() {
        let g = NeighborGraph::from_edges(4, []).unwrap();
        let s = g.stats();
        assert_eq!((s.component_count, s.max_degree), (4, 0));
        assert_eq!(s.component_labels, vec![0, 1, 2, 3]);

        let s = NeighborGraph::chain(3).stats();
        assert_eq!((s.component_count, s.max_degree, s.min_degree), (1, 2, 1));
    }

    #[test]
    fn labels_use_smallest_member() {
        let g = NeighborGraph::from_edges(5, [(4, 1), (2, 3)]).unwrap();
        assert_eq!(g.component_labels(), vec![0, 1, 2, 2, 1]);
        assert_eq!(g.components(), vec![vec![0], vec![1, 4], vec![2, 3]]);
    }

    #[test]
    fn from_edges_canonicalizes() {
        let g = NeighborGraph::from_edges(3, [(2, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(g.edges(), &[(0, 2), (1, 2)]);
        assert!(NeighborGraph::from_edges(3, [(1, 1)]).is_err());
        assert!(NeighborGraph::from_edges(3, [(1, 3)]).is_err());
    }

    #[test]
    fn document_round_trip() {
        let g = build_knn_graph(&line(&[0.0, 1.0, 3.0, 3.5]), 2).unwrap();
        let text = serde_json::to_string(&g.to_document()).unwrap();
        assert!(text.contains("\"kind\":\"knn\""));
        assert!(text.contains("\"params\":{\"k\":2}"));
        let back = NeighborGraph::from_document(serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, g);
    }
}
