//! Exact k-d tree over a borrowed [`PointCloud`].
//!
//! Neighbors are ranked by the key `(squared distance, index)`, so queries
//! agree bit-for-bit with a brute-force scan using [`sq_dist`]: the box
//! lower bound used for pruning is computed with the same monotone float
//! operations and subtrees are only skipped when strictly farther than the
//! current K-th key.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::cloud::PointCloud;
use crate::scalar::{sq_dist, Scalar};

const LEAF_SIZE: usize = 12;
/// Above this dimension pruning rarely pays off and queries fall back to a
/// linear scan.
pub const BRUTE_FORCE_DIM: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor<T> {
    pub index: usize,
    pub sq_dist: T,
}

impl<T: Scalar> Neighbor<T> {
    #[inline]
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.sq_dist
            .partial_cmp(&other.sq_dist)
            .unwrap_or(Ordering::Equal)
            .then(self.index.cmp(&other.index))
    }

    pub fn dist(&self) -> T {
        self.sq_dist.sqrt()
    }
}

struct HeapItem<T>(Neighbor<T>);

impl<T: Scalar> PartialEq for HeapItem<T> {
    fn eq(&self, other: &Self) -> bool {
        self.0.key_cmp(&other.0) == Ordering::Equal
    }
}
impl<T: Scalar> Eq for HeapItem<T> {}
impl<T: Scalar> PartialOrd for HeapItem<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Scalar> Ord for HeapItem<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.key_cmp(&other.0)
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub struct KdTree<'a, T> {
    cloud: &'a PointCloud<T>,
    order: Vec<usize>,
    nodes: Vec<Node>,
    /// Per-node bounding boxes, `2 * dim` values each (`lo`, then `hi`).
    boxes: Vec<T>,
    split_values: Vec<T>,
}

impl<'a, T: Scalar> KdTree<'a, T> {
    pub fn build(cloud: &'a PointCloud<T>) -> Self {
        let n = cloud.len();
        let mut tree = Self {
            cloud,
            order: (0..n).collect(),
            nodes: Vec::new(),
            boxes: Vec::new(),
            split_values: Vec::new(),
        };
        let leaf_size = if cloud.dim() > BRUTE_FORCE_DIM {
            usize::MAX
        } else {
            LEAF_SIZE
        };
        tree.build_node(0, n, leaf_size);
        tree
    }

    pub fn cloud(&self) -> &'a PointCloud<T> {
        self.cloud
    }

    fn build_node(&mut self, start: usize, end: usize, leaf_size: usize) -> usize {
        let dim = self.cloud.dim();
        let id = self.nodes.len();
        let mut lo = vec![T::infinity(); dim];
        let mut hi = vec![T::neg_infinity(); dim];
        for &i in &self.order[start..end] {
            for (a, &c) in self.cloud.point(i).iter().enumerate() {
                lo[a] = lo[a].min(c);
                hi[a] = hi[a].max(c);
            }
        }
        self.boxes.extend_from_slice(&lo);
        self.boxes.extend_from_slice(&hi);
        self.split_values.push(T::zero());
        self.nodes.push(Node::Leaf { start, end });

        if end - start <= leaf_size {
            return id;
        }
        let (axis, spread) =
            (0..dim).map(|a| (a, hi[a] - lo[a])).fold(
                (0, T::neg_infinity()),
                |best, cur| {
                    if cur.1 > best.1 {
                        cur
                    } else {
                        best
                    }
                },
            );
        if spread <= T::zero() {
            // all points identical
            return id;
        }
        let mid = start + (end - start) / 2;
        let cloud = self.cloud;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            cloud.point(a)[axis]
                .partial_cmp(&cloud.point(b)[axis])
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        self.split_values[id] = cloud.point(self.order[mid])[axis];
        let left = self.build_node(start, mid, leaf_size);
        let right = self.build_node(mid, end, leaf_size);
        self.nodes[id] = Node::Split { axis, left, right };
        id
    }

    #[inline]
    fn box_sq_dist(&self, node: usize, q: &[T]) -> T {
        let dim = self.cloud.dim();
        let lo = &self.boxes[2 * dim * node..2 * dim * node + dim];
        let hi = &self.boxes[2 * dim * node + dim..2 * dim * (node + 1)];
        let mut acc = T::zero();
        for a in 0..dim {
            let d = if q[a] < lo[a] {
                q[a] - lo[a]
            } else if q[a] > hi[a] {
                q[a] - hi[a]
            } else {
                T::zero()
            };
            acc = acc + d * d;
        }
        acc
    }

    /// The `k` nearest points to `query`, sorted by `(distance, index)`.
    /// `exclude` removes one index from consideration (a vertex is never its
    /// own neighbor); duplicates at distance zero are still returned.
    pub fn knn(&self, query: &[T], k: usize, exclude: Option<usize>) -> Vec<Neighbor<T>> {
        if k == 0 {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.knn_rec(0, query, k, exclude, &mut heap);
        let mut out: Vec<_> = heap.into_iter().map(|h| h.0).collect();
        out.sort_by(|a, b| a.key_cmp(b));
        out
    }

    fn knn_rec(&self, node: usize, q: &[T], k: usize, exclude: Option<usize>, heap: &mut BinaryHeap<HeapItem<T>>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if Some(i) == exclude {
                        continue;
                    }
                    let cand = Neighbor {
                        index: i,
                        sq_dist: sq_dist(q, self.cloud.point(i)),
                    };
                    if heap.len() < k {
                        heap.push(HeapItem(cand));
                    } else if cand.key_cmp(&heap.peek().unwrap().0) == Ordering::Less {
                        heap.pop();
                        heap.push(HeapItem(cand));
                    }
                }
            }
            Node::Split { axis, left, right } => {
                let (near, far) = if q[axis] < self.split_values[node] {
                    (left, right)
                } else {
                    (right, left)
                };
                for child in [near, far] {
                    if heap.len() < k || self.box_sq_dist(child, q) <= heap.peek().unwrap().0.sq_dist {
                        self.knn_rec(child, q, k, exclude, heap);
                    }
                }
            }
        }
    }

    /// All points with squared distance strictly below `radius_sq`, sorted by
    /// `(distance, index)`.
    pub fn within(&self, query: &[T], radius_sq: T, exclude: Option<usize>) -> Vec<Neighbor<T>> {
        let mut out = Vec::new();
        self.within_rec(0, query, radius_sq, exclude, &mut out);
        out.sort_by(|a, b| a.key_cmp(b));
        out
    }

    fn within_rec(&self, node: usize, q: &[T], r2: T, exclude: Option<usize>, out: &mut Vec<Neighbor<T>>) {
        if self.box_sq_dist(node, q) >= r2 {
            return;
        }
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if Some(i) == exclude {
                        continue;
                    }
                    let d2 = sq_dist(q, self.cloud.point(i));
                    if d2 < r2 {
                        out.push(Neighbor { index: i, sq_dist: d2 });
                    }
                }
            }
            Node::Split { left, right, .. } => {
                self.within_rec(left, q, r2, exclude, out);
                self.within_rec(right, q, r2, exclude, out);
            }
        }
    }
}

/// Linear-scan reference used by tests and as a cross-check.
pub fn brute_force_knn<T: Scalar>(
    cloud: &PointCloud<T>,
    query: &[T],
    k: usize,
    exclude: Option<usize>,
) -> Vec<Neighbor<T>> {
    let mut all: Vec<_> = (0..cloud.len())
        .filter(|&i| Some(i) != exclude)
        .map(|i| Neighbor {
            index: i,
            sq_dist: sq_dist(query, cloud.point(i)),
        })
        .collect();
    all.sort_by(|a, b| a.key_cmp(b));
    all.truncate(k);
    all
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cloud(n: usize, d: usize, seed: u64) -> PointCloud<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let flat: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>()).collect();
        PointCloud::from_flat(d, flat).unwrap()
    }

    #[test]
    fn knn_matches_linear_scan() {
        for (d, seed) in [(1, 1), (2, 2), (3, 3), (6, 4), (25, 5)] {
            let cloud = random_cloud(300, d, seed);
            let tree = KdTree::build(&cloud);
            for i in (0..300).step_by(7) {
                for k in [1, 4, 17] {
                    let a = tree.knn(cloud.point(i), k, Some(i));
                    let b = brute_force_knn(&cloud, cloud.point(i), k, Some(i));
                    assert_eq!(a, b);
                }
            }
        }
    }

    #[test]
    fn ties_resolved_by_index() {
        // 0 is equidistant from 1 and 2, and 3 duplicates 0.
        let cloud = PointCloud::from_line(&[0.0, -1.0, 1.0, 0.0, 5.0]).unwrap();
        let tree = KdTree::build(&cloud);
        let nn: Vec<_> = tree.knn(&[0.0], 3, Some(0)).iter().map(|n| n.index).collect();
        assert_eq!(nn, vec![3, 1, 2]);
        let nn: Vec<_> = tree.knn(&[0.0], 2, Some(3)).iter().map(|n| n.index).collect();
        assert_eq!(nn, vec![0, 1]);
    }

    #[test]
    fn within_is_strict() {
        let cloud = PointCloud::from_line(&[0.0, 0.5, 1.0]).unwrap();
        let tree = KdTree::build(&cloud);
        let hits: Vec<_> = tree.within(&[0.0], 0.25, None).iter().map(|n| n.index).collect();
        assert_eq!(hits, vec![0]);
    }

    #[test]
    fn identical_points() {
        let cloud = PointCloud::from_rows(&vec![[0.3, 0.3]; 40]).unwrap();
        let tree = KdTree::build(&cloud);
        let nn: Vec<_> = tree.knn(&[0.3, 0.3], 3, Some(5)).iter().map(|n| n.index).collect();
        assert_eq!(nn, vec![0, 1, 2]);
    }
}
