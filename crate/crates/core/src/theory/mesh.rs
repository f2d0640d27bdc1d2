//! Lattice quantization of a point cloud in the unit cube and the two
//! embedding inequalities relating K-NN total variation to grid total
//! variation.
//!
//! The lattice has `N` points per axis at `(i - 1/2) / N`, `i = 1..=N`
//! (stored 0-based). A cell is the set of points whose nearest lattice
//! point in the sup-norm is that lattice point; ties go to the lowest
//! index. Cells are addressed by a linear index with the first axis
//! varying fastest.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{invalid, Result};
use crate::graph::NeighborGraph;
use crate::incidence::total_variation;

/// Largest dense `theta^I` this module will allocate.
pub const MAX_DENSE_CELLS: u64 = 1 << 26;

/// Constants entering the default resolution formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshConstants {
    /// Volume constant of sup-norm balls (`vol B_inf(r) = c2 r^d`).
    pub c2: f64,
    pub p_max: f64,
    pub l_min: f64,
}

impl MeshConstants {
    /// Values for the uniform density on `[0,1]^d` with the identity map.
    pub fn uniform_cube(d: usize) -> Self {
        Self {
            c2: 2f64.powi(d as i32),
            p_max: 1.0,
            l_min: 1.0,
        }
    }
}

/// `ceil(3 sqrt(d) (2 c2 p_max)^(1/d) n^(1/d) / (l_min K^(1/d)))`.
pub fn mesh_resolution(n: usize, k: usize, d: usize, c: MeshConstants) -> Result<usize> {
    if n == 0 || k == 0 || d == 0 {
        return Err(invalid("n, K and d must all be positive"));
    }
    if !(c.c2 > 0.0 && c.p_max > 0.0 && c.l_min > 0.0) {
        return Err(invalid("mesh constants must be positive"));
    }
    let df = d as f64;
    let inv = 1.0 / df;
    let v =
        3.0 * df.sqrt() * (2.0 * c.c2 * c.p_max).powf(inv) * (n as f64).powf(inv) / (c.l_min * (k as f64).powf(inv));
    Ok((v.ceil() as usize).max(1))
}

/// Lattice coordinate of 0-based index `i` at resolution `n`.
pub fn lattice_coord(i: usize, n: usize) -> f64 {
    (i + 1) as f64 / n as f64 - 1.0 / (2.0 * n as f64)
}

/// Nearest lattice index along one axis, lowest index on ties.
fn axis_cell(x: f64, n: usize) -> usize {
    let guess = ((x * n as f64).floor() as isize).clamp(0, n as isize - 1) as usize;
    let lo = guess.saturating_sub(1);
    let hi = (guess + 1).min(n - 1);
    let mut best = lo;
    let mut best_d = (x - lattice_coord(lo, n)).abs();
    for i in lo + 1..=hi {
        let d = (x - lattice_coord(i, n)).abs();
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Cell geometry of a cloud plus the quantization of one signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshQuantization {
    resolution: usize,
    dim: usize,
    /// Per-axis lattice indices of each point's cell, row-major by point.
    axis_index: Vec<usize>,
    /// Linear cell index of each point.
    cell: Vec<u64>,
    /// Occupied cells (sorted) with their representative point.
    representative: BTreeMap<u64, usize>,
    theta: Vec<f64>,
    theta_i: Vec<f64>,
}

/// Validates and quantizes. `theta` must have one entry per point.
pub fn build_mesh(cloud: &PointCloud<f64>, theta: &[f64], resolution: usize) -> Result<MeshQuantization> {
    if resolution == 0 {
        return Err(invalid("mesh resolution N must be at least 1"));
    }
    if theta.len() != cloud.len() {
        return Err(invalid(format!(
            "signal has length {}, cloud has {} points",
            theta.len(),
            cloud.len()
        )));
    }
    let d = cloud.dim();
    (resolution as u64)
        .checked_pow(d as u32)
        .ok_or_else(|| invalid(format!("N^d overflows for N = {resolution}, d = {d}")))?;
    let mut axis_index = Vec::with_capacity(cloud.len() * d);
    let mut cell = Vec::with_capacity(cloud.len());
    for (i, p) in cloud.points().enumerate() {
        if let Some(c) = p.iter().position(|c| !(0.0..=1.0).contains(c)) {
            return Err(invalid(format!(
                "point {i} has coordinate {} = {} outside [0, 1]",
                c + 1,
                p[c]
            )));
        }
        let mut lin = 0u64;
        let mut stride = 1u64;
        for &x in p {
            let a = axis_cell(x, resolution);
            axis_index.push(a);
            lin += a as u64 * stride;
            stride = stride.wrapping_mul(resolution as u64);
        }
        cell.push(lin);
    }
    let mut representative: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
    for (i, p) in cloud.points().enumerate() {
        let center = &axis_index[i * d..(i + 1) * d];
        let dist = p
            .iter()
            .zip(center)
            .map(|(&x, &a)| (x - lattice_coord(a, resolution)).abs())
            .fold(0.0, f64::max);
        representative
            .entry(cell[i])
            .and_modify(|best| {
                if dist < best.0 {
                    *best = (dist, i);
                }
            })
            .or_insert((dist, i));
    }
    let representative: BTreeMap<u64, usize> = representative.into_iter().map(|(c, (_, i))| (c, i)).collect();
    let mut mesh = MeshQuantization {
        resolution,
        dim: d,
        axis_index,
        cell,
        representative,
        theta: theta.to_vec(),
        theta_i: Vec::new(),
    };
    mesh.theta_i = mesh.project(theta)?;
    Ok(mesh)
}

impl MeshQuantization {
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.cell.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cell.is_empty()
    }

    /// Total number of lattice cells, `N^d`.
    pub fn cell_count(&self) -> u64 {
        (self.resolution as u64).pow(self.dim as u32)
    }

    /// Linear cell index of every point.
    pub fn cells(&self) -> &[u64] {
        &self.cell
    }

    /// Per-axis lattice indices (0-based) of point `i`'s cell.
    pub fn cell_coords(&self, i: usize) -> &[usize] {
        &self.axis_index[i * self.dim..(i + 1) * self.dim]
    }

    /// Occupied cells with their representative point, by cell index.
    pub fn representatives(&self) -> impl Iterator<Item = (u64, usize)> + '_ {
        self.representative.iter().map(|(&c, &i)| (c, i))
    }

    pub fn representative_of(&self, point: usize) -> usize {
        self.representative[&self.cell[point]]
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// The quantized signal `theta_I`.
    pub fn theta_i(&self) -> &[f64] {
        &self.theta_i
    }

    /// `theta_I` for another signal on the same cloud.
    pub fn project(&self, theta: &[f64]) -> Result<Vec<f64>> {
        if theta.len() != self.len() {
            return Err(invalid(format!(
                "signal has length {}, mesh has {} points",
                theta.len(),
                self.len()
            )));
        }
        Ok((0..self.len()).map(|i| theta[self.representative_of(i)]).collect())
    }

    /// Nonzero part of `theta^I`: `(cell, value)` for each occupied cell.
    pub fn theta_sup_sparse(&self, theta: &[f64]) -> Result<Vec<(u64, f64)>> {
        if theta.len() != self.len() {
            return Err(invalid("signal length does not match the mesh"));
        }
        Ok(self.representatives().map(|(c, i)| (c, theta[i])).collect())
    }

    /// `theta^I` with zeros in empty cells, length `N^d`.
    pub fn theta_sup(&self) -> Result<Vec<f64>> {
        let total = self.cell_count();
        if total > MAX_DENSE_CELLS {
            return Err(invalid(format!("N^d = {total} cells is too many for a dense vector")));
        }
        let mut out = vec![0.0; total as usize];
        for (c, v) in self.theta_sup_sparse(&self.theta)? {
            out[c as usize] = v;
        }
        Ok(out)
    }

    /// Pairs of occupied cells that are lattice neighbors (differ by one
    /// step along exactly one axis), as `(lower, upper)` cell indices.
    pub fn occupied_grid_edges(&self) -> Vec<(u64, u64)> {
        let mut edges = Vec::new();
        let n = self.resolution as u64;
        for (&c, &rep) in &self.representative {
            let coords = self.cell_coords(rep);
            let mut stride = 1u64;
            for &a in coords {
                if (a as u64) + 1 < n && self.representative.contains_key(&(c + stride)) {
                    edges.push((c, c + stride));
                }
                stride *= n;
            }
        }
        edges
    }

    /// `||D theta^I||_1` over the grid graph on occupied cells.
    pub fn grid_total_variation(&self, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.len() {
            return Err(invalid("signal length does not match the mesh"));
        }
        Ok(self
            .occupied_grid_edges()
            .into_iter()
            .map(|(a, b)| (theta[self.representative[&a]] - theta[self.representative[&b]]).abs())
            .sum())
    }

    /// `||D theta^I||_1` over the full `N^d` lattice with empty cells at zero.
    pub fn full_grid_total_variation(&self) -> Result<f64> {
        let dense = self.theta_sup()?;
        let n = self.resolution;
        let mut tv = 0.0;
        let mut coords = vec![0usize; self.dim];
        for (c, &v) in dense.iter().enumerate() {
            let mut rest = c;
            for a in coords.iter_mut() {
                *a = rest % n;
                rest /= n;
            }
            let mut stride = 1;
            for &a in &coords {
                if a + 1 < n {
                    tv += (v - dense[c + stride]).abs();
                }
                stride *= n;
            }
        }
        Ok(tv)
    }

    /// Point pairs lying in the same or in lattice-adjacent cells that are
    /// not joined in `graph`. An empty result means the connectivity event
    /// holds.
    pub fn omega_violations(&self, graph: &NeighborGraph) -> Result<Vec<(usize, usize)>> {
        if graph.n() != self.len() {
            return Err(invalid(format!(
                "graph has {} vertices, mesh has {} points",
                graph.n(),
                self.len()
            )));
        }
        let mut members: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for (i, &c) in self.cell.iter().enumerate() {
            members.entry(c).or_default().push(i);
        }
        let n = self.resolution as u64;
        let mut bad = Vec::new();
        let mut check = |a: usize, b: usize| {
            if !graph.has_edge(a, b) {
                bad.push((a.min(b), a.max(b)));
            }
        };
        for (&c, pts) in &members {
            for (x, &a) in pts.iter().enumerate() {
                for &b in &pts[x + 1..] {
                    check(a, b);
                }
            }
            let coords = self.cell_coords(pts[0]);
            let mut stride = 1u64;
            for &ax in coords {
                if (ax as u64) + 1 < n {
                    if let Some(other) = members.get(&(c + stride)) {
                        for &a in pts {
                            for &b in other {
                                check(a, b);
                            }
                        }
                    }
                }
                stride *= n;
            }
        }
        bad.sort_unstable();
        Ok(bad)
    }
}

/// Outcome of evaluating both embedding inequalities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingCheck {
    /// `|e^T (theta - theta_I)|`.
    pub lhs_1: f64,
    /// `2 ||e||_inf ||grad theta||_1`.
    pub rhs_1: f64,
    pub holds_1: bool,
    /// `||D theta^I||_1` on the occupied-cell grid.
    pub lhs_2: f64,
    /// `||grad theta||_1` on the K-NN graph.
    pub rhs_2: f64,
    pub holds_2: bool,
    /// Whether every same-or-adjacent-cell pair is joined in the graph.
    pub omega_holds: bool,
    pub omega_violations: usize,
}

impl EmbeddingCheck {
    /// An inequality failed although the connectivity event held.
    pub fn conditional_failure(&self) -> bool {
        self.omega_holds && !(self.holds_1 && self.holds_2)
    }
}

fn le_with_slack(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + 1e-9 * (1.0 + rhs.abs())
}

pub fn check_embedding_inequalities(
    mesh: &MeshQuantization,
    graph: &NeighborGraph,
    theta: &[f64],
    e: &[f64],
) -> Result<EmbeddingCheck> {
    if e.len() != mesh.len() {
        return Err(invalid(format!("e has length {}, expected {}", e.len(), mesh.len())));
    }
    let theta_i = mesh.project(theta)?;
    let tv = total_variation(graph, theta)?;
    let lhs_1 = e
        .iter()
        .zip(theta.iter().zip(&theta_i))
        .map(|(ei, (t, q))| ei * (t - q))
        .sum::<f64>()
        .abs();
    let e_inf = e.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let rhs_1 = 2.0 * e_inf * tv;
    let lhs_2 = mesh.grid_total_variation(theta)?;
    let violations = mesh.omega_violations(graph)?;
    Ok(EmbeddingCheck {
        lhs_1,
        rhs_1,
        holds_1: le_with_slack(lhs_1, rhs_1),
        lhs_2,
        rhs_2: tv,
        holds_2: le_with_slack(lhs_2, tv),
        omega_holds: violations.is_empty(),
        omega_violations: violations.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_knn_graph;

    fn brute_cell(p: &[f64], n: usize) -> Vec<usize> {
        // Sup-norm nearest over the whole lattice, lowest linear index on ties.
        let d = p.len();
        let total = n.pow(d as u32);
        let mut best = (f64::INFINITY, 0);
        for c in 0..total {
            let mut rest = c;
            let mut dist = 0.0f64;
            for &x in p {
                let a = rest % n;
                rest /= n;
                dist = dist.max((x - lattice_coord(a, n)).abs());
            }
            if dist < best.0 {
                best = (dist, c);
            }
        }
        let mut rest = best.1;
        (0..d)
            .map(|_| {
                let a = rest % n;
                rest /= n;
                a
            })
            .collect()
    }

    #[test]
    fn resolution_formula() {
        // 3 * sqrt(2) * 8^(1/2) * sqrt(500/39) = 12 * sqrt(12.82) = 42.97
        assert_eq!(
            mesh_resolution(500, 39, 2, MeshConstants::uniform_cube(2)).unwrap(),
            43
        );
    }

    #[test]
    fn cells_match_brute_force_including_boundaries() {
        let pts = [
            [0.0, 0.0],
            [1.0, 1.0],
            [0.5, 0.25],
            [0.25, 0.75],
            [0.1, 0.9],
            [0.74, 0.26],
            [0.5, 0.5],
        ];
        let cloud = PointCloud::from_rows(&pts).unwrap();
        let mesh = build_mesh(&cloud, &[0.0; 7], 4).unwrap();
        for (i, p) in pts.iter().enumerate() {
            assert_eq!(mesh.cell_coords(i), brute_cell(p, 4).as_slice(), "point {p:?}");
        }
    }

    #[test]
    fn single_cell_uses_point_nearest_center() {
        let cloud = PointCloud::from_rows(&[[0.1, 0.1], [0.45, 0.6], [0.9, 0.5]]).unwrap();
        let mesh = build_mesh(&cloud, &[1.0, 2.0, 3.0], 1).unwrap();
        assert_eq!(mesh.theta_i(), &[2.0, 2.0, 2.0]);
        assert_eq!(mesh.theta_sup().unwrap(), vec![2.0]);
    }

    #[test]
    fn rejects_points_outside_cube() {
        let cloud = PointCloud::from_rows(&[[0.5, 1.5]]).unwrap();
        assert!(build_mesh(&cloud, &[0.0], 3).is_err());
        assert!(build_mesh(&cloud, &[0.0], 0).is_err());
    }

    #[test]
    fn omega_fails_on_collinear_triple() {
        let cloud = PointCloud::from_rows(&[[0.1, 0.5], [0.2, 0.5], [0.9, 0.5]]).unwrap();
        let g = build_knn_graph(&cloud, 1).unwrap();
        let mesh = build_mesh(&cloud, &[0.0, 1.0, 2.0], 2).unwrap();
        let check = check_embedding_inequalities(&mesh, &g, &[0.0, 1.0, 2.0], &[1.0; 3]).unwrap();
        assert!(!check.omega_holds);
        assert_eq!(mesh.omega_violations(&g).unwrap(), vec![(0, 2)]);
    }

    #[test]
    fn dense_and_occupied_grid_tv_agree_when_all_cells_full() {
        let cloud = PointCloud::from_rows(&[[0.2, 0.2], [0.7, 0.2], [0.2, 0.7], [0.7, 0.7]]).unwrap();
        let theta = [1.0, 2.0, 4.0, 8.0];
        let mesh = build_mesh(&cloud, &theta, 2).unwrap();
        assert_eq!(mesh.grid_total_variation(&theta).unwrap(), 1.0 + 3.0 + 4.0 + 6.0);
        assert_eq!(mesh.full_grid_total_variation().unwrap(), 14.0);
    }
}
