mod common;

use common::{brute_eps_edges, brute_knn_edges, rng};
use knnfl::incidence::{total_variation, IncidenceOperator};
use knnfl::kdtree::{brute_force_knn, KdTree};
use knnfl::{build_epsilon_graph, build_knn_graph, GraphKind, NeighborGraph, PointCloud64};
use proptest::prelude::*;
use rand::Rng;

fn random_cloud(n: usize, d: usize, seed: u64) -> PointCloud64 {
    let mut r = rng(seed);
    PointCloud64::from_flat(d, (0..n * d).map(|_| r.random()).collect()).unwrap()
}

/// Coordinates on a coarse lattice so exact distance ties are common.
fn tied_cloud(n: usize, d: usize, seed: u64) -> PointCloud64 {
    let mut r = rng(seed);
    PointCloud64::from_flat(d, (0..n * d).map(|_| r.random_range(0..4) as f64).collect()).unwrap()
}

#[test]
fn knn_graphs_match_exhaustive_search() {
    for (s, d) in [1usize, 2, 3, 6].into_iter().enumerate() {
        for n in [11, 60, 240] {
            let cloud = random_cloud(n, d, 100 * s as u64 + n as u64);
            for k in [1, 3, 5, 10] {
                let g = build_knn_graph(&cloud, k).unwrap();
                assert_eq!(g.edges(), brute_knn_edges(&cloud, k).as_slice(), "n={n} d={d} k={k}");
            }
        }
    }
}

#[test]
fn knn_graphs_with_ties_match_exhaustive_search() {
    for d in [1, 2, 3] {
        let cloud = tied_cloud(40, d, d as u64);
        for k in [1, 2, 5, 9] {
            let g = build_knn_graph(&cloud, k).unwrap();
            assert_eq!(g.edges(), brute_knn_edges(&cloud, k).as_slice(), "d={d} k={k}");
        }
    }
}

#[test]
fn epsilon_graphs_match_exhaustive_search() {
    for d in [1, 2, 3, 6] {
        let cloud = random_cloud(150, d, 7 + d as u64);
        for eps in [0.05, 0.2, 0.5] {
            let g = build_epsilon_graph(&cloud, eps).unwrap();
            assert_eq!(g.edges(), brute_eps_edges(&cloud, eps).as_slice(), "d={d} eps={eps}");
        }
    }
}

#[test]
fn epsilon_boundary_is_excluded() {
    let cloud = PointCloud64::from_line(&[0.0, 0.5, 1.0]).unwrap();
    let g = build_epsilon_graph(&cloud, 0.5).unwrap();
    assert_eq!(g.edge_count(), 0);
}

#[test]
fn knn_rejects_bad_k() {
    let cloud = random_cloud(5, 2, 1);
    assert!(build_knn_graph(&cloud, 0).is_err());
    assert!(build_knn_graph(&cloud, 5).is_err());
    assert!(build_knn_graph(&cloud, 4).is_ok());
}

#[test]
fn kdtree_queries_match_linear_scan() {
    let cloud = random_cloud(300, 3, 5);
    let tree = KdTree::build(&cloud);
    let mut r = rng(77);
    for _ in 0..50 {
        let q: Vec<f64> = (0..3).map(|_| r.random()).collect();
        let fast: Vec<usize> = tree.knn(&q, 7, None).iter().map(|n| n.index).collect();
        let slow: Vec<usize> = brute_force_knn(&cloud, &q, 7, None).iter().map(|n| n.index).collect();
        assert_eq!(fast, slow);
    }
}

#[test]
fn graph_document_round_trip() {
    let cloud = random_cloud(30, 2, 3);
    let g = build_knn_graph(&cloud, 3).unwrap();
    let text = serde_json::to_string(&g.to_document()).unwrap();
    let back = NeighborGraph::from_document(serde_json::from_str(&text).unwrap()).unwrap();
    assert_eq!(back, g);
    assert_eq!(back.kind(), GraphKind::Knn { k: 3 });
}

#[test]
fn incidence_adjoint_identity() {
    let g = NeighborGraph::grid2d(4, 5);
    let op = IncidenceOperator::new(&g);
    let mut r = rng(2);
    let theta: Vec<f64> = (0..g.n()).map(|_| r.random()).collect();
    let u: Vec<f64> = (0..g.edge_count()).map(|_| r.random()).collect();
    let lhs: f64 = op.apply(&theta).unwrap().iter().zip(&u).map(|(a, b)| a * b).sum();
    let rhs: f64 = op
        .apply_transpose(&u)
        .unwrap()
        .iter()
        .zip(&theta)
        .map(|(a, b)| a * b)
        .sum();
    assert!((lhs - rhs).abs() < 1e-12);
    assert_eq!(op.apply(&vec![2.5; g.n()]).unwrap(), vec![0.0; g.edge_count()]);
    assert!(op.apply(&[1.0]).is_err());
}

#[test]
fn total_variation_of_chain() {
    let g = NeighborGraph::chain(4);
    assert_eq!(total_variation(&g, &[0.0, 1.0, 3.0, 0.0]).unwrap(), 6.0);
}

#[test]
fn component_labels_use_smallest_vertex() {
    let g = NeighborGraph::from_edges(6, [(4, 2), (0, 5)]).unwrap();
    assert_eq!(g.component_labels(), vec![0, 1, 2, 3, 2, 0]);
    assert_eq!(g.stats().component_count, 4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn knn_graph_is_exact(n in 2usize..80, d in 1usize..5, k_frac in 0.0f64..1.0, seed in any::<u64>()) {
        let cloud = random_cloud(n, d, seed);
        let k = 1 + ((n - 2) as f64 * k_frac) as usize;
        let g = build_knn_graph(&cloud, k).unwrap();
        let expected = brute_knn_edges(&cloud, k);
        prop_assert_eq!(g.edges(), expected.as_slice());
        // Every vertex has at least K neighbors after symmetrization.
        prop_assert!(g.degrees().iter().all(|&deg| deg >= k));
    }

    #[test]
    fn epsilon_graph_grows_with_radius(n in 2usize..60, seed in any::<u64>(), a in 0.01f64..0.5, b in 0.01f64..0.5) {
        let cloud = random_cloud(n, 2, seed);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let small = build_epsilon_graph(&cloud, lo).unwrap();
        let large = build_epsilon_graph(&cloud, hi).unwrap();
        prop_assert!(small.is_subgraph_of(&large));
    }
}
