use serde_json::{Map, Value};

use knnfl::GraphKind;

use crate::error::{usage, CliResult};

pub mod cv;
pub mod export;
pub mod fit;
pub mod predict;
pub mod simulate;
pub mod theory;

pub struct Context {
    pub file: Map<String, Value>,
    pub threads: Option<usize>,
}

/// Exactly one of `k` and `eps` selects the graph.
pub fn graph_kind(k: Option<usize>, eps: Option<f64>) -> CliResult<GraphKind> {
    match (k, eps) {
        (Some(k), None) => Ok(GraphKind::Knn { k }),
        (None, Some(eps)) if eps > 0.0 && eps.is_finite() => Ok(GraphKind::Epsilon { eps }),
        (None, Some(eps)) => Err(usage(format!("--eps must be positive and finite (got {eps})"))),
        _ => Err(usage("give exactly one of --k or --eps")),
    }
}

pub fn solver_config(tol: Option<f64>) -> CliResult<knnfl::SolverConfig64> {
    let config = knnfl::SolverConfig64::default();
    match tol {
        None => Ok(config),
        Some(t) if t > 0.0 && t.is_finite() => Ok(config.with_tol(t)),
        Some(t) => Err(usage(format!("--tol must be positive (got {t})"))),
    }
}

pub fn write_text(path: &std::path::Path, bytes: Vec<u8>) -> CliResult<()> {
    std::fs::write(path, bytes)?;
    Ok(())
}
