use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use knnfl::regression::fit_detailed;
use knnfl::tv::SolveDiagnostics;
use knnfl::{Error, GraphKind};

use super::{graph_kind, solver_config, Context};
use crate::config::{merge, output_dir, require, write_resolved, SCHEMA_VERSION};
use crate::data::load_training;
use crate::error::{usage, CliError, CliResult};

#[derive(Args, Serialize, Deserialize, Default, Debug, Clone)]
#[serde(default, deny_unknown_fields)]
pub struct FitArgs {
    /// Training CSV (covariates and a response column)
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Neighbors per point in the K-NN graph
    #[arg(long)]
    pub k: Option<usize>,
    /// Radius of the epsilon graph
    #[arg(long)]
    pub eps: Option<f64>,
    /// Total-variation penalty
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Response column: a header name, or a 1-based index without a header
    #[arg(long)]
    pub y_column: Option<String>,
    /// Relative duality-gap tolerance
    #[arg(long)]
    pub tol: Option<f64>,
    /// Record wall-clock solve time in the diagnostics
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub timing: Option<bool>,
}

#[derive(Serialize)]
struct GraphSummary {
    #[serde(flatten)]
    kind: GraphKind,
    edges: usize,
    components: usize,
    max_degree: usize,
}

#[derive(Serialize)]
struct FitDiagnostics {
    schema_version: u32,
    n: usize,
    d: usize,
    graph: GraphSummary,
    solver: SolveDiagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    in_sample_mse: Option<f64>,
}

#[derive(Serialize)]
struct FailureReport {
    schema_version: u32,
    lambda: f64,
    gap: f64,
    tol: f64,
}

pub fn run(flags: &FitArgs, ctx: &Context) -> CliResult<()> {
    let a: FitArgs = merge(flags, &ctx.file, &[&["k", "eps"]])?;
    let input = require(&a.input, "input")?;
    let kind = graph_kind(a.k, a.eps)?;
    let lambda = require(&a.lambda, "lambda")?;
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(usage(format!(
            "--lambda must be finite and non-negative (got {lambda})"
        )));
    }
    let config = solver_config(a.tol)?;
    let dir = output_dir(&a.out)?;
    write_resolved(&dir, "fit", ctx.threads, &a)?;

    let data = load_training(&input, a.y_column.as_deref())?;
    let (model, solution) = match fit_detailed(&data.cloud, &data.y, kind, lambda, &config) {
        Ok(v) => v,
        Err(Error::SolverFailure { gap, tol, .. }) => {
            let report = FailureReport {
                schema_version: SCHEMA_VERSION,
                lambda,
                gap,
                tol,
            };
            knnfl::io::write_json(&dir.join("diagnostics.json"), &report)?;
            return Err(CliError::Solver(format!(
                "duality gap {gap:e} exceeds tolerance {tol:e} at lambda = {lambda}"
            )));
        }
        Err(e) => return Err(e.into()),
    };
    let graph = model.graph()?;
    let stats = graph.stats();
    let mut solver = solution.diagnostics(lambda);
    if a.timing != Some(true) {
        solver.seconds = None;
    }
    let in_sample_mse = match &data.theta_star {
        Some(t) => Some(knnfl::scenarios::mse(model.theta_hat(), t)?),
        None => None,
    };
    let diagnostics = FitDiagnostics {
        schema_version: SCHEMA_VERSION,
        n: data.cloud.len(),
        d: data.cloud.dim(),
        graph: GraphSummary {
            kind,
            edges: stats.edge_count,
            components: stats.component_count,
            max_degree: stats.max_degree,
        },
        solver,
        in_sample_mse,
    };
    let mut doc = model.to_document();
    doc.cloud_ref.source = Some(input.display().to_string());
    knnfl::io::write_json(&dir.join("model.json"), &doc)?;
    knnfl::io::write_json(&dir.join("diagnostics.json"), &diagnostics)?;
    Ok(())
}
