use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use knnfl::cv::{default_lambda_grid, kfold_cv, CvReport};
use knnfl::regression::fit_detailed;

use super::{graph_kind, solver_config, write_text, Context};
use crate::config::{merge, output_dir, require, write_resolved, SCHEMA_VERSION};
use crate::data::load_training;
use crate::error::{usage, CliResult};

#[derive(Args, Serialize, Deserialize, Default, Debug, Clone)]
#[serde(default, deny_unknown_fields)]
pub struct CvArgs {
    /// Training CSV (covariates and a response column)
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Comma-separated penalty grid
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    /// Size of the default log-spaced grid when no penalties are given [default: 30]
    #[arg(long)]
    pub grid_size: Option<usize>,
    /// Number of folds [default: 5]
    #[arg(long)]
    pub folds: Option<usize>,
    /// Seed of the fold assignment [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub y_column: Option<String>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Serialize)]
struct CvDocument<'a> {
    schema_version: u32,
    #[serde(flatten)]
    report: &'a CvReport,
}

pub fn run(flags: &CvArgs, ctx: &Context) -> CliResult<()> {
    let mut a: CvArgs = merge(flags, &ctx.file, &[&["k", "eps"], &["lambdas", "grid_size"]])?;
    let input = require(&a.input, "input")?;
    let kind = graph_kind(a.k, a.eps)?;
    let folds = *a.folds.get_or_insert(5);
    let seed = *a.seed.get_or_insert(0);
    if let Some(l) = &a.lambdas {
        if l.is_empty() || l.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(usage("--lambdas must be finite non-negative values"));
        }
    }
    let config = solver_config(a.tol)?;
    let dir = output_dir(&a.out)?;

    let data = load_training(&input, a.y_column.as_deref())?;
    let lambdas = match &a.lambdas {
        Some(l) => l.clone(),
        None => {
            let count = *a.grid_size.get_or_insert(30);
            if count == 0 {
                return Err(usage("--grid-size must be at least 1"));
            }
            default_lambda_grid(&knnfl::build_graph(&data.cloud, kind)?, &data.y, count)?
        }
    };
    write_resolved(&dir, "cv", ctx.threads, &a)?;
    let report = kfold_cv(&data.cloud, &data.y, kind, &lambdas, folds, seed, &config)?;

    let mut header = vec!["lambda".to_string(), "mean_mse".to_string()];
    header.extend((1..=folds).map(|f| format!("fold_{f}")));
    header.push("schema_version".into());
    let rows: Vec<Vec<String>> = (0..lambdas.len())
        .map(|l| {
            let mut row = vec![lambdas[l].to_string(), report.mean_mse[l].to_string()];
            row.extend(report.fold_mse.iter().map(|f| f[l].to_string()));
            row.push(SCHEMA_VERSION.to_string());
            row
        })
        .collect();
    let mut buf = Vec::new();
    knnfl::io::write_csv(&mut buf, &header, &rows)?;
    write_text(&dir.join("cv.csv"), buf)?;
    knnfl::io::write_json(
        &dir.join("cv.json"),
        &CvDocument {
            schema_version: SCHEMA_VERSION,
            report: &report,
        },
    )?;

    let (model, _) = fit_detailed(&data.cloud, &data.y, kind, report.selected_lambda, &config)?;
    let mut doc = model.to_document();
    doc.cloud_ref.source = Some(input.display().to_string());
    knnfl::io::write_json(&dir.join("model.json"), &doc)?;
    Ok(())
}
