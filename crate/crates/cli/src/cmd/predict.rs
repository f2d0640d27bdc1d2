use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use knnfl::regression::{FittedModel, ModelDocument};
use knnfl::Error;

use super::{write_text, Context};
use crate::config::{merge, output_dir, require, write_resolved, SCHEMA_VERSION};
use crate::data::load_queries;
use crate::error::{CliError, CliResult};

#[derive(Args, Serialize, Deserialize, Default, Debug, Clone)]
#[serde(default, deny_unknown_fields)]
pub struct PredictArgs {
    /// Model JSON written by `fit` or `cv`
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// CSV of query points
    #[arg(long)]
    pub query: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn load_model(path: &std::path::Path) -> CliResult<FittedModel<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read model {}: {e}", path.display())))?;
    let doc: ModelDocument = serde_json::from_str(&text)?;
    if doc.schema_version != knnfl::regression::MODEL_SCHEMA_VERSION {
        return Err(CliError::Data(format!(
            "model schema version {} is not supported",
            doc.schema_version
        )));
    }
    Ok(FittedModel::from_document(&doc)?)
}

pub fn run(flags: &PredictArgs, ctx: &Context) -> CliResult<()> {
    let a: PredictArgs = merge(flags, &ctx.file, &[])?;
    let model_path = require(&a.model, "model")?;
    let query_path = require(&a.query, "query")?;
    let dir = output_dir(&a.out)?;
    write_resolved(&dir, "predict", ctx.threads, &a)?;

    let model = load_model(&model_path)?;
    let queries = load_queries(&query_path)?;
    let mut rows: Vec<Vec<String>> = Vec::new();
    if let Some(q) = queries {
        let d = model.cloud().dim();
        if q.dim() != d {
            return Err(CliError::Data(format!(
                "queries have {} covariate columns; the model expects d = {d}",
                q.dim()
            )));
        }
        let predictor = model.predictor();
        let outcomes: Vec<Result<f64, Error>> = (0..q.len())
            .into_par_iter()
            .map(|i| predictor.predict(q.point(i)))
            .collect();
        for (i, o) in outcomes.into_iter().enumerate() {
            let (value, err) = match o {
                Ok(v) => (v.to_string(), String::new()),
                Err(Error::EmptyNeighborhood { .. }) => (String::new(), "empty_neighborhood".to_string()),
                Err(e) => return Err(e.into()),
            };
            rows.push(vec![(i + 1).to_string(), value, err, SCHEMA_VERSION.to_string()]);
        }
    }
    let header = ["row", "prediction", "error", "schema_version"].map(String::from);
    let mut buf = Vec::new();
    knnfl::io::write_csv(&mut buf, &header, &rows)?;
    write_text(&dir.join("predictions.csv"), buf)
}
