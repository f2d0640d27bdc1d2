use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use knnfl::scenarios::{generate, MixParams, ScenarioName, ScenarioSpec};

use super::{write_text, Context};
use crate::config::{merge, output_dir, require, write_resolved, SCHEMA_VERSION};
use crate::error::{usage, CliResult};

#[derive(Args, Serialize, Deserialize, Default, Debug, Clone)]
#[serde(default, deny_unknown_fields)]
pub struct ExportArgs {
    /// Scenario name (intro_example, s1, s2, s3, s4, manifold_mix)
    #[arg(long)]
    pub scenario: Option<String>,
    /// Sample size (the sheet size for manifold_mix)
    #[arg(long)]
    pub n: Option<usize>,
    /// Dimension for s3 and s4 [default: 2]
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Noise variance [default: the scenario's]
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Cube size for manifold_mix [default: ceil(n^(3/4))]
    #[arg(long)]
    pub n2: Option<usize>,
    /// Sheet height for manifold_mix [default: -0.5]
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<f64>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn parse_scenario(name: &str) -> CliResult<ScenarioName> {
    name.parse().map_err(|e: knnfl::Error| usage(e.to_string()))
}

pub fn run(flags: &ExportArgs, ctx: &Context) -> CliResult<()> {
    let mut a: ExportArgs = merge(flags, &ctx.file, &[])?;
    let name = parse_scenario(&require(&a.scenario, "scenario")?)?;
    let n = require(&a.n, "n")?;
    let d = *a.d.get_or_insert(2);
    let seed = *a.seed.get_or_insert(0);
    let mut spec = ScenarioSpec::new(name, n, d, seed).map_err(|e| usage(e.to_string()))?;
    if let Some(s2) = a.sigma2 {
        spec = spec.with_sigma2(s2);
    }
    if let Some(m) = spec.mix.as_mut() {
        *m = MixParams {
            n2: a.n2.unwrap_or(m.n2),
            c: a.c.unwrap_or(m.c),
        };
    }
    spec.validate().map_err(|e| usage(e.to_string()))?;
    let dir = output_dir(&a.out)?;
    write_resolved(&dir, "export-scenario", ctx.threads, &a)?;

    let data = generate(&spec)?;
    let (mut header, mut rows) = data.to_table();
    header.push("schema_version".into());
    for r in &mut rows {
        r.push(SCHEMA_VERSION.to_string());
    }
    let mut buf = Vec::new();
    knnfl::io::write_csv(&mut buf, &header, &rows)?;
    write_text(&dir.join("data.csv"), buf)
}
