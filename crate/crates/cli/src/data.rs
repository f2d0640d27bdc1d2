//! Reading covariates and responses from CSV tables.
//!
//! With a header, the columns `y`, `theta_star`, `label` and
//! `schema_version` are reserved and every other column is a covariate.
//! Without a header, the last column is the response when one is needed.

use std::path::Path;

use knnfl::io::{read_table, Table};
use knnfl::{Error, PointCloud64};

use crate::error::{CliError, CliResult};

pub const RESERVED: [&str; 4] = ["y", "theta_star", "label", "schema_version"];

pub struct Training {
    pub cloud: PointCloud64,
    pub y: Vec<f64>,
    pub theta_star: Option<Vec<f64>>,
}

fn covariate_columns(table: &Table, y_col: Option<usize>) -> Vec<usize> {
    match &table.header {
        Some(h) => (0..h.len())
            .filter(|&c| !RESERVED.contains(&h[c].as_str()) && Some(c) != y_col)
            .collect(),
        None => (0..table.columns()).filter(|&c| Some(c) != y_col).collect(),
    }
}

fn cloud_from(table: &Table, cols: &[usize]) -> CliResult<PointCloud64> {
    if cols.is_empty() {
        return Err(CliError::Data("the table has no covariate columns".into()));
    }
    let flat: Vec<f64> = table.rows.iter().flat_map(|r| cols.iter().map(|&c| r[c])).collect();
    Ok(PointCloud64::from_flat(cols.len(), flat)?)
}

fn missing_y(name: &str) -> CliError {
    Error::Parse {
        row: 1,
        column: 0,
        message: format!("missing response column {name:?}"),
    }
    .into()
}

pub fn load_training(path: &Path, y_column: Option<&str>) -> CliResult<Training> {
    let table = read_table(path)?;
    if table.rows.is_empty() {
        return Err(CliError::Data(format!("{} has no data rows", path.display())));
    }
    let name = y_column.unwrap_or("y");
    let y_col = match &table.header {
        Some(_) => table.column_index(name).ok_or_else(|| missing_y(name))?,
        None => {
            if table.columns() < 2 {
                return Err(missing_y(name));
            }
            match y_column {
                Some(s) => s
                    .parse::<usize>()
                    .ok()
                    .filter(|&i| (1..=table.columns()).contains(&i))
                    .map(|i| i - 1)
                    .ok_or_else(|| missing_y(name))?,
                None => table.columns() - 1,
            }
        }
    };
    let cols = covariate_columns(&table, Some(y_col));
    let cloud = cloud_from(&table, &cols)?;
    let theta_star = table.column_index("theta_star").map(|c| table.column(c));
    Ok(Training {
        cloud,
        y: table.column(y_col),
        theta_star,
    })
}

/// Query points: every non-reserved column. `None` for an empty file.
pub fn load_queries(path: &Path) -> CliResult<Option<PointCloud64>> {
    let table = read_table(path)?;
    if table.rows.is_empty() {
        return Ok(None);
    }
    let cols = covariate_columns(&table, None);
    cloud_from(&table, &cols).map(Some)
}
