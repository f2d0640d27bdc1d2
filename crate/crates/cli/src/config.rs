//! Merging of command-line flags with an optional JSON config file, and the
//! resolved-config record written next to every run's outputs.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{usage, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// Contents of a config file: the subcommand's options plus an optional
/// `threads` entry.
pub struct FileConfig {
    pub options: Map<String, Value>,
    pub threads: Option<usize>,
}

pub fn read_config_file(path: Option<&Path>) -> CliResult<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig {
            options: Map::new(),
            threads: None,
        });
    };
    let text =
        std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read config file {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| usage(format!("config file {} is not valid JSON: {e}", path.display())))?;
    let Value::Object(mut options) = value else {
        return Err(usage("config file must hold a JSON object"));
    };
    let threads = match options.remove("threads") {
        None | Some(Value::Null) => None,
        Some(v) => Some(serde_json::from_value(v).map_err(|e| usage(format!("config entry \"threads\": {e}")))?),
    };
    Ok(FileConfig { options, threads })
}

/// Overlays the flags that were given onto the file's options. Keys listed
/// together in `groups` are alternatives: setting any of them on the command
/// line discards all of them from the file.
pub fn merge<A>(flags: &A, file: &Map<String, Value>, groups: &[&[&str]]) -> CliResult<A>
where
    A: Serialize + DeserializeOwned,
{
    let Value::Object(given) = serde_json::to_value(flags).expect("flag structs serialize") else {
        unreachable!("flag structs serialize to objects");
    };
    let mut merged = file.clone();
    for group in groups {
        if group.iter().any(|k| given.get(*k).is_some_and(|v| !v.is_null())) {
            for k in *group {
                merged.remove(*k);
            }
        }
    }
    for (k, v) in given {
        if !v.is_null() {
            merged.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| usage(format!("invalid configuration: {e}")))
}

#[derive(Serialize)]
struct ResolvedRecord<'a, T> {
    schema_version: u32,
    command: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    threads: Option<usize>,
    options: &'a T,
}

pub fn write_resolved<T: Serialize>(dir: &Path, command: &str, threads: Option<usize>, options: &T) -> CliResult<()> {
    let record = ResolvedRecord {
        schema_version: SCHEMA_VERSION,
        command,
        threads,
        options,
    };
    knnfl::io::write_json(&dir.join("config.json"), &record)?;
    Ok(())
}

pub fn require<T: Clone>(value: &Option<T>, name: &str) -> CliResult<T> {
    value
        .clone()
        .ok_or_else(|| usage(format!("missing required option --{name}")))
}

pub fn output_dir(out: &Option<PathBuf>) -> CliResult<PathBuf> {
    let dir = require(out, "out")?;
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}
