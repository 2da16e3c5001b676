//! CSV tables and the JSON experiment manifest.
//!
//! Every table gets a leading `config_hash` column. Floats are written with the
//! shortest representation that round-trips, so reruns are byte-identical.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(
            row.len(),
            self.header.len(),
            "row width in table {}",
            self.name
        );
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Parses column `name` of every row as a float.
    pub fn floats(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column(name)?;
        Some(
            self.rows
                .iter()
                .map(|r| r[j].parse().unwrap_or(f64::NAN))
                .collect(),
        )
    }
}

/// Formats a float for output in shortest round-trip form, with an exponent
/// for very small or very large magnitudes.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

pub fn write_table(dir: &Path, hash: &str, table: &Table) -> Result<PathBuf> {
    let path = dir.join(format!("{}.csv", table.name));
    let mut w = csv::Writer::from_path(&path)?;
    let mut header = vec!["config_hash".to_string()];
    header.extend(table.header.iter().cloned());
    w.write_record(&header)?;
    for row in &table.rows {
        w.write_record(std::iter::once(hash).chain(row.iter().map(String::as_str)))?;
    }
    w.flush().map_err(|e| io_error(&path, e))?;
    Ok(path)
}

fn io_error(path: &Path, e: std::io::Error) -> HarnessError {
    HarnessError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub experiment: String,
    pub config_hash: String,
    pub version: String,
    pub config: Config,
    pub seeds: Vec<u64>,
    /// Output files relative to the manifest's directory.
    pub outputs: Vec<String>,
    pub timing: Timing,
}

impl ExperimentManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let body = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        serde_json::from_str(&body)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes all tables and the manifest into `dir`, creating it if needed.
pub fn write_outputs(
    dir: &Path,
    experiment: &str,
    config: &Config,
    seeds: Vec<u64>,
    tables: &[Table],
    timing: Timing,
) -> Result<ExperimentManifest> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let hash = config.hash();
    let mut outputs = Vec::with_capacity(tables.len());
    for t in tables {
        let path = write_table(dir, &hash, t)?;
        outputs.push(path.file_name().unwrap().to_string_lossy().into_owned());
    }
    let manifest = ExperimentManifest {
        experiment: experiment.to_string(),
        config_hash: hash,
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        seeds,
        outputs,
        timing,
    };
    let path = dir.join(MANIFEST_FILE);
    let body =
        serde_json::to_string_pretty(&manifest).map_err(|e| HarnessError::Output(e.to_string()))?;
    fs::write(&path, body + "\n").map_err(|e| io_error(&path, e))?;
    Ok(manifest)
}
