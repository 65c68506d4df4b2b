//! Artifact writing and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub file: String,
    pub sha256: String,
    pub format: String,
    /// Column schema, for CSV artifacts.
    #[serde(default)]
    pub columns: Vec<Column>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Unique within a directory; re-running replaces the record.
    pub label: String,
    pub command_line: Vec<String>,
    pub config_sha256: String,
    pub seed: u64,
    pub violations: usize,
    pub summary: Value,
    pub artifacts: Vec<Artifact>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub yde_cli: String,
    pub yde_core: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub versions: Versions,
    pub runs: Vec<RunRecord>,
}

impl Default for Manifest {
    fn default() -> Self {
        Manifest {
            versions: Versions { yde_cli: env!("CARGO_PKG_VERSION").into(), yde_core: yde_core::VERSION.into() },
            runs: Vec::new(),
        }
    }
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Manifest, CliError> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Io { path, message: format!("malformed manifest: {e}") })
    }

    /// Replaces the record with the same label, or appends.
    pub fn upsert(&mut self, record: RunRecord) {
        match self.runs.iter_mut().find(|r| r.label == record.label) {
            Some(r) => *r = record,
            None => self.runs.push(record),
        }
    }

    pub fn save(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join(MANIFEST);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes") + "\n";
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects the artifacts of one run.
pub struct Output {
    dir: PathBuf,
    csv: bool,
    json: bool,
    artifacts: Vec<Artifact>,
}

impl Output {
    pub fn create(dir: &Path, formats: &[String]) -> Result<Output, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Output {
            dir: dir.to_path_buf(),
            csv: formats.iter().any(|f| f == "csv"),
            json: formats.iter().any(|f| f == "json"),
            artifacts: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn write(&mut self, file: &str, bytes: &[u8], format: &str, columns: Vec<Column>) -> Result<(), CliError> {
        let path = self.dir.join(file);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.artifacts.push(Artifact { file: file.into(), sha256: sha256_hex(bytes), format: format.into(), columns });
        Ok(())
    }

    /// Writes a CSV whose columns are `(name, description)` pairs.
    pub fn csv(&mut self, file: &str, columns: &[(&str, &str)], rows: &[Vec<String>]) -> Result<(), CliError> {
        if !self.csv {
            return Ok(());
        }
        let mut text = columns.iter().map(|c| c.0).collect::<Vec<_>>().join(",");
        text.push('\n');
        for row in rows {
            debug_assert_eq!(row.len(), columns.len());
            text.push_str(&row.join(","));
            text.push('\n');
        }
        let cols = columns.iter().map(|(n, d)| Column { name: (*n).into(), description: (*d).into() }).collect();
        self.write(file, text.as_bytes(), "csv", cols)
    }

    /// Writes a sample path in the `t,x1,...,xm` format.
    pub fn path_csv(&mut self, file: &str, path: &yde_core::SamplePath, what: &str) -> Result<(), CliError> {
        if !self.csv {
            return Ok(());
        }
        let mut cols = vec![Column { name: "t".into(), description: "time".into() }];
        cols.extend((1..=path.dim()).map(|j| Column { name: format!("x{j}"), description: format!("{what}, component {j}") }));
        self.write(file, path.to_csv().as_bytes(), "csv", cols)
    }

    pub fn json(&mut self, file: &str, value: &Value) -> Result<(), CliError> {
        if !self.json {
            return Ok(());
        }
        let text = serde_json::to_string_pretty(value).expect("json serializes") + "\n";
        self.write(file, text.as_bytes(), "json", Vec::new())
    }

    pub fn into_artifacts(self) -> Vec<Artifact> {
        self.artifacts
    }
}

/// Full-precision decimal text of a float.
pub fn num(v: f64) -> String {
    yde_core::paths::format_float(v)
}
