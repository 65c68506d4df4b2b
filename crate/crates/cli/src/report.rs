//! Consolidated summary of an artifact directory.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::output::{sha256_hex, Manifest};

/// Attractor norms below this are reported as the origin.
const ORIGIN_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub experiments: usize,
    pub total_violations: usize,
    /// Files that are missing or whose checksum differs from the manifest.
    pub integrity_failures: Vec<String>,
    pub runs: Vec<Value>,
    pub lines: Vec<String>,
}

impl Summary {
    pub fn ok(&self) -> bool {
        self.total_violations == 0 && self.integrity_failures.is_empty()
    }
}

fn fmt(v: &Value) -> String {
    match v.as_f64() {
        Some(x) => yde_core::paths::format_float(x),
        None => v.to_string(),
    }
}

pub fn summarize(dir: &Path) -> Result<Summary, CliError> {
    let manifest = Manifest::load(dir)?;
    let mut integrity = Vec::new();
    let mut runs = Vec::new();
    let mut lines = vec![format!("experiments: {}", manifest.runs.len())];
    let mut total = 0;
    for run in &manifest.runs {
        for a in &run.artifacts {
            match fs::read(dir.join(&a.file)) {
                Ok(bytes) if sha256_hex(&bytes) == a.sha256 => {}
                Ok(_) => integrity.push(format!("{} (checksum mismatch)", a.file)),
                Err(_) => integrity.push(format!("{} (missing)", a.file)),
            }
        }
        total += run.violations;
        let s = &run.summary;
        lines.push(format!("[{}] violations: {}", run.label, run.violations));
        if let Some(m) = s.get("margin") {
            let sat = s.get("satisfied").and_then(Value::as_bool).unwrap_or(false);
            lines.push(format!("[{}] criterion margin: {} ({})", run.label, fmt(m), if sat { "satisfied" } else { "not satisfied" }));
        }
        if let Some(n) = s.get("attractor_norm").and_then(Value::as_f64) {
            let near = if n < ORIGIN_TOL { " (attractor ≈ 0)" } else { "" };
            lines.push(format!("[{}] mean attractor norm: {}{near}", run.label, fmt(&json!(n))));
        }
        if let Some(f) = s.get("singleton_fraction") {
            lines.push(format!("[{}] singleton fraction: {}", run.label, fmt(f)));
        }
        if let Some(r) = s.get("rate") {
            let ci = r.get("ci95").and_then(Value::as_array).cloned().unwrap_or_default();
            let ci: Vec<String> = ci.iter().map(fmt).collect();
            lines.push(format!("[{}] rate fit: {} (95% CI [{}])", run.label, r.get("mean").map(fmt).unwrap_or_default(), ci.join(", ")));
        }
        runs.push(json!({
            "label": run.label,
            "violations": run.violations,
            "summary": run.summary,
        }));
    }
    lines.push(format!("total bound violations: {total}"));
    lines.push(if integrity.is_empty() {
        "integrity: ok".into()
    } else {
        format!("integrity: FAILED ({})", integrity.join(", "))
    });
    Ok(Summary { experiments: manifest.runs.len(), total_violations: total, integrity_failures: integrity, runs, lines })
}
