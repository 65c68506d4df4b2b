//! CLI failures, their exit codes and JSON form.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::config::Diagnostic;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(Vec<Diagnostic>),
    Io { path: PathBuf, message: String },
    Core(yde_core::Error),
    /// Checked inequalities failed; artifacts were still written.
    Violation { count: usize, message: String },
    /// Artifacts do not match their recorded checksums.
    Integrity(Vec<String>),
}

impl CliError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> CliError {
        CliError::Io { path: path.to_path_buf(), message: e.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Violation { .. } | CliError::Integrity(_) => 1,
            _ => 2,
        }
    }

    pub fn to_json(&self) -> Value {
        let body = match self {
            CliError::Usage(m) => json!({ "kind": "usage", "message": m }),
            CliError::Config(d) => json!({
                "kind": "config",
                "message": format!("{} configuration error(s)", d.len()),
                "diagnostics": d,
            }),
            CliError::Io { path, message } => json!({ "kind": "io", "path": path.display().to_string(), "message": message }),
            CliError::Core(e) => json!({ "kind": core_kind(e), "message": e.to_string() }),
            CliError::Violation { count, message } => json!({ "kind": "violation", "count": count, "message": message }),
            CliError::Integrity(files) => json!({
                "kind": "integrity",
                "message": "artifact checksum mismatch",
                "files": files,
            }),
        };
        json!({ "error": body, "exit_code": self.exit_code() })
    }
}

fn core_kind(e: &yde_core::Error) -> &'static str {
    use yde_core::Error as E;
    match e {
        E::Parameter(_) => "parameter",
        E::Domain(_) => "domain",
        E::Numeric(_) => "numeric",
        E::BlowUp { .. } => "blow-up",
        E::Precondition(_) => "precondition",
        E::Io(_) => "io",
    }
}

impl From<yde_core::Error> for CliError {
    fn from(e: yde_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Config(d) => {
                for (i, x) in d.iter().enumerate() {
                    if i > 0 {
                        writeln!(f)?;
                    }
                    write!(f, "{x}")?;
                }
                Ok(())
            }
            CliError::Io { path, message } => write!(f, "{}: {message}", path.display()),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Violation { message, .. } => f.write_str(message),
            CliError::Integrity(files) => write!(f, "integrity failure: {}", files.join(", ")),
        }
    }
}
