use std::fmt;
use std::io;
use std::path::PathBuf;

use dualsync::config::{ConfigErrors, ConfigIssue};
use serde_json::json;

#[derive(Debug)]
pub enum CliError {
    Config {
        path: Option<PathBuf>,
        issues: Vec<ConfigIssue>,
    },
    Model(dualsync::Error),
    Io {
        path: PathBuf,
        source: io::Error,
    },
    Input(String),
    Sweep {
        failed: usize,
        total: usize,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn config(path: Option<PathBuf>, errors: ConfigErrors) -> Self {
        CliError::Config {
            path,
            issues: errors.0,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config { .. } => "config",
            CliError::Model(_) => "model",
            CliError::Io { .. } => "io",
            CliError::Input(_) => "input",
            CliError::Sweep { .. } => "sweep",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Input(_) => 2,
            _ => 1,
        }
    }

    /// Single-line JSON object for stderr.
    pub fn to_json(&self) -> String {
        let mut obj = json!({
            "error": self.kind(),
            "message": self.to_string(),
        });
        match self {
            CliError::Config { path, issues } => {
                obj["path"] = json!(path.as_ref().map(|p| p.display().to_string()));
                obj["issues"] = issues
                    .iter()
                    .map(|i| json!({"line": i.line, "key": i.key, "message": i.message}))
                    .collect();
            }
            CliError::Io { path, .. } => obj["path"] = json!(path.display().to_string()),
            CliError::Sweep { failed, total } => {
                obj["failed"] = json!(failed);
                obj["total"] = json!(total);
            }
            CliError::Model(_) | CliError::Input(_) => {}
        }
        obj.to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config { issues, .. } => {
                write!(f, "{} configuration error(s)", issues.len())?;
                for i in issues {
                    write!(f, "; {i}")?;
                }
                Ok(())
            }
            CliError::Model(e) => write!(f, "{e}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Input(m) => f.write_str(m),
            CliError::Sweep { failed, total } => write!(f, "{failed} of {total} sweep points failed"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<dualsync::Error> for CliError {
    fn from(e: dualsync::Error) -> Self {
        CliError::Model(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;
