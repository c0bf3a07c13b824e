use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

/// Failure of a command. Domain failures exit 1, environment failures exit 2.
#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid input. One diagnostic per line.
    #[error("{}", .0.join("\n"))]
    Domain(Vec<String>),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Environment(String),
}

impl CliError {
    pub fn domain(message: impl Into<String>) -> Self {
        CliError::Domain(vec![message.into()])
    }

    pub fn io(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
        move |source| CliError::Io { path: path.to_owned(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Io { .. } | CliError::Environment(_) => 2,
        }
    }
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(CliError::io(path))
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(CliError::io(path))
}

/// Parses a JSON document, naming the file in the diagnostic.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = read_file(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::domain(format!("{}: {e}", path.display())))
}
