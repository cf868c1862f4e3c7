use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value failed validation. `field` is the dotted key path.
    #[error("invalid configuration `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("failed to parse configuration: {0}")]
    ConfigParse(String),

    /// Logic errors inside the event loop. These indicate a bug, not a modeled outcome.
    #[error("simulation fault at t={time_s:.9}s: {reason}")]
    Fault { time_s: f64, reason: String },

    #[error("link has zero data rate")]
    DeadLink,

    #[error("malformed model file {}: {reason}", path.display())]
    Model { path: PathBuf, reason: String },

    #[error("{0}")]
    Analysis(String),

    #[error("missing input file {}", .0.display())]
    MissingInput(PathBuf),

    #[error("incompatible runs: {0}")]
    Incompatible(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::ConfigParse(_) => 2,
            _ => 3,
        }
    }
}
