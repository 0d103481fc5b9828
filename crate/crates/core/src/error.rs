use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulator, the diagnostics engine and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("parse error at line {line}: `{key}`: {message}")]
    Parse {
        line: usize,
        key: String,
        message: String,
    },

    #[error("integration blow-up at step {step}: particle {particle} has a non-finite state")]
    IntegrationBlowup { particle: usize, step: u64 },

    #[error("undefined quantity: {0}")]
    Undefined(String),

    #[error("shell k = {k} is not resolvable on this grid; valid range is [{k_min}, {k_max}]")]
    Resolution { k: i32, k_min: i32, k_max: i32 },

    #[error("coverage error: {0}")]
    Coverage(String),

    #[error("resource error: {0}")]
    Resource(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("output directory {0} already exists and is not empty")]
    OutputExists(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag used in error JSON and by the C ABI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Validation(_) => "validation",
            Error::Configuration(_) => "configuration",
            Error::Parse { .. } => "parse",
            Error::IntegrationBlowup { .. } => "integration_blowup",
            Error::Undefined(_) => "undefined_quantity",
            Error::Resolution { .. } => "resolution",
            Error::Coverage(_) => "coverage",
            Error::Resource(_) => "resource",
            Error::Checkpoint(_) => "checkpoint",
            Error::OutputExists(_) => "output_exists",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
