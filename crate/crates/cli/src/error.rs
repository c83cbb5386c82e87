use solitonlab::GeomError;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CRITERION_FALSE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Geom(#[from] GeomError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => EXIT_USAGE,
            CliError::Verification(_) | CliError::Io { .. } => EXIT_VERIFY,
            CliError::Geom(e) => match e {
                GeomError::Config(_)
                | GeomError::Parse(_)
                | GeomError::DimensionMismatch { .. }
                | GeomError::UnsupportedDimension { .. }
                | GeomError::Refused(_) => EXIT_USAGE,
                _ => EXIT_VERIFY,
            },
        }
    }

    pub fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}
