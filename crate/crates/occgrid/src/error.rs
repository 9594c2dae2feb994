use std::path::PathBuf;

/// Crate-wide error type.
///
/// Each variant maps to a distinct process exit code in the CLI, see
/// [`Error::exit_code`].
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cell index {index} out of range for grid with {cells} cells")]
    IndexOutOfRange { index: usize, cells: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A joint update was asked to enumerate more cells than the configured
    /// cap allows. The fix is usually to switch to range gates, which shrink
    /// the cell subset updated at once.
    #[error("subset of {size} cells exceeds the joint enumeration cap of {cap}; use range gates (rgo) to reduce the subset size")]
    SubsetTooLarge { size: usize, cap: usize },

    /// Every configuration received zero likelihood, so the posterior cannot
    /// be normalized. The measurement is impossible under the model.
    #[error("measurement has zero probability under the model for every configuration")]
    InconsistentMeasurement,

    #[error("{path}:{line}: {message}")]
    Config {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("scenario format error at line {line}: {message}")]
    ScenarioFormat { line: usize, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI. Documented in the README and `--help`.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            Error::SubsetTooLarge { .. } => 3,
            Error::Io { .. } | Error::ScenarioFormat { .. } => 4,
            Error::InconsistentMeasurement => 5,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
