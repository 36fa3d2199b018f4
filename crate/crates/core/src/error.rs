use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the design pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("singular impedance system at {freq_hz} Hz (geometry {geometry_hash:016x})")]
    SingularSystem { freq_hz: f64, geometry_hash: u64 },

    #[error("reflection coefficient undefined: Z_in = -Z0")]
    DivisionByZero,

    #[error("frequency grids differ at point {index}")]
    GridMismatch { index: usize },

    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: frequencies not strictly increasing at line {line}")]
    NonMonotoneGrid { path: PathBuf, line: u64 },

    #[error("{path}:{line}: target S11 must be <= 0 dB, got {value}")]
    PositiveDbValue { path: PathBuf, line: u64, value: f64 },

    #[error("surrogate fit failed: {0}")]
    SurrogateFit(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Simulator failures that the objective maps to a penalty score.
    pub fn is_simulation_failure(&self) -> bool {
        matches!(
            self,
            Error::DegenerateGeometry(_) | Error::SingularSystem { .. } | Error::DivisionByZero
        )
    }

    /// Process exit code used by the CLI: 2 for IO failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            Error::Csv(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => 2,
            Error::Json(e) if e.is_io() => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
