use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what}: expected length {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("topology must contain at least one spin")]
    EmptyTopology,
    #[error("invalid edge ({0}, {1}): self-loops are not allowed")]
    SelfLoop(usize, usize),
    #[error("invalid edge ({i}, {j}): index out of range for {n} spins")]
    EdgeOutOfRange { i: usize, j: usize, n: usize },
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("spin values must be -1 or +1, found {value} at index {index}")]
    InvalidSpin { index: usize, value: i64 },
    #[error("{what} must be finite, found {value}")]
    NonFinite { what: &'static str, value: f64 },
    #[error("invalid interval [{min}, {max}]")]
    InvalidInterval { min: f64, max: f64 },
    #[error("invalid anneal schedule: {0}")]
    InvalidSchedule(String),
    #[error(
        "exact solver supports at most {max} spins, problem has {n}; use the simulated-annealing backend"
    )]
    Capacity { n: usize, max: usize },
    #[error("unknown backend '{name}' (registered backends: {registered})")]
    UnknownBackend { name: String, registered: String },
    #[error("backend '{backend}' does not accept parameter '{key}'")]
    UnknownBackendParam { backend: String, key: String },
    #[error("invalid value {value} for backend parameter '{key}': {reason}")]
    InvalidBackendParam {
        key: String,
        value: f64,
        reason: &'static str,
    },
    #[error("invalid preprocessing: {0}")]
    InvalidPreprocess(String),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("dataset has no samples")]
    EmptyDataset,
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("bars-and-stripes matrices need size >= 2, got {0}")]
    BasSize(usize),
    #[error(
        "offset initialization paths disagree: sampled {sampled} vs closed form {closed_form}"
    )]
    EpsilonMismatch { sampled: f64, closed_form: f64 },
    #[error("unknown preset '{0}' (expected one of: random, fn-lin, fn-quad, bas)")]
    UnknownPreset(String),
    #[error("{0}")]
    Document(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Train(#[from] Box<crate::training::TrainError>),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn finite(what: &'static str, value: f64) -> Result<f64> {
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::NonFinite { what, value })
        }
    }
}

impl From<crate::training::TrainError> for Error {
    fn from(e: crate::training::TrainError) -> Self {
        Error::Train(Box::new(e))
    }
}
