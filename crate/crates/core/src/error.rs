use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid simplex: {0}")]
    InvalidSimplex(String),
    #[error("empty matrix")]
    EmptyMatrix,
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
    #[error("invalid labels: {0}")]
    InvalidLabels(String),
    #[error("divergence undefined: {0}")]
    Domain(String),
    #[error("class {class} has zero prior but receives predicted mass")]
    ZeroPrior { class: usize },
    #[error("prediction ({row}, {col}) is not strictly inside (0, 1)")]
    ZeroPrediction { row: usize, col: usize },
    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("infeasible target: {0}")]
    InfeasibleTarget(String),
    #[error("instance too large for the brute-force oracle (n = {n}, k = {k}; limit n <= 8, k <= 4)")]
    SizeGuard { n: usize, k: usize },
    #[error("ppa requires the original class distribution")]
    MissingAux,
    #[error("missing divergence for {0}")]
    MissingDivergence(&'static str),
    #[error("infeasible shift: {0}")]
    InfeasibleShift(String),
    #[error("no minority class to relabel into")]
    NoMinorityClass,
    #[error("covariate shift requires a feature matrix")]
    MissingFeatures,
    #[error("every feature column has zero variance or zero correlation")]
    DegenerateFeature,
    #[error("task skipped: {0}")]
    SkipTask(String),
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
