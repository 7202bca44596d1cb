use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no perfect-stranger schedule: {n_rounds} rounds need at least {needed} players per role, have {per_role}")]
    InfeasibleSchedule {
        n_rounds: usize,
        per_role: usize,
        needed: usize,
    },

    #[error("probability {value} from {context} lies outside [0, 1]")]
    Domain { value: f64, context: &'static str },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("exact enumeration of {datasets} datasets exceeds the cap of {cap}; use sampled mode")]
    EnumerationCap { datasets: String, cap: u64 },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("covariance matrix is not positive definite even with jitter {jitter:e}")]
    NotPositiveDefinite { jitter: f64 },

    #[error("objective failed at A = {a}, pi = {pi}: {source}")]
    Objective {
        a: f64,
        pi: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("every grid point has already been observed")]
    GridExhausted,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
