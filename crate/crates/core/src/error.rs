use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("degenerate instance: {0}")]
    DegenerateInstance(String),

    #[error("infeasible k: requested {k} centers but only {available} candidate points")]
    InfeasibleK { k: usize, available: usize },

    #[error("oracle too large: {subsets} subsets exceeds cap {cap}")]
    OracleTooLarge { subsets: u128, cap: u128 },

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported metric: {0}")]
    UnsupportedMetric(String),

    #[error("weights are not uniform")]
    NonUniformWeights,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InfeasibleK { .. } | Error::OracleTooLarge { .. } => 3,
            Error::Io(_) | Error::Json(_) => 1,
            _ => 2,
        }
    }
}
