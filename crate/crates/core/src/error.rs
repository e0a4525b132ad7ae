use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what}: forms disagree ({a:.17e} vs {b:.17e})")]
    Consistency { what: &'static str, a: f64, b: f64 },

    #[error("solitary-wave reconstruction failed at x = {x}: {detail}")]
    Reconstruction { x: f64, detail: String },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("rank deficiency: {0}")]
    RankDeficiency(String),

    #[error("degenerate eigenvalues: {0}")]
    Degenerate(String),

    #[error("integration blow-up at x = {x}")]
    BlowUp { x: f64 },

    #[error("matching singularity: {0}")]
    MatchingSingularity(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn solver(msg: impl Into<String>) -> Self {
        Error::Solver(msg.into())
    }
}
