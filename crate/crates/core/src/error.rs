use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("cohort is empty after exclusions and labeling")]
    EmptyCohort,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("labels contain a single class; both positives and negatives are required")]
    SingleClass,

    #[error("ordering constraints contain a cycle through column {0}")]
    CyclicConstraints(usize),

    #[error("unsupported constraint structure: {0}")]
    UnsupportedConstraints(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("feature dictionary mismatch: {0}")]
    DictionaryMismatch(String),

    #[error("solver did not converge within {iterations} iterations (projected gradient {projected_gradient:e})")]
    NotConverged {
        iterations: usize,
        projected_gradient: f64,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
