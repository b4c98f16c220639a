use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// The MoM matrix could not be factored, or its condition estimate is too large.
    #[error("linear solve failed: {reason} (condition estimate {condition:.3e})")]
    Solver { reason: String, condition: f64 },

    #[error("port reduction failed: {0}")]
    Reduction(String),

    #[error("Z to S conversion failed: {0}")]
    Conversion(String),

    #[error("training diverged at epoch {epoch}: {detail}")]
    Training { epoch: usize, detail: String },

    /// Spacing constraints violated; lists every offending element pair.
    #[error("spacing constraint violated: {0}")]
    Constraint(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}
