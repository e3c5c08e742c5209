use thiserror::Error;

/// Errors raised across the simulation and certification engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("Fock cutoff too small: truncated tail weight {tail:.3e} exceeds tolerance {tolerance:.1e}")]
    CutoffTooSmall { tail: f64, tolerance: f64 },

    #[error("odd cat state is degenerate for |alpha| = {0:.3e}")]
    DegenerateCat(f64),

    #[error("operation produced the zero vector: {0}")]
    ZeroResult(&'static str),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("mode index {index} out of range for a {modes}-mode state")]
    BadModeIndex { index: usize, modes: usize },

    #[error("state is not normalized (trace {0})")]
    NotNormalized(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("too many deterministic strategies for m_A = {0} (cap is 16)")]
    TooManyStrategies(usize),

    #[error("condition (phase index {phase_index}, sign {sign}) has no events")]
    EmptyCondition { phase_index: usize, sign: i8 },

    #[error("chain lengths differ across conditions")]
    MismatchedChains,

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
