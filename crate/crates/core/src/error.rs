use thiserror::Error;

/// Errors produced by the waveform design library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The interference covariance could not be factorized. Only happens for
    /// degenerate scenarios (non-positive noise power, non-finite inputs).
    #[error("ill-conditioned scenario: {0} is not positive definite")]
    NotPositiveDefinite(&'static str),

    #[error("receive filter is zero")]
    ZeroFilter,

    #[error("spectral tables were built for a different scenario")]
    TableMismatch,

    #[error("instance too large: {count} waveforms exceeds the limit of {limit}")]
    InstanceTooLarge { count: u128, limit: u128 },

    #[error("outer iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        Error::AtIteration {
            iteration,
            source: Box::new(self),
        }
    }

    /// True for failures of the numerical pipeline (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NotPositiveDefinite(_) | Error::ZeroFilter => true,
            Error::AtIteration { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
