use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function it was passed to.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature ran out of subdivisions before meeting its tolerance.
    #[error("quadrature did not converge after {subdivisions} subdivisions (estimate {estimate:e}, error estimate {error_estimate:e})")]
    NoConvergence {
        estimate: f64,
        error_estimate: f64,
        subdivisions: usize,
    },

    /// The design or analysis configuration is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// Rejection sampling from a truncated prior exhausted its proposal budget.
    #[error("rejection sampling exceeded {max_proposals} proposals")]
    SamplingBudget { max_proposals: u64 },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for errors caused by the caller's inputs rather than numerical failure.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
