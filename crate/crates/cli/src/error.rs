use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] bfbin_core::Error),

    #[error("{0}")]
    Usage(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("plot error: {0}")]
    Plot(String),

    #[error("thread pool: {0}")]
    Threads(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    /// 2 for bad input, 1 for everything that went wrong afterwards.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_config() => 2,
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let numeric = bfbin_core::Error::NoConvergence {
            estimate: 0.5,
            error_estimate: 1e-3,
            subdivisions: 200,
        };
        assert_eq!(CliError::Core(numeric).exit_code(), 1);
        assert_eq!(CliError::Core(bfbin_core::Error::Config("x".into())).exit_code(), 2);
        assert_eq!(CliError::Core(bfbin_core::Error::Domain("x".into())).exit_code(), 2);
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
        assert_eq!(CliError::Plot("x".into()).exit_code(), 1);
    }
}
