use thiserror::Error;

/// Errors raised by the solvers, samplers and scenario runner.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter set violates one of its invariants.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A time step violates the stability or positivity restriction.
    #[error("step size {dt} exceeds the admissible bound {limit} ({condition})")]
    StepSize {
        dt: f64,
        limit: f64,
        condition: &'static str,
    },
    /// Scenario file could not be parsed.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
