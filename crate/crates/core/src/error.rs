use thiserror::Error;

/// Errors raised by the engines and the scenario runner.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The self-interaction integral of a point mass is infinite.
    #[error("Newtonian self-integral diverges for a point-like mass density; use a finite radius")]
    Divergence,

    #[error("invalid value for `{name}`: {reason}")]
    Domain { name: &'static str, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("series did not converge after {terms} terms (partial sum {partial_sum})")]
    Convergence { terms: usize, partial_sum: f64 },

    #[error("unsupported kernel: {0}")]
    UnsupportedKernel(String),

    #[error("numerical instability: {0}")]
    NumericalInstability(String),

    /// An explicit stochastic step left the admissible range; reduce `dt`.
    #[error("step size too large: {0}; reduce dt")]
    StepSize(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("iteration did not converge: {0}")]
    NonConvergence(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by invalid input rather than by a numerical engine.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Domain { .. } | Error::Config(_) | Error::Io(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
