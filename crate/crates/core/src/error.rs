use thiserror::Error;

/// Errors surfaced by the toolkit. Numerical routines fail loudly rather than
/// return silently degraded values; hypothesis checks that *fail* return a
/// report, while inputs that violate a contract return one of these.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("hyperbolicity violated: {0}")]
    Hyperbolicity(String),

    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("singular linear system in {0}")]
    Singular(&'static str),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("hypothesis violation: {0}")]
    Hypothesis(String),
}

pub type Result<T> = std::result::Result<T, Error>;
