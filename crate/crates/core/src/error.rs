use thiserror::Error;

/// Errors raised by the teaching library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TeachError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("symmetric eigensolver did not converge after {0} sweeps")]
    EigenNoConvergence(usize),

    #[error("effort `{0}` depends on raw examples and has no (n, s) form")]
    AnalyticOnly(&'static str),

    #[error("effort `{0}` is not differentiable")]
    NonDifferentiable(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("infeasible scenario: {0}")]
    Infeasible(String),

    #[error("teaching set is empty")]
    EmptySet,

    #[error("version space is empty")]
    EmptyVersionSpace,

    #[error("concept class: {0}")]
    ConceptClass(String),
}

pub type Result<T> = std::result::Result<T, TeachError>;

pub(crate) fn domain(msg: impl Into<String>) -> TeachError {
    TeachError::Domain(msg.into())
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(TeachError::Dimension { expected, got })
    }
}
