use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// A precondition of the operation does not hold (e.g. `‖A‖ > 1 + tol`).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported method: {0}")]
    Unsupported(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    /// The weight does not factor the way a finite `m(ψ, φ)` forces it to.
    #[error("symbol not bounded-compatible: {0}")]
    NotBoundedCompatible(String),

    /// Boundedness was required but the operator is unbounded.
    #[error("unbounded operator: {0}")]
    Unbounded(String),

    #[error("operators lie in different components: {0}")]
    DifferentComponents(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}
