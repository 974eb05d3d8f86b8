use thiserror::Error;

/// Errors raised by the bound and verification machinery.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MdcError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Exhaustive enumeration would exceed the configured budget.
    #[error("enumeration budget exceeded: {what} needs {required} kernel evaluations, budget is {budget}")]
    BudgetExceeded {
        what: &'static str,
        required: u128,
        budget: u64,
    },

    #[error("calibration failed: {0}")]
    Calibration(String),

    /// A mathematical invariant that must hold did not (indicates a bug or a numerical problem).
    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T, E = MdcError> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> MdcError {
    MdcError::InvalidArgument(msg.into())
}
