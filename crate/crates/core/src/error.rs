use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid {what}: {reason}")]
    Validation { what: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("enumeration needs {required} subset evaluations, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error("state is not reachable by the preparation optics: {0}")]
    UnreachableState(String),

    #[error("cannot estimate probabilities for setting (x={x}, y={y}): no mapped counts")]
    EstimationImpossible { x: usize, y: usize },

    #[error("error propagation undefined for setting (x={x}, y={y}): zero total counts")]
    PropagationUndefined { x: usize, y: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(what: &'static str, reason: impl Into<String>) -> Result<T> {
    Err(Error::Validation { what, reason: reason.into() })
}
