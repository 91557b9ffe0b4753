use alloc::string::String;
use alloc::vec::Vec;

/// Errors reported by the models in this crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("large-scale gain must be positive and finite, got {value} for {link}")]
    NonPositiveGain { link: String, value: f64 },

    #[error("matrix is not positive semi-definite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("Fisher information is singular along `{direction}` (condition number {condition:e})")]
    SingularFisher { direction: String, condition: f64 },

    #[error("infeasible design problem, violated constraints: {}", violated.join(", "))]
    Infeasible { violated: Vec<String> },
}

pub type Result<T> = core::result::Result<T, Error>;
