//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("insufficient statistics: {0}")]
    InsufficientStatistics(String),
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, ModelError>;
