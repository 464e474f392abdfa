use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix column {0} has zero norm")]
    ZeroColumn(usize),

    #[error("matrix columns are not unit-normalized (column {index} has norm {norm})")]
    NotUnitColumns { index: usize, norm: f64 },

    #[error("support enumeration budget exceeded: C({n},{k}) = {count} > {budget}")]
    BudgetExceeded {
        n: usize,
        k: usize,
        count: u128,
        budget: u128,
    },

    #[error("theorem hypothesis not satisfied: {0}")]
    HypothesisViolated(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
