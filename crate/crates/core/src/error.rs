use std::fmt;

use thiserror::Error;

/// Which marginal an error refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Row,
    Column,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Row => f.write_str("row"),
            Side::Column => f.write_str("column"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("negative entry {value} at index {index}")]
    NegativeEntry { index: usize, value: f64 },

    #[error("entry at index {index} must be strictly positive, found {value}")]
    NonPositive { index: usize, value: f64 },

    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("exponent overflow at ({row}, {col}): argument {argument} exceeds the 700 limit")]
    Overflow {
        row: usize,
        col: usize,
        argument: f64,
    },

    #[error("{side} marginal underflowed to zero at index {index} (iteration {iteration})")]
    Underflow {
        side: Side,
        index: usize,
        iteration: usize,
    },

    #[error("unbalanced masses: row total {alpha} vs column total {beta}")]
    Unbalanced { alpha: f64, beta: f64 },

    #[error("parity violation: iteration {k} must be {required}")]
    Parity { k: usize, required: &'static str },

    #[error("{what} is not on the probability simplex (total {total})")]
    NotSimplex { what: &'static str, total: f64 },

    #[error("problem of size {n} exceeds the limit {max}")]
    TooLarge { n: usize, max: usize },

    #[error("degenerate instance: {0}")]
    Degenerate(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerical iteration itself as opposed to bad inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Overflow { .. } | Error::Underflow { .. } | Error::Numeric(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
