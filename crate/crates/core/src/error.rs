use thiserror::Error;

use crate::ratio::Ratio;

/// Best value established before a budgeted computation gave up.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LowerBound {
    Value(u64),
    Alpha(Ratio),
}

impl std::fmt::Display for LowerBound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LowerBound::Value(v) => write!(f, "{v}"),
            LowerBound::Alpha(r) => write!(f, "{}/{}", r.numer(), r.denom()),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch at {path}: expected {expected}, found {found}")]
    DimensionMismatch {
        path: String,
        expected: usize,
        found: usize,
    },
    #[error("negative value at {path}: {value}")]
    NegativeValue { path: String, value: i64 },
    #[error("degree cap {cap} at {path} exceeds the opposite side size {side_size}")]
    DegreeExceedsSide {
        path: String,
        cap: usize,
        side_size: usize,
    },
    #[error("{x} is not coprime with {n}")]
    NotCoprime { x: u64, n: u64 },
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("n_left * d_left ({left}) differs from n_right * d_right ({right})")]
    SizeMismatch { left: usize, right: usize },
    #[error("budget exceeded after {nodes_explored} nodes{}", .lower_bound.as_ref().map(|b| format!(" (best lower bound {b})")).unwrap_or_default())]
    BudgetExceeded {
        nodes_explored: u64,
        lower_bound: Option<LowerBound>,
    },
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
