use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidPmf(String),

    #[error("invalid distortion matrix: {0}")]
    InvalidDistortion(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("vectors are not comparable: totals {left} and {right} differ")]
    IncomparableTotals { left: f64, right: f64 },

    #[error("unknown symbol {0:?}")]
    UnknownSymbol(String),

    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    #[error("infeasible: P[min_y d(X,y) > D] = {uncovered_mass} exceeds epsilon = {epsilon}")]
    Infeasible { uncovered_mass: f64, epsilon: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid code: {0}")]
    InvalidCode(String),

    #[error("solver did not converge after {iterations} iterations (last change {last_change:e})")]
    NonConvergence { iterations: usize, last_change: f64 },

    #[error("distortion level {level} outside the open interval ({min}, {max})")]
    Domain { level: f64, min: f64, max: f64 },

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("budget exceeded: {needed} matrix entries > cap {cap}")]
    BudgetExceeded { needed: u128, cap: u128 },

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
