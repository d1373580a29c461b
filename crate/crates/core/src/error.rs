use thiserror::Error;

use crate::factor::RunStats;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A documented precondition of the operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A bounded search ran out of candidates.
    #[error("search exhausted: {0}")]
    SearchExhausted(String),

    /// No primitive lift could be produced; the caller should re-randomize.
    #[error("lift failed: {0}")]
    LiftFailed(String),

    #[error("{0} is not a square modulo {1}")]
    NotASquare(String, String),

    /// Internal consistency check failed. Signals a bug rather than bad input.
    #[error("inconsistency: {0}")]
    Inconsistency(String),

    /// An oracle refused an input above its configured cap.
    #[error("refused: {0}")]
    Refused(String),

    #[error("no decomposition found within budget ({0})")]
    BudgetExhausted(RunStats),
}

pub type Result<T> = std::result::Result<T, Error>;
