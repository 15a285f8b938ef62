use thiserror::Error;

/// Errors raised by mechanisms, checkers and certificate builders.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuctionError {
    /// The caller supplied data that violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A state-machine invariant broke; indicates a bug, not bad input.
    #[error("internal error: {0}")]
    Internal(String),

    /// Aggregate quality decreased when the agent raised its reported valuation.
    #[error(
        "value monotonicity violated for agent {agent}: quality {quality_low} at v={v_low} \
         exceeds {quality_high} at v={v_high}"
    )]
    VmViolation {
        agent: usize,
        v_low: f64,
        v_high: f64,
        quality_low: f64,
        quality_high: f64,
    },
}

impl AuctionError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        AuctionError::InvalidInput(msg.into())
    }

    pub(crate) fn internal(msg: impl Into<String>) -> Self {
        AuctionError::Internal(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, AuctionError>;
