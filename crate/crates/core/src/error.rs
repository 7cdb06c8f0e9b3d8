use thiserror::Error;

use crate::topology::NodeId;

/// Errors produced by the rate model, topology construction, and schedulers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("gateway unreachable from node {0}")]
    Unreachable(NodeId),

    #[error(
        "no feasible schedule within bounds (T<={t_max}, k<={k_max}, inflight<={inflight_max})"
    )]
    Infeasible {
        t_max: usize,
        k_max: usize,
        inflight_max: usize,
    },

    #[error("search space too large: {0}")]
    TooLarge(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
