//! Error types shared across the crate.

use thiserror::Error;

use crate::config::ConfigError;
use crate::expr::{EvalError, ParseError};

pub type Result<T, E = ContractaError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ContractaError {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),

    #[error("evaluation error: {0}")]
    Eval(#[from] EvalError),

    #[error("point {value} is outside the domain {domain}")]
    Domain { value: f64, domain: String },

    /// An iterate left the domain. `index` is the orbit position of the offending point.
    #[error("closure violated at iterate {index}: T({from}) = {value} is outside {domain}")]
    Closure {
        index: usize,
        from: f64,
        value: f64,
        domain: String,
    },

    #[error("alpha out of [0, 1) at t = {t}: alpha(t) = {value}")]
    AlphaRange { t: f64, value: f64 },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl ContractaError {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        ContractaError::Argument(msg.into())
    }

    /// Process exit code: 2 for usage/config problems, 3 for evaluation and I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            ContractaError::Parse(_) | ContractaError::Argument(_) | ContractaError::Config(_) => 2,
            ContractaError::Eval(_)
            | ContractaError::Domain { .. }
            | ContractaError::Closure { .. }
            | ContractaError::AlphaRange { .. }
            | ContractaError::Io(_) => 3,
        }
    }
}
