//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Configuration file or cross-reference problem.
    #[error("config error: {0}")]
    Config(String),

    /// A coefficient tensor that must be inverted is numerically singular.
    #[error("singular operator `{name}`: {detail}")]
    SingularOperator { name: &'static str, detail: String },

    /// Linear solver failure (factorization or residual tolerance).
    #[error("solver error: {0}")]
    Solver(String),

    /// An operation was called outside its contract (step indices, sizes).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Optimizer failure (bisection non-convergence, invalid bounds).
    #[error("optimizer error: {0}")]
    Optimizer(String),

    /// Filesystem / artifact output failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI contract:
    /// 1 config, 2 solver, 3 verification gate, 4 optimizer.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::SingularOperator { .. } | Error::Solver(_) | Error::Contract(_) => 2,
            Error::Optimizer(_) => 4,
            Error::Io(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
