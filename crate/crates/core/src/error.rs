//! Error taxonomy shared by all modules.
//!
//! The split matters for the CLI: configuration, domain, ingestion and
//! contract errors are user-input problems (exit code 2), while numerical
//! and regime errors arise from the computation itself (exit code 3).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or contradictory configuration values.
    #[error("configuration error: {0}")]
    Config(String),

    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed waveform table input; `line` is 1-based in the stream.
    #[error("ingestion error at line {line}: {message}")]
    Ingestion { line: usize, message: String },

    /// Mismatched intermediate results passed between modules.
    #[error("contract error: {0}")]
    Contract(String),

    /// The numerics failed (singular system, tolerance not reached, ...).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Physically valid input outside the regime the theory covers.
    #[error("regime error: {0}")]
    Regime(String),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn ingestion(line: usize, msg: impl Into<String>) -> Self {
        Error::Ingestion {
            line,
            message: msg.into(),
        }
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn regime(msg: impl Into<String>) -> Self {
        Error::Regime(msg.into())
    }

    /// True for errors caused by the computation rather than by the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_) | Error::Regime(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
