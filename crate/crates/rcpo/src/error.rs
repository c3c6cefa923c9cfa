//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A CMDP failed validation (rows not stochastic, bad discount, ...).
    #[error("invalid cmdp: {0}")]
    InvalidCmdp(String),

    /// A policy table failed validation (rows not probability distributions).
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    /// A configuration value is out of range or inconsistent.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// An operation that needs at least one step or trajectory got none.
    #[error("empty input: {0}")]
    Empty(String),

    /// Text-format parsing failed (cmdp files, policy files, maps, configs).
    #[error("parse error: {0}")]
    Parse(String),

    /// The requested exact computation is outside the solver's bounds.
    #[error("solver bound exceeded: {0}")]
    BoundExceeded(String),

    /// An internal cross-check failed (for instance the penalized-value identity).
    #[error("consistency check failed: {0}")]
    Inconsistent(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
