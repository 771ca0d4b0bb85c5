//! Error type shared across the engine.

use thiserror::Error;

/// Everything that can go wrong inside the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("degenerate operator: {0}")]
    Degenerate(String),

    #[error("numerical consistency failure: {0}")]
    Numerical(String),

    #[error(
        "regularization target unattainable: t*||r|| = {target:.6e} >= sup sqrt(Phi) = {limit:.6e}"
    )]
    AlphaUnattainable { target: f64, limit: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
