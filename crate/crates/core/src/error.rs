use thiserror::Error;

use crate::primitives::{Regime, ValidationReport};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters:\n{0}")]
    InvalidParams(ValidationReport),

    #[error("durability must be non-negative and finite, got {0}")]
    NegativeDurability(f64),

    #[error("{regime} regime is inactive (margin {margin:.6} <= 0); D* = 0 by convention")]
    InactiveRegime { regime: Regime, margin: f64 },

    #[error("no sign change of the first-order condition on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
