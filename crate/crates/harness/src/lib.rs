//! Experiment orchestration for the slab MHD laboratory: configuration,
//! stiffness sweeps against the incompressible reference, initial-layer
//! detection, and persistence of tables, reports and checkpoints.

pub mod config;
pub mod sweep;
pub mod table;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] mhd_slab::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    /// CLI exit code contract: 2 when every run blew up, 3 for bad config.
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Config(_) => 3,
            _ => 1,
        }
    }
}
