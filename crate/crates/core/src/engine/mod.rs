//! Deterministic discrete-event loop tying the protocol, the radio and the
//! mobility model together.

mod config;
mod event;
mod sim;

pub use config::{Injector, Mode, RunConfig};
pub use event::{Event, EventKind, EventQueue};
pub use sim::{
    run, vehicle_tick_nt, NtDecision, NtTick, RadioRecord, RunOptions, RunOutput, Simulation,
    TxRecord,
};

use crate::mobility::ConfigError;

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("invalid config field {field}: {reason}")]
    Config { field: String, reason: String },
    #[error("cannot load config {path}: {reason}")]
    ConfigFile { path: String, reason: String },
    #[error(transparent)]
    Scenario(#[from] ConfigError),
    #[error("simulation failed: {0}")]
    Runtime(String),
}

impl EngineError {
    /// Configuration problems as opposed to failures while running.
    pub fn is_config(&self) -> bool {
        !matches!(self, EngineError::Runtime(_))
    }
}
