//! Experiment harness for `gedyn-core`: configuration, the run matrix,
//! TSV records and aggregates, and gnuplot scripts.

use std::path::PathBuf;

use gedyn_core::evolve::EvolveError;
use thiserror::Error;

pub mod config;
pub mod plot;
pub mod records;
pub mod runner;

pub use config::{ExperimentConfig, InstancePolicy, ProblemKind};
pub use records::{AggregateRow, RunRecord};
pub use runner::{execute, run_experiment};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Evolve(#[from] EvolveError),
    #[error("records: {0}")]
    Records(String),
    #[error("missing cells: {}", .0.join(", "))]
    MissingCells(Vec<String>),
    #[error("{0}")]
    Runtime(String),
}

impl HarnessError {
    /// 1 for configuration problems, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            _ => 2,
        }
    }
}
