//! Declarative experiments: configuration, seeded parallel replication,
//! aggregation with standard errors, and CSV/JSON emission.

mod config;
mod output;
mod runner;

pub use config::{AgentConfig, ExperimentConfig, GameConfig, MetricKind, SCHEMA_VERSION};
pub use output::{emit_results, to_csv, to_json, OutputFormat};
pub use runner::{
    aggregate_curves, aggregate_traces, run_experiment, run_replication, run_replication_on,
    verify_trace, AggregateResult, AggregateRow, ExperimentOutput, ReplicationReport,
    FAILURE_THRESHOLD,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config field `{field}`: {constraint}")]
    Validation { field: String, constraint: String },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Game(#[from] crate::game::GameError),
    #[error("{failed} of {total} replications failed numerically (over the 10% threshold)")]
    NumericalThreshold { failed: usize, total: usize },
}

impl ExperimentError {
    /// Process exit code for the CLI: 1 validation, 2 numerical-failure
    /// threshold, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Validation { .. } | ExperimentError::Parse(_) | ExperimentError::Game(_) => 1,
            ExperimentError::NumericalThreshold { .. } => 2,
            ExperimentError::Io(_) => 3,
        }
    }
}
