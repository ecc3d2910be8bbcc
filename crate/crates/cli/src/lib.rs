//! Experiment harness for opinion-aware influence maximization: instance
//! loading, seed selection runs, parameter sweeps, Monte Carlo evaluation and
//! exact oracle queries.

use std::fmt;

pub mod commands;
pub mod config;

pub use commands::{
    cmd_evaluate, cmd_gen, cmd_oracle, cmd_partition, cmd_select, cmd_sweep, GenSpec, JaccardWeights,
    OracleOutput, RunRecord, SweepAxis, SweepRow, Timings,
};
pub use config::{load_instance, Algo, ExperimentConfig, GraphSource, Instance, OpinionSource};

/// Bad invocation rather than a failure while running.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// 2 for usage errors, 1 for everything else.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<oim_core::Error>() {
        Some(
            oim_core::Error::KExceedsN { .. }
            | oim_core::Error::InvalidParameter(_)
            | oim_core::Error::UnknownAlgorithm(_),
        ) => 2,
        _ => 1,
    }
}
