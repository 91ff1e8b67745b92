//! Configuration, sweep runner and tabular output for the `simulate` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod runner;

pub use config::{validate_config, ConfigErrors, Experiment, Numerics, SweepConfig};
pub use runner::{run_sweep, write_outputs, PointRecord, SweepResult};

/// Environment variable holding the default worker count.
pub const JOBS_ENV: &str = "SIMULATE_JOBS";
