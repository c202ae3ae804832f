//! Config-driven command layer behind the `mpcn` binary: `sample`,
//! `diagnose`, and `experiment`, all pure functions of (config file, seed).

pub mod commands;
pub mod config;
pub mod experiments;

pub use commands::{cmd_diagnose, cmd_sample};
pub use config::{run_settings, Config, Overrides, RunSettings};
pub use experiments::cmd_experiment;
