//! Batch front-end for `sbvp-core`: TOML run configuration, the `solve` and
//! `verify` commands, and their CSV/JSON output.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod parallel;

pub use commands::{solve, verify, Experiment, Outcome, RunContext, SolveSummary, Verdict};
pub use config::RunConfig;
pub use error::{LabError, LabResult};
