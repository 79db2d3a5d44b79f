//! The `solve` and `verify` commands. Each writes its CSV and JSON into the
//! output directory and reports an [`Outcome`] carrying the exit code.

mod common;
mod solve;
mod verify;

use std::fmt;

use serde::Serialize;

pub use common::{estimate_c1_parallel, majorant, resolve_c1, RunContext};
pub use solve::{solve, SolveSummary};
pub use verify::{verify, Verdict};

/// How a command ended when it ran to completion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub exit_code: i32,
    pub message: String,
}

impl Outcome {
    pub fn success(message: impl Into<String>) -> Self {
        Self {
            exit_code: 0,
            message: message.into(),
        }
    }

    pub fn failure(exit_code: i32, message: impl Into<String>) -> Self {
        Self {
            exit_code,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    C1,
    Ui,
    Bhp,
    Eq27,
    Excursions,
    Occupation,
    Oracle,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::C1 => "c1",
            Experiment::Ui => "ui",
            Experiment::Bhp => "bhp",
            Experiment::Eq27 => "eq27",
            Experiment::Excursions => "excursions",
            Experiment::Occupation => "occupation",
            Experiment::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
