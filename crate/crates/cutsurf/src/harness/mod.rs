//! Configuration ingestion, experiment presets, the centralized reference
//! solver, and CSV/SVG emission.

pub mod config;
pub mod csv;
pub mod oracle;
pub mod preset;
pub mod svg;

pub use config::{load_config, resolve, ConfigError, ResolvedRun, RunConfig};
pub use oracle::{centralized_oracle, decision_space_sets, Infeasible};
pub use preset::{run_preset, run_resolved, Preset, PresetReport};

use crate::cutting::IterationCapExceeded;
use std::fmt;

#[derive(Debug)]
pub enum HarnessError {
    Config(ConfigError),
    Cap(IterationCapExceeded),
    Io(std::io::Error),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(e) => write!(f, "{e}"),
            Self::Cap(e) => write!(f, "{e}"),
            Self::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl HarnessError {
    /// CLI exit code: 2 for configuration problems, 3 for an outer-loop cap,
    /// 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Cap(_) => 3,
            Self::Io(_) => 1,
        }
    }
}
