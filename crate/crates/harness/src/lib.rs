//! Experiment harness for the `swarmloc` simulator: TOML experiment
//! documents, parallel seed/parameter sweeps and CSV/JSON artifacts.

pub mod config;
pub mod error;
pub mod experiment;
pub mod format;
pub mod oracle;
pub mod output;

pub use config::{parse_config, Experiment};
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, BatchReport};
