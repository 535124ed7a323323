//! Experiment harness for `mpflow`: JSON configs in, CSV tables and JSON
//! reports out.

pub mod config;
pub mod error;
pub mod experiments;
pub mod oracles;
pub mod output;
pub mod report;

pub use config::{load_config, parse_config, ExperimentConfig, ExperimentKind, ScenarioConfig};
pub use error::{HarnessError, Result};
pub use experiments::{run_experiment, ExperimentOutput};
pub use output::{emit_csv, emit_report, write_outputs, CsvTable, OutputFile};
pub use report::{Check, Report};
