//! Library surface of the experiment runner, so integration tests and other
//! tools can drive the same pipeline as the `gibbsel` binary.

pub mod commands;
pub mod config;
pub mod report;
pub mod run;

pub use config::{load_config, ExperimentConfig, TableSeeds, TableSizes};
pub use report::{
    AdaptiveReport, AncillaryReport, ExperimentReport, SubsetReport, REPORT_SCHEMA_VERSION,
};
pub use run::run_experiment;
