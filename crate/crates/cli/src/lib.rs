//! Declarative experiment runner: a TOML file names a model, its parameters,
//! setting pairs, sample sizes, a pairing rule and the tests to run.

pub mod config;
pub mod output;
pub mod run;

pub use config::{
    validate_config, ConfigErrors, ExperimentConfig, ModelKind, OutputFormat, ValidConfig,
};
pub use output::{render, write_outputs};
pub use run::{run_experiment, Report, RunError, RunOutput};
