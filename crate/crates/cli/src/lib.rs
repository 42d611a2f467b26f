//! Experiment runner: configuration, drivers and report files.

pub mod config;
pub mod run;
pub mod stats;

pub use config::{ExperimentConfig, ExperimentKind, Overrides, PhiChoice, SettingChoice};
pub use run::{run, Report, Table, SCHEMA_VERSION};
