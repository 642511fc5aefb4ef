//! Experiment registry, key-value configuration and reports.
//!
//! An experiment turns a validated [`ExperimentConfig`] into rows with a
//! fixed column order; the summary and the pass/fail assertions are
//! recomputed from those rows, so merged reports stay consistent.

mod config;
mod experiments;
mod report;

pub use config::{parse_number, parse_pairs, ConfigBuilder, ExperimentConfig, Format, Kind, Param, COMMON, TRIALS};
pub use experiments::{exactness_errors, Experiment, Module, EXPERIMENTS};
pub use report::{merge, merge_reports, Assertion, Report, Row};

use crate::{Error, Result};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "VINOLAB_OUT";
/// Output directory when neither `--out` nor the environment sets one.
pub const DEFAULT_OUT: &str = "vinolab-out";

pub fn find(id: &str) -> Result<&'static Experiment> {
    EXPERIMENTS.iter().find(|e| e.id == id).ok_or_else(|| Error::UnknownExperiment(id.into()))
}

/// `(id, module, description)` for every registered experiment.
pub fn list_experiments() -> Vec<(&'static str, &'static str, &'static str)> {
    EXPERIMENTS.iter().map(|e| (e.id, e.module.name(), e.description)).collect()
}

pub fn run(config: &ExperimentConfig) -> Result<Report> {
    find(&config.experiment)?.run(config)
}

/// Output directory: the configured one, else `$VINOLAB_OUT`, else
/// [`DEFAULT_OUT`].
pub fn out_dir(config: &ExperimentConfig) -> std::path::PathBuf {
    config
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(Into::into))
        .unwrap_or_else(|| DEFAULT_OUT.into())
}
