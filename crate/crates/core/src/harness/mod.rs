//! Configuration, experiment dispatch and output.
//!
//! A run reads one TOML config, executes one experiment kind and writes a
//! directory of JSON reports and CSV tables followed by `manifest.json`, which
//! lists the SHA-256 of every other file. Given the same config, seed and
//! [`Clock`], two runs produce byte-identical directories regardless of thread
//! count.

mod config;
mod manifest;
mod output;
mod run;

pub use config::{
    load_config, parse_config, read_dataset_csv, toy_regression, ContinuumPreset,
    ContinuumSettings, DataIndependenceSettings, DatasetConfig, ExperimentConfig, ExperimentKind,
};
pub use manifest::{Clock, RunManifest, TOOL_NAME, TOOL_VERSION};
pub use output::{
    emit_plot_data, fmt_f64, sha256_hex, FileRecord, OutputTree, PlotData, PlotFormat,
};
pub use run::{run_experiment, write_error_report, RunOptions};
