//! Command-line experiments: configuration, output files, manifests and the
//! verification suite.

mod commands;
mod config;
mod io;
mod manifest;
pub mod verify;

use std::path::PathBuf;

use thiserror::Error;

pub use commands::{run, run_command};
pub use config::{
    Cli, Command, EnvOverrides, FieldSource, FileConfig, Flags, Provenance, ResolvedConfig, ENV_OUT_DIR, ENV_THREADS,
};
pub use io::{
    format_f64, read_records, write_clustering, write_csv, write_histogram, write_json, write_qq, write_records,
    write_trajectory, RECORD_HEADER,
};
pub use manifest::{sha256_file, ExperimentManifest, OutputFile};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config field `{field}`: {reason}")]
    Config { field: &'static str, reason: String },
    #[error("cannot read config {path}: {source}")]
    ConfigRead { path: PathBuf, source: std::io::Error },
    #[error("cannot parse config {path}: {source}")]
    ConfigParse { path: PathBuf, source: toml::de::Error },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}, row {row}: {reason}")]
    Malformed { path: PathBuf, row: usize, reason: String },
    #[error("cannot configure worker threads: {0}")]
    Threads(String),
    #[error("{failed} of {total} verification criteria failed")]
    VerifyFailed { failed: usize, total: usize },
    #[error(transparent)]
    Stats(#[from] crate::stats::StatsError),
    #[error(transparent)]
    Roots(#[from] crate::roots::RootError),
    #[error(transparent)]
    Energy(#[from] crate::energy::EnergyError),
    #[error(transparent)]
    KacRice(#[from] crate::kacrice::KacRiceError),
    #[error(transparent)]
    Descent(#[from] crate::minimizer::DescentError),
    #[error(transparent)]
    Quadrature(#[from] crate::quadrature::QuadError),
}
