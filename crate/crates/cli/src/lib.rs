//! Command-line pipeline for landmark2vec: `simulate`, `train`, `infer`,
//! `evaluate` and `plot`, driven by flat `key = value` recipe files.

pub mod commands;
pub mod config;
pub mod error;
pub mod plot;

pub use config::RunConfig;
pub use error::CliError;
