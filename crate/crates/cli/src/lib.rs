//! Experiment runner for causal embeddings: split preparation, training,
//! evaluation, injection sweeps and policy simulations over flat config
//! files.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod files;
pub mod manifest;
pub mod model_file;

pub use config::RunConfig;
pub use error::CliError;
