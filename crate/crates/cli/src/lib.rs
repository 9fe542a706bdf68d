//! Batch experiments on top of `qdrl-core`: configuration files, replicated
//! runs, metric logs, distillation reports and archive plots.

pub mod aggregate;
pub mod config;
mod error;
pub mod experiment;
pub mod plot;

pub use error::CliError;
