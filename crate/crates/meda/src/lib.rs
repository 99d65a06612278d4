//! File formats, experiment config and subcommands for the `meda` binary.
//!
//! The numerics live in [`meda_core`]; this crate adds JSON/CSV IO, config
//! validation with field-level messages, and the command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;

pub use config::ExperimentConfig;
pub use error::{MedaError, Result};
