//! Configuration, file formats and subcommands of the `choreo` tool.

// `!(x < y)` is used deliberately so that NaN fails every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;

pub use args::{Cli, Command, Common};
pub use commands::{eval, run, run_integrate, run_minimize, verify};
pub use config::RunConfig;
pub use error::{CliError, CliResult};
