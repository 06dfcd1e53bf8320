//! Library side of the `eqcnn` command-line tool.

pub mod commands;
mod error;
pub mod experiment;

pub use error::{CliError, CliResult};
