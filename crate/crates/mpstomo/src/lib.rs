//! File formats, experiments and the command-line interface on top of
//! `mpstomo-core`.

pub mod cli;
mod error;
pub mod experiment;
pub mod formats;

pub use error::CliError;
