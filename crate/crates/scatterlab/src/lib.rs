//! File formats, the Monte Carlo efficiency harness and the command-line front
//! end built on `scatterlab-core`.

pub mod cli;
pub mod error;
pub mod io;
pub mod manifest;
pub mod simharness;
pub mod svg;

pub use error::CliError;
