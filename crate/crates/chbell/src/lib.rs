//! Command-line front end for `chbell-core`: configuration files, JSON and
//! CSV output, and thread-parallel drivers for the heavier computations.

pub mod cli;
pub mod config;
pub mod error;
pub mod mixture;
pub mod output;
pub mod parallel;

pub use cli::run;
pub use config::RunConfig;
pub use error::CliError;
