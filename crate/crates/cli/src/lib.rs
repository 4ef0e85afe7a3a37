//! Command-line front end: scenario files, sweeps, CSV output and the
//! reproduction targets.

pub mod config;
pub mod error;
pub mod experiment;
pub mod reproduce;
pub mod table;

pub use config::{Experiment, Overrides};
pub use error::CliError;
pub use reproduce::Target;
