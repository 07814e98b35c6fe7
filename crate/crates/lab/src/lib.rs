//! Std companion to `awdr-core`: report formats, run configuration,
//! golden test-vector replay and the `awdr` command-line front end.

pub mod cli;
pub mod config;
pub mod report;
pub mod vectors;

pub use cli::run;
