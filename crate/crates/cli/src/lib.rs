//! Command-line front end: strict configs, cached products and report
//! emission for `guidespec-core`.

pub mod cache;
pub mod commands;
pub mod config;
pub mod svg;

pub use commands::{run, Command, RunError, RunOptions, Summary};
