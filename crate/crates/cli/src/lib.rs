//! Command-line front end: instance files, layered settings, run reports and
//! the pipelines behind each subcommand.

pub mod config;
pub mod instance_file;
pub mod pipeline;
pub mod report;
