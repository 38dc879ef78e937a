//! Command-line front end: configuration, experiment plans and reports.

pub mod config;
pub mod experiments;
pub mod input;
pub mod report;
