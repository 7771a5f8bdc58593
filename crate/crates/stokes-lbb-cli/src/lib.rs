//! Command-line companion: mesh IO, scenario runner and reports.

pub mod analyze;
pub mod config;
pub mod fixtures;
pub mod io;
pub mod report;
pub mod scenario;
