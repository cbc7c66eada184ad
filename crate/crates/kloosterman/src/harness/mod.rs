//! Sweep and verification harness: configuration, bound sweeps, exact
//! identity checks, polytope reports, and the command-line front end.

pub mod checks;
pub mod cli;
pub mod config;
pub mod report;
pub mod sweep;
