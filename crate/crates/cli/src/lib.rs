//! Command-line harness: configuration, CSV metrics, and the subcommand
//! implementations. The binary in `main.rs` only parses arguments and
//! dispatches here.

pub mod commands;
pub mod config;
pub mod metrics;
