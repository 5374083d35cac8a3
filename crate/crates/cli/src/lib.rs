//! Command-line harness for the strategic-sensors library: parses flat
//! `key = value` configs, runs the requested experiment, and emits CSV.
//!
//! Exit codes: `0` on success, `2` for invalid configs or I/O problems,
//! `3` when a certificate suite fails.

pub mod config;
pub mod experiments;

pub use config::{ConfigError, ExperimentConfig, ExperimentId};
pub use experiments::{execute_text, run, Overrides, Rendered};
