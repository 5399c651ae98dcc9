//! Command-line plumbing for the propensity goodness-of-fit tests: run
//! configuration, CSV ingestion with explicit missing-outcome handling, and
//! versioned JSON/text reports.
//!
//! The statistical machinery lives in the `nmar-gof` library crate; this
//! crate only moves data in and results out. All randomness a command uses
//! flows from the single seed in [`config::RunConfig`] through the library's
//! named child streams, so rerunning a command with the same inputs writes
//! byte-identical files.

pub mod config;
pub mod csv_io;
pub mod report;

pub use config::{Method, RunConfig};
pub use csv_io::{load_csv, write_csv};
pub use report::{FitRow, JsonReport, SCHEMA_VERSION};
