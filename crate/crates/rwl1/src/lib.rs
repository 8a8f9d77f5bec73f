//! File formats, experiment harness and command-line front end for
//! [`rwl1_core`].
//!
//! Instances are stored as JSON, sweep and trace results as CSV, and
//! experiment configurations as TOML.

pub mod bench;
pub mod error;
pub mod io;

pub use bench::{emit_csv, run_noisy_improvement, run_recovery_sweep, SweepConfig};
pub use error::{Error, Result};
