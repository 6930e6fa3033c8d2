//! Experiment runner: config parsing, raw sample files, reports and the
//! per-case verification suite behind the `sobosvd` binary.

pub mod config;
mod io_util;
pub mod report;
pub mod runner;
pub mod samples;
pub mod verify;

pub use io_util::write_atomic;
