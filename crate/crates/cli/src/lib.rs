//! Experiment runner: JSON configs in, reproducible reports out.

pub mod config;
pub mod registry;
pub mod runner;

pub use config::{CheckSpec, ExperimentConfig};
pub use runner::{execute, run_file, Outcome, RunOptions};

/// Exit status for a finished run: 0 when every entry passes, 2 otherwise.
pub fn exit_code(report: &mclt_core::convtest::ConvergenceReport) -> i32 {
    if report.all_pass() {
        0
    } else {
        2
    }
}
