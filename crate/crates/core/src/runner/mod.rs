//! Checking, executing and scoring candidate solutions.

mod exec;
mod score;
mod static_check;

pub use exec::{python_available, run_all, RunLimits, Runner, RunnerError, ShimRecord, SHIM_SOURCE};
pub use score::{
    aggregate, config_digest, table1_csv, table1_text, BenchmarkReport, LoadFailure, ProblemReport, RunMeta,
    ScoreError, TestOutcome,
};
pub use static_check::{python_compile, scan_python, static_check, static_check_with, DiagKind, ParseDiagnostic};
