//! Runs, evaluation, copy diagnostics, reports and the command line.

pub mod cli;
mod copy_rate;
mod evaluate;
pub mod io;
mod report;
mod run;

pub use copy_rate::{char_similarity, copy_rate, normalize_for_copy, CopyRate, CopyRateError, NEAR_COPY_THRESHOLD};
pub use evaluate::{evaluate_or_mark_failed, evaluate_run, EvaluatedRun, EvaluationError, ReportRow, RowMetrics};
pub use report::{display3, render_report, Column, EvaluationReport, ReportError, ReportFormat};
pub use run::{manifest_path, RunError, RunManifest, SystemRun};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Seconds since the epoch, or `SOURCE_DATE_EPOCH` when set so that
/// manifests can be reproduced byte for byte.
pub fn now_unix() -> u64 {
    if let Some(fixed) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.trim().parse().ok()) {
        return fixed;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
