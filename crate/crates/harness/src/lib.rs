//! Command-line harness around `mixfree-core`: configuration, the
//! calibration pipeline, versioned JSON reports and plot-ready CSV.

pub mod calibration;
pub mod cli;
pub mod config;
pub mod plot;
pub mod report;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] mixfree_core::Error),
    #[error("configuration: {0}")]
    Config(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("report kind mismatch: expected {expected}, found {found}")]
    KindMismatch { expected: String, found: String },
    #[error("{0}")]
    Domain(String),
}

impl HarnessError {
    /// 2 for budget and usage errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Core(e) if e.is_budget() => 2,
            HarnessError::Usage(_) => 2,
            _ => 1,
        }
    }
}
