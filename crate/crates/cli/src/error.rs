use std::path::Path;

use tempogran::calendar::CalendarError;
use tempogran::cyclic::CyclicError;
use tempogran::distill::DistillError;
use tempogran::harmony::HarmonyError;
use tempogran::table::TableError;
use thiserror::Error;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_DATA: i32 = 4;
pub const EXIT_COMPUTATION: i32 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Calendar(#[from] CalendarError),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Cyclic(#[from] CyclicError),
    #[error(transparent)]
    Harmony(#[from] HarmonyError),
    #[error(transparent)]
    Distill(#[from] DistillError),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "invalid-config",
            CliError::Io { .. } => "io",
            CliError::Calendar(e) => e.code(),
            CliError::Table(e) => e.code(),
            CliError::Cyclic(e) => e.code(),
            CliError::Harmony(e) => e.code(),
            CliError::Distill(e) => e.code(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Config(_) | CliError::Calendar(_) => EXIT_VALIDATION,
            CliError::Io { .. } => EXIT_DATA,
            CliError::Table(e) => table_exit(e),
            CliError::Cyclic(_) => EXIT_COMPUTATION,
            CliError::Harmony(HarmonyError::Table(e)) => table_exit(e),
            CliError::Harmony(HarmonyError::Calendar(_)) => EXIT_VALIDATION,
            CliError::Harmony(_) => EXIT_COMPUTATION,
            CliError::Distill(DistillError::UnknownMeasurement(_) | DistillError::MissingColumn(_)) => EXIT_DATA,
            CliError::Distill(DistillError::EmptyProbabilities | DistillError::InvalidProbabilities(_)) => {
                EXIT_VALIDATION
            }
            CliError::Distill(DistillError::Io(_)) => EXIT_DATA,
            CliError::Distill(_) => EXIT_COMPUTATION,
        }
    }

    /// One-line JSON report for stderr.
    pub fn json_line(&self) -> String {
        serde_json::json!({
            "error": { "code": self.code(), "exit": self.exit_code(), "message": self.to_string() }
        })
        .to_string()
    }
}

fn table_exit(e: &TableError) -> i32 {
    match e {
        TableError::Calendar(_) | TableError::UnknownGranularity(_) => EXIT_VALIDATION,
        TableError::Cyclic(_) | TableError::ColumnConflict(_) => EXIT_COMPUTATION,
        _ => EXIT_DATA,
    }
}
