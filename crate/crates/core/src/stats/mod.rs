//! Correlation analysis, bootstrap uncertainty and report export.

mod bootstrap;
mod correlation;
mod report;

pub use bootstrap::{binomial_std, bootstrap_std, DEFAULT_RESAMPLES};
pub use correlation::{
    correlation_matrix, pearson, ranks, spearman, CorrelationMatrix, Method, ModelRow,
};
pub use report::{
    export_report, MetricCell, ReportBundle, ReportInput, SweepCurve, SweepPoint, TaskCell,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {need} values, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("row {model_id} has columns {found:?}, expected {expected:?}")]
    ColumnMismatch {
        model_id: String,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("model ids disagree: {0}")]
    IdMismatch(String),
    #[error("io: {0}")]
    Io(String),
}
