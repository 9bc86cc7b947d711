//! Classification metrics, split protocols and effort-savings estimates.

mod metrics;
mod savings;
mod split;
mod table;

use thiserror::Error;

use crate::corpus::ReportKey;

pub use metrics::{compute_metrics, macro_average, pooled, ConfusionMatrix, MetricsReport};
pub use savings::{correctly_flagged, estimate_savings, SavingsEstimate};
pub use split::{
    kfold_split, leak_split, temporal_split, Partition, SplitKind, SplitSpec, TimeSplit, DEFAULT_KFOLD_K,
    DEFAULT_LEAK_CUTOFF, DEFAULT_TEMPORAL_CUTOFF,
};
pub use table::{csv_escape, metrics_csv};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("prediction and truth keys differ: {0}")]
    KeyMismatch(ReportKey),
    #[error("nothing to evaluate")]
    EmptyInput,
    #[error("{n} items cannot fill {k} folds")]
    TooFewItems { n: usize, k: usize },
    #[error("k must be at least 2, got {0}")]
    InvalidK(usize),
    #[error("duplicate id {0}")]
    DuplicateId(ReportKey),
    #[error("no effort metrics for {0}")]
    MissingEffort(ReportKey),
}
