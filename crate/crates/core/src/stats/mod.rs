//! Effort metrics, nonparametric tests and component/root-cause analytics.

mod chisq;
mod cliff;
mod distribution;
mod effort;
mod rank;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use chisq::chi_square_independence;
pub use cliff::{cliffs_delta, Magnitude};
pub use distribution::{
    component_distribution, stagewise_proportions, ComponentDistribution, ComponentShare, FalsePositiveRecord,
    ProportionMatrix,
};
pub use effort::{compute_effort, EffortMetrics};
pub use rank::{mann_whitney_u, mann_whitney_u_with, midranks, wilcoxon_signed_rank, wilcoxon_signed_rank_with};

/// Largest combined sample size for which the exact null distribution is used.
pub const EXACT_LIMIT: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("sample is empty")]
    EmptySample,
    #[error("paired samples have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("all paired differences are zero")]
    AllZeroDifferences,
    #[error("sample contains a non-finite value")]
    NonFinite,
    #[error("degenerate contingency table: {0}")]
    DegenerateTable(String),
    #[error("comment predates open time in report {0}")]
    NegativeDuration(String),
    #[error("false-positive report {0} has no root cause")]
    MissingRootCause(String),
    #[error("exact distribution requested for tied observations")]
    TiesInExact,
    #[error("exact distribution requested for {0} observations (limit {EXACT_LIMIT})")]
    TooLargeForExact(usize),
}

/// Which null distribution produced the p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Normal,
    ChiSquare,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    /// U for Mann-Whitney (of the first sample), W+ for Wilcoxon, chi-square, or delta.
    pub statistic: f64,
    pub p_value: f64,
    pub effect: Option<f64>,
    pub magnitude: Option<Magnitude>,
    pub n_a: usize,
    pub n_b: usize,
    pub df: Option<usize>,
    pub method: Method,
}

pub(crate) fn check_finite(sample: &[f64]) -> Result<(), StatsError> {
    if sample.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

pub(crate) fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let mid = v.len() / 2;
    Some(if v.len().is_multiple_of(2) { (v[mid - 1] + v[mid]) / 2.0 } else { v[mid] })
}

/// Mean and median of a sample, used by the effort summary tables.
pub fn summarize(values: &[f64]) -> Option<(f64, f64)> {
    let med = median(values)?;
    Some((values.iter().sum::<f64>() / values.len() as f64, med))
}
