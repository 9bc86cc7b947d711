use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::annotate::Label;
use crate::corpus::ReportKey;
use crate::stats::EffortMetrics;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavingsEstimate {
    pub reports: usize,
    pub mean_close_days: f64,
    pub total_hours: f64,
    pub mean_comments: f64,
    /// Mean recorded classification latency, if any latencies were given.
    pub per_report_latency_ms: Option<f64>,
}

/// Reports predicted and labeled FalsePositive, in key order.
pub fn correctly_flagged(
    predictions: &BTreeMap<ReportKey, Label>,
    truth: &BTreeMap<ReportKey, Label>,
) -> Vec<ReportKey> {
    predictions
        .iter()
        .filter(|(k, p)| **p == Label::FalsePositive && truth.get(*k) == Some(&Label::FalsePositive))
        .map(|(k, _)| k.clone())
        .collect()
}

/// Closure effort that early flagging of these reports could have saved.
pub fn estimate_savings(
    flagged: &[ReportKey],
    effort: &BTreeMap<ReportKey, EffortMetrics>,
    latencies_ms: &[u64],
) -> Result<SavingsEstimate, EvalError> {
    if flagged.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let metrics = flagged
        .iter()
        .map(|k| effort.get(k).ok_or_else(|| EvalError::MissingEffort(k.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    let n = metrics.len() as f64;
    let total_hours: f64 = metrics.iter().map(|m| m.time_to_close_hours).sum();
    let per_report_latency_ms = (!latencies_ms.is_empty())
        .then(|| latencies_ms.iter().map(|&l| l as f64).sum::<f64>() / latencies_ms.len() as f64);
    Ok(SavingsEstimate {
        reports: metrics.len(),
        mean_close_days: total_hours / n / 24.0,
        total_hours,
        mean_comments: metrics.iter().map(|m| m.comments as f64).sum::<f64>() / n,
        per_report_latency_ms,
    })
}
