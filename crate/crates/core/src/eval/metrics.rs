use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::annotate::Label;
use crate::corpus::ReportKey;
use crate::triage::PromptStrategy;

/// Counts with GenuineBug as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn add(&mut self, predicted: Label, truth: Label) {
        match (predicted, truth) {
            (Label::GenuineBug, Label::GenuineBug) => self.tp += 1,
            (Label::GenuineBug, Label::FalsePositive) => self.fp += 1,
            (Label::FalsePositive, Label::GenuineBug) => self.fn_ += 1,
            (Label::FalsePositive, Label::FalsePositive) => self.tn += 1,
        }
    }

    pub fn n(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn merge(&self, other: &ConfusionMatrix) -> ConfusionMatrix {
        ConfusionMatrix {
            tp: self.tp + other.tp,
            fp: self.fp + other.fp,
            fn_: self.fn_ + other.fn_,
            tn: self.tn + other.tn,
        }
    }

    /// Metrics from the counts. A zero denominator yields 0 and sets the matching flag.
    pub fn report(&self) -> MetricsReport {
        let ratio = |num: u64, den: u64| if den == 0 { (0.0, true) } else { (num as f64 / den as f64, false) };
        let (accuracy, _) = ratio(self.tp + self.tn, self.n());
        let (precision, precision_undefined) = ratio(self.tp, self.tp + self.fp);
        let (recall, recall_undefined) = ratio(self.tp, self.tp + self.fn_);
        let f1_undefined = precision + recall == 0.0;
        let f1 = if f1_undefined { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        MetricsReport {
            accuracy,
            precision,
            recall,
            f1,
            n: self.n(),
            confusion: *self,
            precision_undefined,
            recall_undefined,
            f1_undefined,
            strategy: None,
            split_id: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub n: u64,
    pub confusion: ConfusionMatrix,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub f1_undefined: bool,
    pub strategy: Option<PromptStrategy>,
    pub split_id: Option<String>,
}

impl MetricsReport {
    pub fn tagged(mut self, strategy: Option<PromptStrategy>, split_id: Option<&str>) -> Self {
        self.strategy = strategy;
        self.split_id = split_id.map(str::to_string);
        self
    }
}

pub fn compute_metrics(
    predictions: &BTreeMap<ReportKey, Label>,
    truth: &BTreeMap<ReportKey, Label>,
) -> Result<MetricsReport, EvalError> {
    if predictions.is_empty() && truth.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    if let Some(key) = predictions.keys().find(|k| !truth.contains_key(*k)) {
        return Err(EvalError::KeyMismatch(key.clone()));
    }
    if let Some(key) = truth.keys().find(|k| !predictions.contains_key(*k)) {
        return Err(EvalError::KeyMismatch(key.clone()));
    }
    let mut cm = ConfusionMatrix::default();
    for (key, predicted) in predictions {
        cm.add(*predicted, truth[key]);
    }
    Ok(cm.report())
}

/// Unweighted mean of each metric across reports, e.g. folds.
pub fn macro_average(reports: &[MetricsReport]) -> Result<MetricsReport, EvalError> {
    if reports.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let k = reports.len() as f64;
    let mean = |f: fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / k;
    let confusion = reports.iter().fold(ConfusionMatrix::default(), |acc, r| acc.merge(&r.confusion));
    Ok(MetricsReport {
        accuracy: mean(|r| r.accuracy),
        precision: mean(|r| r.precision),
        recall: mean(|r| r.recall),
        f1: mean(|r| r.f1),
        n: confusion.n(),
        confusion,
        precision_undefined: reports.iter().any(|r| r.precision_undefined),
        recall_undefined: reports.iter().any(|r| r.recall_undefined),
        f1_undefined: reports.iter().any(|r| r.f1_undefined),
        strategy: reports[0].strategy,
        split_id: None,
    })
}

/// Metrics of the summed confusion matrices.
pub fn pooled(reports: &[MetricsReport]) -> Result<MetricsReport, EvalError> {
    if reports.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let confusion = reports.iter().fold(ConfusionMatrix::default(), |acc, r| acc.merge(&r.confusion));
    Ok(confusion.report().tagged(reports[0].strategy, None))
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use super::*;
    use crate::corpus::Source;

    fn maps(pairs: &[(Label, Label)]) -> (BTreeMap<ReportKey, Label>, BTreeMap<ReportKey, Label>) {
        let key = |i: usize| ReportKey::new(Source::Bugzilla, i.to_string());
        (
            pairs.iter().enumerate().map(|(i, p)| (key(i), p.0)).collect(),
            pairs.iter().enumerate().map(|(i, p)| (key(i), p.1)).collect(),
        )
    }

    #[test]
    fn hand_computed_matrix() {
        let r = ConfusionMatrix { tp: 8, fp: 2, fn_: 1, tn: 9 }.report();
        assert_abs_diff_eq!(r.accuracy, 0.85, epsilon = 1e-12);
        assert_abs_diff_eq!(r.precision, 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(r.recall, 8.0 / 9.0, epsilon = 1e-12);
        // 2 * 0.8 * (8/9) / (0.8 + 8/9) = 16/19
        assert_abs_diff_eq!(r.f1, 16.0 / 19.0, epsilon = 1e-12);
    }

    #[test]
    fn perfect_predictions() {
        let (p, t) = maps(&[(Label::GenuineBug, Label::GenuineBug), (Label::FalsePositive, Label::FalsePositive)]);
        let r = compute_metrics(&p, &t).unwrap();
        assert_eq!((r.accuracy, r.precision, r.recall, r.f1), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn degenerate_denominators_are_flagged() {
        let r = ConfusionMatrix { tp: 0, fp: 0, fn_: 0, tn: 4 }.report();
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
        assert!(r.precision_undefined && r.recall_undefined && r.f1_undefined);
        let r = ConfusionMatrix { tp: 0, fp: 3, fn_: 0, tn: 1 }.report();
        assert_eq!(r.precision, 0.0);
        assert!(!r.precision_undefined);
    }

    #[test]
    fn key_errors() {
        let (p, mut t) = maps(&[(Label::GenuineBug, Label::GenuineBug)]);
        t.insert(ReportKey::new(Source::Syzkaller, "x"), Label::GenuineBug);
        assert!(matches!(compute_metrics(&p, &t), Err(EvalError::KeyMismatch(_))));
        assert_eq!(compute_metrics(&BTreeMap::new(), &BTreeMap::new()).unwrap_err(), EvalError::EmptyInput);
    }

    #[test]
    fn fold_aggregation() {
        let a = ConfusionMatrix { tp: 1, fp: 0, fn_: 0, tn: 1 }.report();
        let b = ConfusionMatrix { tp: 0, fp: 1, fn_: 1, tn: 0 }.report();
        assert_eq!(macro_average(&[a.clone(), b.clone()]).unwrap().accuracy, 0.5);
        let p = pooled(&[a, b]).unwrap();
        assert_eq!(p.confusion, ConfusionMatrix { tp: 1, fp: 1, fn_: 1, tn: 1 });
        assert_eq!(p.precision, 0.5);
    }

    fn label() -> impl Strategy<Value = Label> {
        prop_oneof![Just(Label::GenuineBug), Just(Label::FalsePositive)]
    }

    proptest! {
        #[test]
        fn swap_exchanges_precision_and_recall(pairs in prop::collection::vec((label(), label()), 1..60)) {
            let (p, t) = maps(&pairs);
            let forward = compute_metrics(&p, &t).unwrap();
            let backward = compute_metrics(&t, &p).unwrap();
            prop_assert_eq!(forward.accuracy, backward.accuracy);
            prop_assert_eq!(forward.precision, backward.recall);
            prop_assert_eq!(forward.recall, backward.precision);
        }

        #[test]
        fn order_does_not_matter(pairs in prop::collection::vec((label(), label()), 1..60), rot in 0usize..60) {
            let mut rotated = pairs.clone();
            let len = rotated.len();
            rotated.rotate_left(rot % len);
            let mut a = ConfusionMatrix::default();
            let mut b = ConfusionMatrix::default();
            for (x, y) in &pairs { a.add(*x, *y); }
            for (x, y) in &rotated { b.add(*x, *y); }
            prop_assert_eq!(a.report(), b.report());
        }

        #[test]
        fn extremes(truth in prop::collection::vec(label(), 1..40)) {
            let pairs: Vec<_> = truth.iter().map(|t| (Label::GenuineBug, *t)).collect();
            let (p, t) = maps(&pairs);
            let r = compute_metrics(&p, &t).unwrap();
            if truth.contains(&Label::GenuineBug) {
                prop_assert_eq!(r.recall, 1.0);
            } else {
                prop_assert_eq!(r.precision, 0.0);
            }
        }
    }
}
