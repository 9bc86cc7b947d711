//! Two-stage labeling: multi-judge pre-annotation, manual verdicts and agreement.

mod kappa;
mod log;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{BugReport, ReportKey};
use crate::taxonomy::{RootCauseCategory, RootCauseSubcategory};
use crate::triage::{self, ModelClient, PromptStrategy, TriageContext};

pub use kappa::{cohen_kappa, AgreementResult};
pub use log::{read_jsonl, write_jsonl};

#[derive(Debug, Error, PartialEq)]
pub enum AnnotateError {
    #[error("at least two judges are required, got {0}")]
    TooFewJudges(usize),
    #[error("judge {judge_id} failed: {reason}")]
    JudgeFailure { judge_id: String, reason: String },
    #[error("label sequences differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no labels to compare")]
    EmptyInput,
    #[error("report {0} has no manual verdict")]
    MissingManualVerdict(ReportKey),
    #[error("excluded verdict needs a reason")]
    EmptyExclusionReason,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for AnnotateError {
    fn from(err: std::io::Error) -> Self {
        AnnotateError::Io(err.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    GenuineBug,
    FalsePositive,
}

impl Label {
    /// Marker token used by the response protocol.
    pub fn marker(self) -> &'static str {
        match self {
            Label::GenuineBug => "GENUINE_BUG",
            Label::FalsePositive => "FALSE_POSITIVE",
        }
    }

    pub fn other(self) -> Label {
        match self {
            Label::GenuineBug => Label::FalsePositive,
            Label::FalsePositive => Label::GenuineBug,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.marker())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace(['-', ' '], "_").as_str() {
            "genuine_bug" | "genuine" => Ok(Label::GenuineBug),
            "false_positive" | "fp" => Ok(Label::FalsePositive),
            other => Err(format!("unknown label `{other}`")),
        }
    }
}

/// A final or manual outcome: a label, or exclusion from the dataset.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    GenuineBug,
    FalsePositive,
    Excluded(String),
}

impl Decision {
    pub fn label(&self) -> Option<Label> {
        match self {
            Decision::GenuineBug => Some(Label::GenuineBug),
            Decision::FalsePositive => Some(Label::FalsePositive),
            Decision::Excluded(_) => None,
        }
    }
}

impl From<Label> for Decision {
    fn from(label: Label) -> Self {
        match label {
            Label::GenuineBug => Decision::GenuineBug,
            Label::FalsePositive => Decision::FalsePositive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Consensus {
    FalsePositiveCandidate,
    GenuineCandidate,
    NeedsManual,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeLabel {
    pub judge_id: String,
    pub label: Label,
    pub justification: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreLabel {
    pub report_id: ReportKey,
    pub judge_labels: Vec<JudgeLabel>,
    pub consensus: Consensus,
}

/// Unanimous labels become candidates; any disagreement needs a human.
pub fn consensus_of(labels: &[Label]) -> Consensus {
    match labels.split_first() {
        Some((first, rest)) if rest.iter().all(|l| l == first) => match first {
            Label::FalsePositive => Consensus::FalsePositiveCandidate,
            Label::GenuineBug => Consensus::GenuineCandidate,
        },
        _ => Consensus::NeedsManual,
    }
}

/// A named language-model judge.
pub struct Judge<'a> {
    pub id: String,
    pub client: &'a dyn ModelClient,
}

/// Asks every judge, concurrently, for a label and justification using the
/// basic zero-shot prompt. Any failing judge fails the whole report.
pub fn preannotate(report: &BugReport, judges: &[Judge<'_>]) -> Result<PreLabel, AnnotateError> {
    if judges.len() < 2 {
        return Err(AnnotateError::TooFewJudges(judges.len()));
    }
    let bundle = triage::build_prompt(PromptStrategy::BasicZeroShot, report, &TriageContext::default())
        .map_err(|e| AnnotateError::JudgeFailure { judge_id: String::new(), reason: e.to_string() })?;
    let outcomes: Vec<Result<JudgeLabel, AnnotateError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = judges
            .iter()
            .map(|judge| {
                let bundle = &bundle;
                scope.spawn(move || {
                    let failure = |reason: String| AnnotateError::JudgeFailure { judge_id: judge.id.clone(), reason };
                    let raw = judge.client.send(bundle).map_err(|e| failure(e.to_string()))?;
                    let (label, justification) = triage::parse_verdict(&raw).map_err(|e| failure(e.to_string()))?;
                    Ok(JudgeLabel { judge_id: judge.id.clone(), label, justification })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("judge thread panicked")).collect()
    });
    let judge_labels = outcomes.into_iter().collect::<Result<Vec<_>, _>>()?;
    let labels: Vec<Label> = judge_labels.iter().map(|j| j.label).collect();
    Ok(PreLabel { report_id: report.key(), consensus: consensus_of(&labels), judge_labels })
}

/// Final dataset entry: one line of a labels file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub report_id: ReportKey,
    pub label: Decision,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root_cause: Option<RootCauseCategory>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subcategory: Option<RootCauseSubcategory>,
}

/// One manual annotation, as stored in the verdict log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManualVerdict {
    pub report_id: ReportKey,
    pub annotator_id: String,
    pub label: Decision,
    pub rationale: String,
    pub round: u32,
    pub timestamp: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root_cause: Option<RootCauseSubcategory>,
}

impl ManualVerdict {
    pub fn validate(&self) -> Result<(), AnnotateError> {
        match &self.label {
            Decision::Excluded(reason) if reason.trim().is_empty() => Err(AnnotateError::EmptyExclusionReason),
            _ if self.round == 0 => Err(AnnotateError::Parse { line: 0, message: "round must be >= 1".into() }),
            _ => Ok(()),
        }
    }
}

fn settle(verdicts: &[&ManualVerdict]) -> Decision {
    let top_round = verdicts.iter().map(|v| v.round).max().expect("non-empty");
    let mut latest = verdicts.iter().filter(|v| v.round == top_round).map(|v| &v.label);
    let first = latest.next().expect("non-empty").clone();
    if latest.all(|l| *l == first) {
        first
    } else {
        Decision::Excluded("unresolved disagreement".into())
    }
}

/// Final label per report. Manual verdicts always override pre-labels; every
/// pre-labelled report must have been checked by hand. Within a report the
/// highest round decides, and a split within that round excludes the report.
pub fn merge_verdicts(
    prelabels: &[PreLabel],
    manual: &[ManualVerdict],
) -> Result<BTreeMap<ReportKey, Decision>, AnnotateError> {
    let mut by_report: BTreeMap<&ReportKey, Vec<&ManualVerdict>> = BTreeMap::new();
    for verdict in manual {
        verdict.validate()?;
        by_report.entry(&verdict.report_id).or_default().push(verdict);
    }
    if let Some(missing) = prelabels.iter().find(|p| !by_report.contains_key(&p.report_id)) {
        return Err(AnnotateError::MissingManualVerdict(missing.report_id.clone()));
    }
    Ok(by_report.into_iter().map(|(key, verdicts)| (key.clone(), settle(&verdicts))).collect())
}

/// [`merge_verdicts`] as label records. A false positive takes the root-cause
/// subcategory given in its deciding round when every annotator that named one agrees.
pub fn final_labels(prelabels: &[PreLabel], manual: &[ManualVerdict]) -> Result<Vec<LabelRecord>, AnnotateError> {
    let merged = merge_verdicts(prelabels, manual)?;
    Ok(merged
        .into_iter()
        .map(|(key, label)| {
            let subcategory = if label == Decision::FalsePositive {
                let top = manual.iter().filter(|v| v.report_id == key).map(|v| v.round).max();
                let mut named =
                    manual.iter().filter(|v| v.report_id == key && Some(v.round) == top).filter_map(|v| v.root_cause);
                let first = named.next();
                first.filter(|f| named.all(|n| n == *f))
            } else {
                None
            };
            LabelRecord { report_id: key, label, root_cause: subcategory.map(|s| s.category()), subcategory }
        })
        .collect())
}
