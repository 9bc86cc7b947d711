//! Prompt-based classification, the model-client contract and feature-based baselines.

mod baseline;
mod client;
mod features;
mod prompt;
mod verdict;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::Label;
use crate::concurrency::bounded_map;
use crate::corpus::{BugReport, ReportKey};
use crate::retrieval::{retrieve_balanced, Embedder, KnowledgeBase, RetrievalError};

pub use baseline::{knn_predict, train_logreg, LogRegParams, LogisticRegression, TrainingReport, DEFAULT_KNN_K};
pub use client::{
    sha256_hex, ClientError, FixedClient, MockClient, ModelClient, RecordedResponse, ReplayClient, MOCK_FP_KEYWORDS,
};
pub use features::{SparseVector, TfIdf};
pub use prompt::{
    build_prompt, build_prompt_with, default_exemplars, substitute, Exemplar, PromptBundle, PromptStrategy,
    TemplateSet, TriageContext, COT_HEADERS, REPORT_BEGIN, REPORT_END,
};
pub use verdict::{parse_verdict, render_marker, ParseFailure};

#[derive(Debug, Error, PartialEq)]
pub enum TriageError {
    #[error("{strategy} prompt needs {what}")]
    MissingContext { strategy: PromptStrategy, what: String },
    #[error("template: {0}")]
    Template(String),
    #[error("model client: {0}")]
    Client(#[from] ClientError),
    #[error("unparseable response: {0}")]
    Parse(#[from] ParseFailure),
    #[error("retrieval: {0}")]
    Retrieval(#[from] RetrievalError),
    #[error("no training texts")]
    EmptyCorpus,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("training data contains a single class")]
    SingleClassTraining,
    #[error("k = {k} is outside 1..={n}")]
    InvalidK { k: usize, n: usize },
    #[error("features and labels differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub label: Label,
    pub explanation: String,
    pub raw_response: String,
    pub strategy: PromptStrategy,
    pub model_id: String,
    pub latency_ms: u64,
}

/// One line of the verdict log. `label` is absent when the response could not be parsed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub report_id: ReportKey,
    pub strategy: PromptStrategy,
    pub model_id: String,
    pub label: Option<Label>,
    pub explanation: String,
    pub raw_response_digest: String,
    pub latency_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parse_error: Option<String>,
}

/// Retries transport failures only, sleeping `base_delay * 2^(attempt - 1)` in between.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_attempts: 3, base_delay_ms: 500 }
    }
}

fn send_with_retry(
    client: &dyn ModelClient,
    bundle: &PromptBundle,
    policy: &RetryPolicy,
) -> Result<(String, u64), ClientError> {
    // Deterministic clients report zero latency so their logs are reproducible.
    let started = (!client.is_deterministic()).then(Instant::now);
    let mut attempt = 1;
    loop {
        match client.send(bundle) {
            Ok(raw) => return Ok((raw, started.map_or(0, |t| t.elapsed().as_millis() as u64))),
            Err(ClientError::Transport(_)) if attempt < policy.max_attempts => {
                std::thread::sleep(Duration::from_millis(policy.base_delay_ms << (attempt - 1)));
                attempt += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Builds the prompt, sends it and parses the reply.
pub fn classify(
    report: &BugReport,
    strategy: PromptStrategy,
    client: &dyn ModelClient,
    context: &TriageContext,
) -> Result<Verdict, TriageError> {
    classify_with(&TemplateSet::shipped(), &RetryPolicy::default(), report, strategy, client, context)
}

pub fn classify_with(
    templates: &TemplateSet,
    retry: &RetryPolicy,
    report: &BugReport,
    strategy: PromptStrategy,
    client: &dyn ModelClient,
    context: &TriageContext,
) -> Result<Verdict, TriageError> {
    let bundle = build_prompt_with(templates, strategy, report, context)?;
    let (raw, latency_ms) = send_with_retry(client, &bundle, retry)?;
    let (label, explanation) = parse_verdict(&raw)?;
    Ok(Verdict { label, explanation, raw_response: raw, strategy, model_id: client.model_id().to_string(), latency_ms })
}

/// Knowledge base and embedder used to assemble RAG context.
#[derive(Clone, Copy)]
pub struct RetrievalSetup<'a> {
    pub kb: &'a KnowledgeBase,
    pub embedder: &'a dyn Embedder,
    pub k_per_class: usize,
    pub char_budget: usize,
}

/// Everything needed to classify reports with one strategy and one client.
pub struct TriagePipeline<'a> {
    pub strategy: PromptStrategy,
    pub client: &'a dyn ModelClient,
    pub templates: TemplateSet,
    pub retry: RetryPolicy,
    pub guidelines: Option<String>,
    pub exemplars: Vec<Exemplar>,
    pub retrieval: Option<RetrievalSetup<'a>>,
}

impl<'a> TriagePipeline<'a> {
    pub fn new(strategy: PromptStrategy, client: &'a dyn ModelClient) -> Self {
        Self {
            strategy,
            client,
            templates: TemplateSet::shipped(),
            retry: RetryPolicy::default(),
            guidelines: None,
            exemplars: default_exemplars(),
            retrieval: None,
        }
    }

    pub fn context_for(&self, report: &BugReport) -> Result<TriageContext, TriageError> {
        let retrieved = match (self.strategy, self.retrieval) {
            (PromptStrategy::Rag, None) => {
                return Err(TriageError::MissingContext { strategy: self.strategy, what: "knowledge base".into() })
            }
            (PromptStrategy::Rag, Some(setup)) => {
                let result = retrieve_balanced(report, setup.kb, setup.k_per_class, setup.embedder, setup.char_budget)?;
                Some(setup.kb.cases(&result))
            }
            _ => None,
        };
        Ok(TriageContext { guidelines: self.guidelines.clone(), exemplars: Some(self.exemplars.clone()), retrieved })
    }

    pub fn classify(&self, report: &BugReport) -> Result<Verdict, TriageError> {
        let context = self.context_for(report)?;
        classify_with(&self.templates, &self.retry, report, self.strategy, self.client, &context)
    }

    /// Classifies and produces a log record. An unparseable response is still
    /// recorded, with no label; prompt, retrieval and client failures are errors.
    pub fn record(&self, report: &BugReport, split_id: Option<&str>) -> Result<VerdictRecord, TriageError> {
        let context = self.context_for(report)?;
        let bundle = build_prompt_with(&self.templates, self.strategy, report, &context)?;
        let (raw, latency_ms) = send_with_retry(self.client, &bundle, &self.retry)?;
        let (label, explanation, parse_error) = match parse_verdict(&raw) {
            Ok((label, explanation)) => (Some(label), explanation, None),
            Err(e) => (None, String::new(), Some(e.to_string())),
        };
        Ok(VerdictRecord {
            report_id: report.key(),
            strategy: self.strategy,
            model_id: self.client.model_id().to_string(),
            label,
            explanation,
            raw_response_digest: sha256_hex(&raw),
            latency_ms,
            split_id: split_id.map(str::to_string),
            parse_error,
        })
    }

    /// [`Self::record`] over many reports with at most `in_flight` concurrent calls, in input order.
    pub fn record_batch(
        &self,
        reports: &[&BugReport],
        split_id: Option<&str>,
        in_flight: usize,
    ) -> Vec<Result<VerdictRecord, TriageError>> {
        bounded_map(reports, in_flight, |r| self.record(r, split_id))
    }
}
