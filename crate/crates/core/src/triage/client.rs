use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::PromptBundle;
use crate::annotate::Label;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ClientError {
    /// Network or server failure; worth retrying.
    #[error("transport: {0}")]
    Transport(String),
    /// The endpoint answered but the reply was unusable.
    #[error("bad response: {0}")]
    BadResponse(String),
    /// Replay mode has no recording for this prompt.
    #[error("no recorded response for prompt {0}")]
    NotRecorded(String),
    #[error("client configuration: {0}")]
    Config(String),
}

/// A chat model at temperature 0.
pub trait ModelClient: Send + Sync {
    fn model_id(&self) -> &str;
    fn send(&self, prompt: &PromptBundle) -> Result<String, ClientError>;

    /// Whether identical prompts are guaranteed to give identical responses.
    fn is_deterministic(&self) -> bool {
        false
    }
}

/// Hex SHA-256 of arbitrary text.
pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Returns the same response for every prompt.
#[derive(Debug, Clone)]
pub struct FixedClient {
    id: String,
    response: String,
}

impl FixedClient {
    pub fn new(id: impl Into<String>, response: impl Into<String>) -> Self {
        Self { id: id.into(), response: response.into() }
    }
}

impl ModelClient for FixedClient {
    fn model_id(&self) -> &str {
        &self.id
    }

    fn send(&self, _prompt: &PromptBundle) -> Result<String, ClientError> {
        Ok(self.response.clone())
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

/// Phrases that make [`MockClient`] answer FALSE_POSITIVE, matched
/// case-insensitively against the report segment of the prompt only.
pub const MOCK_FP_KEYWORDS: [&str; 14] = [
    "works after replacing",
    "misconfigured",
    "misconfiguration",
    "resolved invalid",
    "not a kernel bug",
    "user error",
    "working as intended",
    "works as intended",
    "expected behavior",
    "expected behaviour",
    "firmware update fixed",
    "userspace bug",
    "bios update",
    "closed as invalid",
];

/// Deterministic rule-based stand-in for a model.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockClient;

impl MockClient {
    pub fn classify_text(report_text: &str) -> (Label, Option<&'static str>) {
        let lower = report_text.to_lowercase();
        match MOCK_FP_KEYWORDS.iter().find(|k| lower.contains(*k)) {
            Some(k) => (Label::FalsePositive, Some(k)),
            None => (Label::GenuineBug, None),
        }
    }
}

impl ModelClient for MockClient {
    fn model_id(&self) -> &str {
        "mock-rules-v1"
    }

    fn send(&self, prompt: &PromptBundle) -> Result<String, ClientError> {
        let (label, keyword) = Self::classify_text(prompt.report_segment());
        let explanation = match keyword {
            Some(k) => format!("The report text contains the phrase \"{k}\", which points away from a kernel defect."),
            None => "No phrase pointing away from a kernel defect was found in the report text.".to_string(),
        };
        Ok(format!("{explanation}\nLABEL: {}", label.marker()))
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

/// One recorded model exchange, keyed by the digest of the rendered prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordedResponse {
    pub prompt_digest: String,
    pub response: String,
}

/// Replays recorded responses; unknown prompts fail with [`ClientError::NotRecorded`].
#[derive(Debug, Clone)]
pub struct ReplayClient {
    id: String,
    responses: BTreeMap<String, String>,
}

impl ReplayClient {
    pub fn new(id: impl Into<String>, records: impl IntoIterator<Item = RecordedResponse>) -> Self {
        Self { id: id.into(), responses: records.into_iter().map(|r| (r.prompt_digest, r.response)).collect() }
    }

    pub fn from_jsonl(id: impl Into<String>, path: &Path) -> Result<Self, ClientError> {
        let file = std::fs::File::open(path).map_err(|e| ClientError::Config(format!("{}: {e}", path.display())))?;
        let records: Vec<RecordedResponse> =
            crate::annotate::read_jsonl(file).map_err(|e| ClientError::Config(e.to_string()))?;
        Ok(Self::new(id, records))
    }

    pub fn record(prompt: &PromptBundle, response: impl Into<String>) -> RecordedResponse {
        RecordedResponse { prompt_digest: sha256_hex(&prompt.render()), response: response.into() }
    }
}

impl ModelClient for ReplayClient {
    fn model_id(&self) -> &str {
        &self.id
    }

    fn send(&self, prompt: &PromptBundle) -> Result<String, ClientError> {
        let digest = sha256_hex(&prompt.render());
        self.responses.get(&digest).cloned().ok_or(ClientError::NotRecorded(digest))
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::*;
    use crate::triage::{build_prompt, default_exemplars, PromptStrategy, TriageContext};

    #[test]
    fn sha256_known_value() {
        assert_eq!(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn mock_reads_only_the_report_segment() {
        let mut r = bugzilla("1", "INVALID", "2022-01-01T00:00:00Z", vec![]);
        r.description = "Audio crackles.".into();
        // The few-shot exemplars mention a rebuilt library, but no keyword sits in the report itself.
        let ctx = TriageContext { exemplars: Some(default_exemplars()), ..Default::default() };
        let bundle = build_prompt(PromptStrategy::FewShot, &r, &ctx).unwrap();
        assert!(MockClient.send(&bundle).unwrap().ends_with("LABEL: GENUINE_BUG"));
        r.description = "Status changed: RESOLVED INVALID".into();
        let bundle = build_prompt(PromptStrategy::BasicZeroShot, &r, &ctx).unwrap();
        assert!(MockClient.send(&bundle).unwrap().ends_with("LABEL: FALSE_POSITIVE"));
    }

    #[test]
    fn replay_round_trip() {
        let r = bugzilla("1", "INVALID", "2022-01-01T00:00:00Z", vec![]);
        let bundle = build_prompt(PromptStrategy::BasicZeroShot, &r, &TriageContext::default()).unwrap();
        let client = ReplayClient::new("gpt-recorded", [ReplayClient::record(&bundle, "x\nLABEL: GENUINE_BUG")]);
        assert_eq!(client.send(&bundle).unwrap(), "x\nLABEL: GENUINE_BUG");
        let other = build_prompt(PromptStrategy::ChainOfThought, &r, &TriageContext::default()).unwrap();
        assert!(matches!(client.send(&other), Err(ClientError::NotRecorded(_))));
    }
}
