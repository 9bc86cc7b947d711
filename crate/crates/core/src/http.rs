//! Blocking HTTP clients for live tracker ingestion and model endpoints.
//!
//! Every client here has an offline counterpart (fixture directories,
//! [`crate::triage::ReplayClient`], [`crate::retrieval::MockEmbedder`]), so
//! nothing in the pipeline depends on this module being enabled.

use std::time::Duration;

use serde_json::{json, Value};

use crate::retrieval::{Embedder, RetrievalError};
use crate::triage::{ClientError, ModelClient, PromptBundle};

const TIMEOUT: Duration = Duration::from_secs(120);

fn agent() -> ureq::Agent {
    ureq::AgentBuilder::new().timeout(TIMEOUT).build()
}

fn client_error(err: ureq::Error) -> ClientError {
    match err {
        ureq::Error::Status(code, _) if code == 429 || code >= 500 => ClientError::Transport(format!("HTTP {code}")),
        ureq::Error::Status(code, response) => {
            let body = response.into_string().unwrap_or_default();
            ClientError::BadResponse(format!("HTTP {code}: {}", body.chars().take(300).collect::<String>()))
        }
        ureq::Error::Transport(t) => ClientError::Transport(t.to_string()),
    }
}

fn get_json(agent: &ureq::Agent, url: &str) -> Result<Value, ClientError> {
    agent
        .get(url)
        .set("Accept", "application/json")
        .call()
        .map_err(client_error)?
        .into_json()
        .map_err(|e| ClientError::BadResponse(e.to_string()))
}

/// Bugzilla REST API (`/rest/bug`).
pub struct BugzillaFetcher {
    endpoint: String,
    agent: ureq::Agent,
}

impl BugzillaFetcher {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self { endpoint: endpoint.into().trim_end_matches('/').to_string(), agent: agent() }
    }

    /// Ids matching a raw query string such as `resolution=INVALID&last_change_time=2020-01-01`.
    pub fn search_ids(&self, query: &str) -> Result<Vec<String>, ClientError> {
        let url = format!("{}/bug?{query}&include_fields=id", self.endpoint);
        let body = get_json(&self.agent, &url)?;
        let bugs = body["bugs"].as_array().ok_or_else(|| ClientError::BadResponse("missing `bugs`".into()))?;
        Ok(bugs.iter().filter_map(|b| b["id"].as_u64()).map(|id| id.to_string()).collect())
    }

    /// One bug merged with its comments, in the shape [`crate::corpus::ingest_bugzilla`] reads.
    pub fn fetch(&self, id: &str) -> Result<Value, ClientError> {
        let bug = get_json(&self.agent, &format!("{}/bug/{id}", self.endpoint))?;
        let mut record = bug["bugs"][0].clone();
        if !record.is_object() {
            return Err(ClientError::BadResponse(format!("bug {id} not found")));
        }
        let comments = get_json(&self.agent, &format!("{}/bug/{id}/comment", self.endpoint))?;
        record["comments"] = comments["bugs"][id]["comments"].clone();
        Ok(record)
    }
}

/// Syzkaller dashboard JSON export (`/bug?extid=...&json=1`).
pub struct SyzkallerFetcher {
    endpoint: String,
    agent: ureq::Agent,
}

impl SyzkallerFetcher {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self { endpoint: endpoint.into().trim_end_matches('/').to_string(), agent: agent() }
    }

    /// The dashboard record with `id` set to the external id.
    pub fn fetch(&self, extid: &str) -> Result<Value, ClientError> {
        let base = self.endpoint.rsplit_once('/').map_or(self.endpoint.as_str(), |(b, _)| b);
        let mut record = get_json(&self.agent, &format!("{base}/bug?extid={extid}&json=1"))?;
        if !record.is_object() {
            return Err(ClientError::BadResponse(format!("bug {extid}: not an object")));
        }
        record["id"] = json!(extid);
        Ok(record)
    }
}

/// Chat completions endpoint in the OpenAI wire format.
pub struct ChatClient {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    temperature: f64,
    agent: ureq::Agent,
}

impl ChatClient {
    pub fn new(
        endpoint: impl Into<String>,
        model: impl Into<String>,
        api_key: Option<String>,
        temperature: f64,
    ) -> Self {
        Self {
            endpoint: endpoint.into().trim_end_matches('/').to_string(),
            model: model.into(),
            api_key,
            temperature,
            agent: agent(),
        }
    }
}

impl ModelClient for ChatClient {
    fn model_id(&self) -> &str {
        &self.model
    }

    fn send(&self, prompt: &PromptBundle) -> Result<String, ClientError> {
        let body = json!({
            "model": self.model,
            "temperature": self.temperature,
            "messages": [
                {"role": "system", "content": prompt.system_text},
                {"role": "user", "content": prompt.user_text},
            ],
        });
        let mut request = self.agent.post(&format!("{}/chat/completions", self.endpoint));
        if let Some(key) = &self.api_key {
            request = request.set("Authorization", &format!("Bearer {key}"));
        }
        let reply: Value = request
            .send_json(body)
            .map_err(client_error)?
            .into_json()
            .map_err(|e| ClientError::BadResponse(e.to_string()))?;
        reply["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| ClientError::BadResponse("no message content".into()))
    }
}

/// Embeddings endpoint in the OpenAI wire format.
pub struct EmbeddingClient {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    dim: usize,
    agent: ureq::Agent,
}

impl EmbeddingClient {
    /// Without a known `dim`, one probe request determines it.
    pub fn new(
        endpoint: impl Into<String>,
        model: impl Into<String>,
        api_key: Option<String>,
        dim: Option<usize>,
    ) -> Result<Self, RetrievalError> {
        let mut client = Self {
            endpoint: endpoint.into().trim_end_matches('/').to_string(),
            model: model.into(),
            api_key,
            dim: dim.unwrap_or(0),
            agent: agent(),
        };
        if dim.is_none() {
            client.dim = client.request("dimension probe")?.len();
        }
        Ok(client)
    }

    fn request(&self, text: &str) -> Result<Vec<f32>, RetrievalError> {
        let failure = |msg: String| RetrievalError::EmbedderFailure(msg);
        let mut request = self.agent.post(&format!("{}/embeddings", self.endpoint));
        if let Some(key) = &self.api_key {
            request = request.set("Authorization", &format!("Bearer {key}"));
        }
        let reply: Value = request
            .send_json(json!({"model": self.model, "input": text}))
            .map_err(|e| failure(client_error(e).to_string()))?
            .into_json()
            .map_err(|e| failure(e.to_string()))?;
        let values = reply["data"][0]["embedding"].as_array().ok_or_else(|| failure("no embedding in reply".into()))?;
        values
            .iter()
            .map(|v| v.as_f64().map(|x| x as f32).ok_or_else(|| failure("non-numeric component".into())))
            .collect()
    }
}

impl Embedder for EmbeddingClient {
    fn embedder_id(&self) -> &str {
        &self.model
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_raw(&self, text: &str) -> Result<Vec<f32>, RetrievalError> {
        self.request(text)
    }
}
