use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use fptriage::annotate::{read_jsonl, Label, LabelRecord};
use fptriage::config::Config;
use fptriage::corpus::{read_corpus_file, Corpus, ReportKey};
use fptriage::http::{ChatClient, EmbeddingClient};
use fptriage::retrieval::{Embedder, MockEmbedder};
use fptriage::triage::{MockClient, ModelClient, ReplayClient};

use crate::manifest;

/// An error caused by how the tool was invoked or configured (exit status 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(message: impl fmt::Display) -> anyhow::Error {
    UsageError(message.to_string()).into()
}

pub struct Context {
    pub config: Config,
    pub results: PathBuf,
}

impl Context {
    pub fn load(config_path: Option<&Path>, results: Option<PathBuf>) -> Result<Self> {
        let config = match config_path {
            Some(path) => Config::load(path).map_err(|e| usage(format!("{}: {e}", path.display())))?,
            None => Config::default(),
        };
        let results = results.unwrap_or_else(|| config.results_dir.clone());
        Ok(Self { config, results })
    }

    /// An explicit path, else the configured one, else `name` inside the results directory.
    pub fn output(&self, explicit: Option<PathBuf>, configured: Option<&PathBuf>, name: &str) -> PathBuf {
        explicit.or_else(|| configured.cloned()).unwrap_or_else(|| self.results.join(name))
    }

    /// Resolved like [`Context::output`]; the file must exist.
    pub fn input(
        &self,
        explicit: Option<PathBuf>,
        configured: Option<&PathBuf>,
        name: &str,
        what: &str,
    ) -> Result<PathBuf> {
        let path = self.output(explicit, configured, name);
        if !path.exists() {
            return Err(usage(format!("{what} {} does not exist", path.display())));
        }
        Ok(path)
    }

    pub fn load_corpus(&self, explicit: Option<PathBuf>) -> Result<(PathBuf, Corpus)> {
        let path = self.input(explicit, self.config.corpus.as_ref(), "corpus.jsonl", "corpus file")?;
        let corpus =
            read_corpus_file(&path, self.config.window).with_context(|| format!("reading {}", path.display()))?;
        Ok((path, corpus))
    }

    pub fn load_labels(&self, explicit: Option<PathBuf>) -> Result<(PathBuf, BTreeMap<ReportKey, LabelRecord>)> {
        let path = self.input(explicit, self.config.labels.as_ref(), "labels.jsonl", "labels file")?;
        let file = fs::File::open(&path).with_context(|| format!("opening {}", path.display()))?;
        let records: Vec<LabelRecord> = read_jsonl(file).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        if records.is_empty() {
            return Err(usage(format!("labels file {} has no records", path.display())));
        }
        Ok((path, records.into_iter().map(|r| (r.report_id.clone(), r)).collect()))
    }

    pub fn record(&self, command: &str, seed: u64, inputs: &[&Path], outputs: &[&Path]) -> Result<()> {
        manifest::record(self, command, seed, inputs, outputs)
    }
}

/// Labeled reports only; exclusions are dropped.
pub fn truth(labels: &BTreeMap<ReportKey, LabelRecord>) -> BTreeMap<ReportKey, Label> {
    labels.iter().filter_map(|(k, r)| r.label.label().map(|l| (k.clone(), l))).collect()
}

pub fn write_text(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn jsonl<T: serde::Serialize>(items: impl IntoIterator<Item = T>) -> Result<String> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(&item)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn model_client(ctx: &Context, mock: bool, replay: Option<&Path>) -> Result<Box<dyn ModelClient>> {
    if mock {
        return Ok(Box::new(MockClient));
    }
    if let Some(path) = replay {
        if !path.exists() {
            return Err(usage(format!("replay file {} does not exist", path.display())));
        }
        return Ok(Box::new(ReplayClient::from_jsonl("replay", path)?));
    }
    live_model(ctx, None)
}

pub fn live_model(ctx: &Context, name: Option<&str>) -> Result<Box<dyn ModelClient>> {
    let settings = &ctx.config.model;
    let endpoint = settings.endpoint.clone().ok_or_else(|| usage("model.endpoint is not configured"))?;
    let name = name
        .map(str::to_string)
        .or_else(|| settings.name.clone())
        .ok_or_else(|| usage("model.name is not configured"))?;
    Ok(Box::new(ChatClient::new(endpoint, name, settings.api_key.clone(), ctx.config.temperature)))
}

pub fn embedder(ctx: &Context, mock: bool) -> Result<Box<dyn Embedder>> {
    if mock {
        return Ok(Box::new(MockEmbedder));
    }
    let settings = &ctx.config.embed;
    let endpoint = settings.endpoint.clone().ok_or_else(|| usage("embed.endpoint is not configured"))?;
    let name = settings.name.clone().ok_or_else(|| usage("embed.name is not configured"))?;
    Ok(Box::new(EmbeddingClient::new(endpoint, name, settings.api_key.clone(), None)?))
}
