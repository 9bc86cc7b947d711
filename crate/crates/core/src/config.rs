//! Flat `key = value` configuration.
//!
//! Lines starting with `#` and blank lines are ignored. Values may reference
//! `${MODEL_API_KEY}` or `${EMBED_API_KEY}`; no other variables are expanded.
//! Relative paths resolve against the directory holding the config file.
//!
//! | key | default |
//! |-----|---------|
//! | `window.start`, `window.end` | 2020-01-01, 2025-07-31 |
//! | `bugzilla.endpoint` | `https://bugzilla.kernel.org/rest` |
//! | `syzkaller.endpoint` | `https://syzkaller.appspot.com/upstream` |
//! | `model.endpoint`, `model.name`, `model.api_key` | unset |
//! | `model.temperature` | 0 |
//! | `model.allow_nonzero_temperature` | false |
//! | `embed.endpoint`, `embed.name`, `embed.api_key` | unset |
//! | `embed.char_budget` | 8000 |
//! | `templates.dir`, `fewshot.exemplars` | shipped |
//! | `paths.corpus`, `paths.labels`, `paths.vector_store`, `paths.verdict_log` | unset |
//! | `paths.results_dir` | `results` |
//! | `concurrency.model`, `concurrency.embed` | 4, 4 |
//! | `retry.max_attempts`, `retry.base_delay_ms` | 3, 500 |
//! | `rag.k_per_class` | 1 |
//! | `knn.k`, `logreg.lambda`, `logreg.epochs` | 5, 1.0, 500 |
//! | `split.k`, `split.temporal_cutoff`, `split.leak_cutoff` | 5, 2023-09-01, 2024-07-01 |
//! | `seed` | 42 |

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use thiserror::Error;

use crate::corpus::TimeWindow;
use crate::eval::{DEFAULT_KFOLD_K, DEFAULT_LEAK_CUTOFF, DEFAULT_TEMPORAL_CUTOFF};
use crate::retrieval::DEFAULT_CHAR_BUDGET;
use crate::triage::{LogRegParams, RetryPolicy, DEFAULT_KNN_K};

pub const SECRET_VARS: [&str; 2] = ["MODEL_API_KEY", "EMBED_API_KEY"];

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("`{key}`: {message}")]
    InvalidValue { key: String, message: String },
    #[error("`{key}`: only ${{MODEL_API_KEY}} and ${{EMBED_API_KEY}} may be interpolated, found ${{{var}}}")]
    ForbiddenVariable { key: String, var: String },
    #[error("temperature {0} requires model.allow_nonzero_temperature = true")]
    NonZeroTemperature(f64),
    #[error("io: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClientSettings {
    pub endpoint: Option<String>,
    pub name: Option<String>,
    pub api_key: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub window: TimeWindow,
    pub bugzilla_endpoint: String,
    pub syzkaller_endpoint: String,
    pub model: ClientSettings,
    pub temperature: f64,
    pub embed: ClientSettings,
    pub char_budget: usize,
    pub templates_dir: Option<PathBuf>,
    pub exemplars: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub vector_store: Option<PathBuf>,
    pub verdict_log: Option<PathBuf>,
    pub results_dir: PathBuf,
    pub model_in_flight: usize,
    pub embed_in_flight: usize,
    pub retry: RetryPolicy,
    pub k_per_class: usize,
    pub knn_k: usize,
    pub logreg: LogRegParams,
    pub folds: usize,
    pub temporal_cutoff: NaiveDate,
    pub leak_cutoff: NaiveDate,
    pub seed: u64,
    /// Non-secret `key = value` lines, sorted, for digests and manifests.
    pub canonical: Vec<(String, String)>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            window: TimeWindow::default(),
            bugzilla_endpoint: "https://bugzilla.kernel.org/rest".into(),
            syzkaller_endpoint: "https://syzkaller.appspot.com/upstream".into(),
            model: ClientSettings::default(),
            temperature: 0.0,
            embed: ClientSettings::default(),
            char_budget: DEFAULT_CHAR_BUDGET,
            templates_dir: None,
            exemplars: None,
            corpus: None,
            labels: None,
            vector_store: None,
            verdict_log: None,
            results_dir: PathBuf::from("results"),
            model_in_flight: 4,
            embed_in_flight: 4,
            retry: RetryPolicy::default(),
            k_per_class: 1,
            knn_k: DEFAULT_KNN_K,
            logreg: LogRegParams::default(),
            folds: DEFAULT_KFOLD_K,
            temporal_cutoff: DEFAULT_TEMPORAL_CUTOFF,
            leak_cutoff: DEFAULT_LEAK_CUTOFF,
            seed: 42,
            canonical: Vec::new(),
        }
    }
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue { key: key.to_string(), message: message.into() }
}

fn interpolate(key: &str, value: &str, env: &dyn Fn(&str) -> Option<String>) -> Result<String, ConfigError> {
    let mut out = String::new();
    let mut rest = value;
    while let Some(start) = rest.find("${") {
        out.push_str(&rest[..start]);
        let end = rest[start..].find('}').ok_or_else(|| invalid(key, "unterminated ${"))? + start;
        let var = &rest[start + 2..end];
        if !SECRET_VARS.contains(&var) {
            return Err(ConfigError::ForbiddenVariable { key: key.to_string(), var: var.to_string() });
        }
        out.push_str(&env(var).unwrap_or_default());
        rest = &rest[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| invalid(key, format!("cannot parse `{value}`")))
}

fn parse_date(key: &str, value: &str) -> Result<NaiveDate, ConfigError> {
    NaiveDate::parse_from_str(value, "%Y-%m-%d")
        .map_err(|_| invalid(key, format!("expected YYYY-MM-DD, got `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(invalid(key, format!("expected true or false, got `{value}`"))),
    }
}

fn positive(key: &str, value: &str) -> Result<usize, ConfigError> {
    match parse_num::<usize>(key, value)? {
        0 => Err(invalid(key, "must be at least 1")),
        n => Ok(n),
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        let base = match path.parent() {
            Some(dir) if !dir.as_os_str().is_empty() => dir.to_path_buf(),
            _ => PathBuf::from("."),
        };
        let base = std::path::absolute(&base).map_err(|e| ConfigError::Io(e.to_string()))?;
        Self::parse(&text, &base, &|var| std::env::var(var).ok())
    }

    /// Parses config text. Relative paths are joined to `base_dir`.
    pub fn parse(text: &str, base_dir: &Path, env: &dyn Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let mut cfg = Config { results_dir: base_dir.join("results"), ..Config::default() };
        let mut seen = std::collections::BTreeSet::new();
        let mut allow_nonzero = false;
        let mut window_start = cfg.window.start;
        let mut window_end = cfg.window.end;
        let path = |v: &str| Some(base_dir.join(v));
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line: line_no, message: "expected `key = value`".into() })?;
            let (key, raw_value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::DuplicateKey { line: line_no, key: key.to_string() });
            }
            let value = interpolate(key, raw_value, env)?;
            let v = value.as_str();
            match key {
                "window.start" => window_start = parse_date(key, v)?,
                "window.end" => window_end = parse_date(key, v)?,
                "bugzilla.endpoint" => cfg.bugzilla_endpoint = value.clone(),
                "syzkaller.endpoint" => cfg.syzkaller_endpoint = value.clone(),
                "model.endpoint" => cfg.model.endpoint = Some(value.clone()),
                "model.name" => cfg.model.name = Some(value.clone()),
                "model.api_key" => cfg.model.api_key = Some(value.clone()).filter(|s| !s.is_empty()),
                "model.temperature" => cfg.temperature = parse_num(key, v)?,
                "model.allow_nonzero_temperature" => allow_nonzero = parse_bool(key, v)?,
                "embed.endpoint" => cfg.embed.endpoint = Some(value.clone()),
                "embed.name" => cfg.embed.name = Some(value.clone()),
                "embed.api_key" => cfg.embed.api_key = Some(value.clone()).filter(|s| !s.is_empty()),
                "embed.char_budget" => cfg.char_budget = positive(key, v)?,
                "templates.dir" => cfg.templates_dir = path(v),
                "fewshot.exemplars" => cfg.exemplars = path(v),
                "paths.corpus" => cfg.corpus = path(v),
                "paths.labels" => cfg.labels = path(v),
                "paths.vector_store" => cfg.vector_store = path(v),
                "paths.verdict_log" => cfg.verdict_log = path(v),
                "paths.results_dir" => cfg.results_dir = base_dir.join(v),
                "concurrency.model" => cfg.model_in_flight = positive(key, v)?,
                "concurrency.embed" => cfg.embed_in_flight = positive(key, v)?,
                "retry.max_attempts" => cfg.retry.max_attempts = positive(key, v)? as u32,
                "retry.base_delay_ms" => cfg.retry.base_delay_ms = parse_num(key, v)?,
                "rag.k_per_class" => cfg.k_per_class = positive(key, v)?,
                "knn.k" => cfg.knn_k = positive(key, v)?,
                "logreg.lambda" => cfg.logreg.lambda = parse_num(key, v)?,
                "logreg.epochs" => cfg.logreg.epochs = parse_num(key, v)?,
                "split.k" => cfg.folds = parse_num(key, v)?,
                "split.temporal_cutoff" => cfg.temporal_cutoff = parse_date(key, v)?,
                "split.leak_cutoff" => cfg.leak_cutoff = parse_date(key, v)?,
                "seed" => cfg.seed = parse_num(key, v)?,
                _ => return Err(ConfigError::UnknownKey { line: line_no, key: key.to_string() }),
            }
            if !key.ends_with("api_key") {
                cfg.canonical.push((key.to_string(), raw_value.to_string()));
            }
        }
        if window_start > window_end {
            return Err(invalid("window.start", "window starts after it ends"));
        }
        cfg.window = TimeWindow::new(window_start, window_end);
        if cfg.temperature != 0.0 && !allow_nonzero {
            return Err(ConfigError::NonZeroTemperature(cfg.temperature));
        }
        if !cfg.temperature.is_finite() || cfg.temperature < 0.0 {
            return Err(invalid("model.temperature", "must be a finite non-negative number"));
        }
        if cfg.logreg.lambda < 0.0 || !cfg.logreg.lambda.is_finite() {
            return Err(invalid("logreg.lambda", "must be finite and non-negative"));
        }
        cfg.canonical.sort();
        Ok(cfg)
    }

    /// SHA-256 over the sorted non-secret entries.
    pub fn digest(&self) -> String {
        let text: String = self.canonical.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
        crate::triage::sha256_hex(&text)
    }
}
