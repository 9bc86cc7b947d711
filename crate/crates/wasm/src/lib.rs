//! Browser bindings for three interactive demos: effect sizes between two
//! samples, annotator agreement, and offline triage with the keyword client.
//!
//! Each binding returns a JSON string; the `*_json` functions hold the logic
//! and are plain Rust so they can be tested natively.

use chrono::{TimeZone, Utc};
use fptriage::annotate::{cohen_kappa, Label};
use fptriage::corpus::{BugReport, DiscussionThread, Source};
use fptriage::retrieval::{build_knowledge_base, retrieve_balanced, MockEmbedder, DEFAULT_CHAR_BUDGET};
use fptriage::stats::{cliffs_delta, mann_whitney_u};
use fptriage::triage::{
    build_prompt, default_exemplars, parse_verdict, MockClient, ModelClient, PromptStrategy, TriageContext,
};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Guideline text used by the enhanced zero-shot demo.
const DEMO_GUIDELINES: &str = "Drivers and file systems attract the most false positives. \
Reports that disappear after a firmware, BIOS or configuration change usually have an external cause.";

fn parse_sample(raw: &str, name: &str) -> Result<Vec<f64>, String> {
    raw.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| format!("{name}: `{t}` is not a number")))
        .collect()
}

fn parse_labels(raw: &str) -> Vec<String> {
    raw.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_ascii_lowercase())
        .collect()
}

pub fn effect_sizes_json(a: &str, b: &str) -> Result<Value, String> {
    let (a, b) = (parse_sample(a, "sample A")?, parse_sample(b, "sample B")?);
    let u = mann_whitney_u(&a, &b).map_err(|e| e.to_string())?;
    let delta = cliffs_delta(&a, &b).map_err(|e| e.to_string())?;
    Ok(json!({
        "n_a": a.len(),
        "n_b": b.len(),
        "u": u.statistic,
        "p_value": u.p_value,
        "method": u.method,
        "delta": delta.statistic,
        "magnitude": delta.magnitude.map(|m| m.as_str()),
    }))
}

pub fn agreement_json(a: &str, b: &str) -> Result<Value, String> {
    let (a, b) = (parse_labels(a), parse_labels(b));
    let result = cohen_kappa(&a, &b).map_err(|e| e.to_string())?;
    serde_json::to_value(result).map_err(|e| e.to_string())
}

fn demo_report(id: &str, title: &str, description: &str) -> BugReport {
    BugReport {
        id: id.to_string(),
        source: Source::Bugzilla,
        title: title.to_string(),
        description: description.to_string(),
        status: "NEW".into(),
        resolution: None,
        component_raw: String::new(),
        open_time: Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap(),
        discussions: vec![DiscussionThread::new("0", Vec::new())],
    }
}

/// Classifies a report with the keyword client. The RAG demo retrieves from
/// the shipped exemplars embedded with the hashing embedder.
pub fn triage_json(title: &str, description: &str, strategy: &str) -> Result<Value, String> {
    let strategy: PromptStrategy = strategy.parse()?;
    if title.trim().is_empty() && description.trim().is_empty() {
        return Err("enter a title or description".into());
    }
    let report = demo_report("demo", title, description);
    let exemplars = default_exemplars();
    let retrieved = if strategy == PromptStrategy::Rag {
        let cases: Vec<(BugReport, Label)> =
            exemplars.iter().map(|e| (demo_report(&e.id, "", &e.text), e.label)).collect();
        let refs: Vec<(&BugReport, Label)> = cases.iter().map(|(r, l)| (r, *l)).collect();
        let kb = build_knowledge_base(&refs, &MockEmbedder, DEFAULT_CHAR_BUDGET, 1).map_err(|e| e.to_string())?;
        let result =
            retrieve_balanced(&report, &kb, 1, &MockEmbedder, DEFAULT_CHAR_BUDGET).map_err(|e| e.to_string())?;
        Some(kb.cases(&result))
    } else {
        None
    };
    let context = TriageContext { guidelines: Some(DEMO_GUIDELINES.into()), exemplars: Some(exemplars), retrieved };
    let bundle = build_prompt(strategy, &report, &context).map_err(|e| e.to_string())?;
    let client = MockClient;
    let raw = client.send(&bundle).map_err(|e| e.to_string())?;
    let (label, explanation) = parse_verdict(&raw).map_err(|e| e.to_string())?;
    let (_, keyword) = MockClient::classify_text(&report.text());
    Ok(json!({
        "label": label.marker(),
        "explanation": explanation,
        "matched_keyword": keyword,
        "model_id": client.model_id(),
        "prompt": bundle.render(),
    }))
}

fn to_js(result: Result<Value, String>) -> Result<String, JsError> {
    result.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

/// Mann-Whitney U and Cliff's delta of sample `a` over `b` (numbers separated by commas or spaces).
#[wasm_bindgen]
pub fn effect_sizes(a: &str, b: &str) -> Result<String, JsError> {
    to_js(effect_sizes_json(a, b))
}

/// Cohen's kappa between two aligned label lists.
#[wasm_bindgen]
pub fn agreement(a: &str, b: &str) -> Result<String, JsError> {
    to_js(agreement_json(a, b))
}

#[wasm_bindgen]
pub fn triage(title: &str, description: &str, strategy: &str) -> Result<String, JsError> {
    to_js(triage_json(title, description, strategy))
}

#[wasm_bindgen]
pub fn strategies() -> String {
    Value::from(PromptStrategy::ALL.iter().map(|s| s.as_str()).collect::<Vec<_>>()).to_string()
}
