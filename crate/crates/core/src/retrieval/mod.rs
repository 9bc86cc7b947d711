//! Embedding-based exact nearest-neighbour retrieval with class-balanced selection.

mod embed;
mod store;

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::Label;
use crate::concurrency::bounded_map;
use crate::corpus::{BugReport, ReportKey, Source};

pub use embed::{embedding_text, fnv1a64, tokenize, Embedder, MockEmbedder, DEFAULT_CHAR_BUDGET, MOCK_DIM};
pub use store::{read_store, write_store, STORE_MAGIC, STORE_VERSION};

#[derive(Debug, Error, PartialEq)]
pub enum RetrievalError {
    #[error("text to embed is empty")]
    EmptyText,
    #[error("embedder failed: {0}")]
    EmbedderFailure(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vector has zero norm")]
    ZeroVector,
    #[error("vector contains a non-finite value")]
    NonFinite,
    #[error("not enough {0} entries besides the query")]
    InsufficientClass(Label),
    #[error("knowledge base accepts bugzilla reports only, got {0}")]
    CrossSource(ReportKey),
    #[error("duplicate knowledge-base entry {0}")]
    DuplicateEntry(ReportKey),
    #[error("vector store: {0}")]
    Store(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for RetrievalError {
    fn from(err: std::io::Error) -> Self {
        RetrievalError::Io(err.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    values: Vec<f32>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Result<Self, RetrievalError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(RetrievalError::NonFinite);
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Embeds non-empty text and checks the client's declared dimension.
pub fn embed(text: &str, embedder: &dyn Embedder) -> Result<EmbeddingVector, RetrievalError> {
    if text.trim().is_empty() {
        return Err(RetrievalError::EmptyText);
    }
    let vector = EmbeddingVector::new(embedder.embed_raw(text)?)?;
    if vector.dim() != embedder.dim() {
        return Err(RetrievalError::DimensionMismatch { expected: embedder.dim(), got: vector.dim() });
    }
    Ok(vector)
}

pub fn cosine_similarity(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64, RetrievalError> {
    if u.dim() != v.dim() {
        return Err(RetrievalError::DimensionMismatch { expected: u.dim(), got: v.dim() });
    }
    let (mut dot, mut nu, mut nv) = (0.0f64, 0.0f64, 0.0f64);
    for (&a, &b) in u.values.iter().zip(&v.values) {
        let (a, b) = (f64::from(a), f64::from(b));
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(RetrievalError::ZeroVector);
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KbEntry {
    pub vector: EmbeddingVector,
    pub label: Label,
    pub text: String,
}

/// Labeled, embedded historical reports. Vectors are stored as the embedder returned them.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeBase {
    dim: usize,
    embedder_id: String,
    entries: BTreeMap<ReportKey, KbEntry>,
}

impl KnowledgeBase {
    pub fn new(dim: usize, embedder_id: impl Into<String>) -> Self {
        Self { dim, embedder_id: embedder_id.into(), entries: BTreeMap::new() }
    }

    pub fn insert(&mut self, key: ReportKey, entry: KbEntry) -> Result<(), RetrievalError> {
        if entry.vector.dim() != self.dim {
            return Err(RetrievalError::DimensionMismatch { expected: self.dim, got: entry.vector.dim() });
        }
        if self.entries.contains_key(&key) {
            return Err(RetrievalError::DuplicateEntry(key));
        }
        self.entries.insert(key, entry);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn embedder_id(&self) -> &str {
        &self.embedder_id
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &ReportKey) -> Option<&KbEntry> {
        self.entries.get(key)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&ReportKey, &KbEntry)> {
        self.entries.iter()
    }

    pub fn count(&self, label: Label) -> usize {
        self.entries.values().filter(|e| e.label == label).count()
    }

    /// Restricts the knowledge base to the given keys, e.g. a retrieval partition.
    pub fn subset<'a>(&self, keys: impl IntoIterator<Item = &'a ReportKey>) -> KnowledgeBase {
        let mut kb = KnowledgeBase::new(self.dim, self.embedder_id.clone());
        for key in keys {
            if let Some(entry) = self.entries.get(key) {
                kb.entries.insert(key.clone(), entry.clone());
            }
        }
        kb
    }

    /// Looks up the report text and label behind each neighbour, genuine neighbours first.
    pub fn cases(&self, result: &RetrievalResult) -> Vec<RetrievedCase> {
        result
            .genuine_neighbors
            .iter()
            .chain(&result.fp_neighbors)
            .filter_map(|n| {
                self.entries.get(&n.key).map(|e| RetrievedCase {
                    key: n.key.clone(),
                    label: e.label,
                    text: e.text.clone(),
                    similarity: n.similarity,
                })
            })
            .collect()
    }
}

/// Embeds every labeled Bugzilla report; any embedding failure discards the whole build.
pub fn build_knowledge_base(
    reports: &[(&BugReport, Label)],
    embedder: &dyn Embedder,
    char_budget: usize,
    in_flight: usize,
) -> Result<KnowledgeBase, RetrievalError> {
    if let Some((r, _)) = reports.iter().find(|(r, _)| r.source != Source::Bugzilla) {
        return Err(RetrievalError::CrossSource(r.key()));
    }
    let texts: Vec<String> = reports.iter().map(|(r, _)| embedding_text(r, char_budget)).collect();
    let vectors = bounded_map(&texts, in_flight, |text| embed(text, embedder));
    let mut kb = KnowledgeBase::new(embedder.dim(), embedder.embedder_id());
    for (((report, label), text), vector) in reports.iter().zip(texts).zip(vectors) {
        kb.insert(report.key(), KbEntry { vector: vector?, label: *label, text })?;
    }
    Ok(kb)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub key: ReportKey,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub genuine_neighbors: Vec<Neighbor>,
    pub fp_neighbors: Vec<Neighbor>,
    pub k_per_class: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievedCase {
    pub key: ReportKey,
    pub label: Label,
    pub text: String,
    pub similarity: f64,
}

fn by_similarity(a: &Neighbor, b: &Neighbor) -> Ordering {
    b.similarity.total_cmp(&a.similarity).then_with(|| a.key.cmp(&b.key))
}

/// Top-k neighbours per class by exact linear scan, excluding `query_key`.
/// Ties are broken by ascending report key.
pub fn retrieve_balanced_vector(
    query_key: Option<&ReportKey>,
    query: &EmbeddingVector,
    kb: &KnowledgeBase,
    k_per_class: usize,
) -> Result<RetrievalResult, RetrievalError> {
    if query.dim() != kb.dim {
        return Err(RetrievalError::DimensionMismatch { expected: kb.dim, got: query.dim() });
    }
    let mut genuine = Vec::new();
    let mut fp = Vec::new();
    for (key, entry) in &kb.entries {
        if Some(key) == query_key {
            continue;
        }
        let neighbor = Neighbor { key: key.clone(), similarity: cosine_similarity(query, &entry.vector)? };
        match entry.label {
            Label::GenuineBug => genuine.push(neighbor),
            Label::FalsePositive => fp.push(neighbor),
        }
    }
    for (list, label) in [(&mut genuine, Label::GenuineBug), (&mut fp, Label::FalsePositive)] {
        if list.len() < k_per_class {
            return Err(RetrievalError::InsufficientClass(label));
        }
        list.sort_by(by_similarity);
        list.truncate(k_per_class);
    }
    Ok(RetrievalResult { genuine_neighbors: genuine, fp_neighbors: fp, k_per_class })
}

pub fn retrieve_balanced(
    query: &BugReport,
    kb: &KnowledgeBase,
    k_per_class: usize,
    embedder: &dyn Embedder,
    char_budget: usize,
) -> Result<RetrievalResult, RetrievalError> {
    let vector = embed(&embedding_text(query, char_budget), embedder)?;
    retrieve_balanced_vector(Some(&query.key()), &vector, kb, k_per_class)
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::corpus::fixtures::*;

    fn v(values: &[f32]) -> EmbeddingVector {
        EmbeddingVector::new(values.to_vec()).unwrap()
    }

    #[test]
    fn cosine_hand_values() {
        assert_abs_diff_eq!(cosine_similarity(&v(&[3.0, 4.0]), &v(&[3.0, 4.0])).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(cosine_similarity(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 0.0);
        assert_abs_diff_eq!(
            cosine_similarity(&v(&[1.0, 2.0, 2.0]), &v(&[2.0, 1.0, 2.0])).unwrap(),
            8.0 / 9.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn cosine_errors() {
        assert_eq!(cosine_similarity(&v(&[0.0, 0.0]), &v(&[1.0, 0.0])).unwrap_err(), RetrievalError::ZeroVector);
        assert!(matches!(
            cosine_similarity(&v(&[1.0]), &v(&[1.0, 0.0])),
            Err(RetrievalError::DimensionMismatch { .. })
        ));
        assert_eq!(EmbeddingVector::new(vec![f32::NAN]).unwrap_err(), RetrievalError::NonFinite);
    }

    fn kb_with(entries: &[(&str, Label, [f32; 2])]) -> KnowledgeBase {
        let mut kb = KnowledgeBase::new(2, "test");
        for (id, label, values) in entries {
            kb.insert(
                ReportKey::new(Source::Bugzilla, *id),
                KbEntry { vector: v(values), label: *label, text: format!("text {id}") },
            )
            .unwrap();
        }
        kb
    }

    #[test]
    fn external_query_gets_both_classes() {
        let kb = kb_with(&[("g", Label::GenuineBug, [1.0, 0.0]), ("f", Label::FalsePositive, [0.0, 1.0])]);
        let r = retrieve_balanced_vector(None, &v(&[1.0, 1.0]), &kb, 1).unwrap();
        assert_eq!(r.genuine_neighbors[0].key.id, "g");
        assert_eq!(r.fp_neighbors[0].key.id, "f");
        let cases = kb.cases(&r);
        assert_eq!(cases.len(), 2);
        assert_eq!(cases[1].text, "text f");
    }

    #[test]
    fn query_is_never_its_own_neighbor() {
        let kb = kb_with(&[
            ("q", Label::GenuineBug, [1.0, 0.0]),
            ("g", Label::GenuineBug, [0.5, 0.5]),
            ("f", Label::FalsePositive, [0.0, 1.0]),
        ]);
        let q = ReportKey::new(Source::Bugzilla, "q");
        let r = retrieve_balanced_vector(Some(&q), &v(&[1.0, 0.0]), &kb, 1).unwrap();
        assert_eq!(r.genuine_neighbors[0].key.id, "g");
    }

    #[test]
    fn shortfall_is_an_error() {
        let kb = kb_with(&[("q", Label::GenuineBug, [1.0, 0.0]), ("f", Label::FalsePositive, [0.0, 1.0])]);
        let q = ReportKey::new(Source::Bugzilla, "q");
        assert_eq!(
            retrieve_balanced_vector(Some(&q), &v(&[1.0, 0.0]), &kb, 1).unwrap_err(),
            RetrievalError::InsufficientClass(Label::GenuineBug)
        );
    }

    #[test]
    fn ties_break_by_key() {
        let kb = kb_with(&[
            ("b", Label::FalsePositive, [1.0, 0.0]),
            ("a", Label::FalsePositive, [2.0, 0.0]),
            ("g", Label::GenuineBug, [1.0, 1.0]),
            ("h", Label::GenuineBug, [0.0, 1.0]),
        ]);
        let r = retrieve_balanced_vector(None, &v(&[1.0, 0.0]), &kb, 2).unwrap();
        let ids: Vec<_> = r.fp_neighbors.iter().map(|n| n.key.id.as_str()).collect();
        assert_eq!(ids, ["a", "b"]);
    }

    #[test]
    fn build_rejects_syzkaller_and_keeps_both_classes() {
        let a = bugzilla("1", "CODE_FIX", "2021-01-01T00:00:00Z", vec![]);
        let b = bugzilla("2", "INVALID", "2021-01-01T00:00:00Z", vec![]);
        let kb = build_knowledge_base(&[(&a, Label::GenuineBug), (&b, Label::FalsePositive)], &MockEmbedder, 8000, 2)
            .unwrap();
        assert_eq!((kb.count(Label::GenuineBug), kb.count(Label::FalsePositive)), (1, 1));
        let s = syzkaller("s", "invalid", "2021-01-01T00:00:00Z", vec![]);
        assert!(matches!(
            build_knowledge_base(&[(&s, Label::GenuineBug)], &MockEmbedder, 8000, 1),
            Err(RetrievalError::CrossSource(_))
        ));
    }
}
