use super::RetrievalError;
use crate::corpus::BugReport;

pub const DEFAULT_CHAR_BUDGET: usize = 8_000;
pub const MOCK_DIM: usize = 64;

/// Client that turns text into a fixed-dimension vector.
pub trait Embedder: Send + Sync {
    fn embedder_id(&self) -> &str;
    fn dim(&self) -> usize;
    fn embed_raw(&self, text: &str) -> Result<Vec<f32>, RetrievalError>;
}

/// Title, blank line, description, cut at `char_budget` characters.
pub fn embedding_text(report: &BugReport, char_budget: usize) -> String {
    let text = report.text();
    match text.char_indices().nth(char_budget) {
        Some((cut, _)) => text[..cut].to_string(),
        None => text,
    }
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Lowercases, then splits into maximal runs of ASCII letters and digits.
/// Every other character, including non-ASCII ones, separates tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Deterministic offline embedder.
///
/// Each token from [`tokenize`] adds 1 to bucket `fnv1a64(token) % 64`; the
/// count vector is then scaled to unit L2 norm (computed in f64, stored as f32).
/// Text without any token is an embedder failure.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockEmbedder;

impl Embedder for MockEmbedder {
    fn embedder_id(&self) -> &str {
        "mock-hash-64"
    }

    fn dim(&self) -> usize {
        MOCK_DIM
    }

    fn embed_raw(&self, text: &str) -> Result<Vec<f32>, RetrievalError> {
        let mut counts = [0f64; MOCK_DIM];
        let tokens = tokenize(text);
        if tokens.is_empty() {
            return Err(RetrievalError::EmbedderFailure("text has no tokens".into()));
        }
        for token in tokens {
            counts[(fnv1a64(token.as_bytes()) % MOCK_DIM as u64) as usize] += 1.0;
        }
        let norm = counts.iter().map(|c| c * c).sum::<f64>().sqrt();
        Ok(counts.iter().map(|c| (c / norm) as f32).collect())
    }
}
