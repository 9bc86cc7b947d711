use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::TriageError;
use crate::retrieval::tokenize;

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    pub dim: usize,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn from_dense(dense: &[f64]) -> Self {
        let (indices, values) = dense.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, v)| (i, *v)).unzip();
        Self { dim: dense.len(), indices, values }
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j, mut sum) = (0, 0, 0.0);
        while i < self.indices.len() && j < other.indices.len() {
            match self.indices[i].cmp(&other.indices[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    sum += self.values[i] * other.values[j];
                    i += 1;
                    j += 1;
                }
            }
        }
        sum
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            out[i] = v;
        }
        out
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }
}

/// Term-frequency times smoothed inverse document frequency.
///
/// `idf(t) = ln((1 + N) / (1 + df(t))) + 1`. Vectors are L2-normalized; text
/// with no known token maps to the zero vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfIdf {
    vocabulary: BTreeMap<String, usize>,
    idf: Vec<f64>,
}

impl TfIdf {
    pub fn fit<S: AsRef<str>>(texts: &[S]) -> Result<Self, TriageError> {
        if texts.is_empty() {
            return Err(TriageError::EmptyCorpus);
        }
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for text in texts {
            let mut tokens = tokenize(text.as_ref());
            tokens.sort();
            tokens.dedup();
            for t in tokens {
                *df.entry(t).or_default() += 1;
            }
        }
        let n = texts.len() as f64;
        let idf = df.values().map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0).collect();
        let vocabulary = df.into_keys().enumerate().map(|(i, t)| (t, i)).collect();
        Ok(Self { vocabulary, idf })
    }

    pub fn dim(&self) -> usize {
        self.idf.len()
    }

    pub fn idf(&self, token: &str) -> Option<f64> {
        self.vocabulary.get(token).map(|&i| self.idf[i])
    }

    pub fn transform(&self, text: &str) -> SparseVector {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for token in tokenize(text) {
            if let Some(&i) = self.vocabulary.get(&token) {
                *counts.entry(i).or_default() += 1.0;
            }
        }
        let weighted: Vec<(usize, f64)> = counts.into_iter().map(|(i, c)| (i, c * self.idf[i])).collect();
        let norm = weighted.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        let (indices, values) = weighted.into_iter().map(|(i, w)| (i, w / norm)).unzip();
        SparseVector { dim: self.dim(), indices, values }
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    #[test]
    fn idf_matches_hand_computation() {
        let tfidf = TfIdf::fit(&["usb hub", "usb disk", "gpu hang"]).unwrap();
        // N = 3: df(usb) = 2 -> ln(4/3) + 1, df(hub) = 1 -> ln(2) + 1
        assert_abs_diff_eq!(tfidf.idf("usb").unwrap(), 1.287_682_072_451_780_9, epsilon = 1e-12);
        assert_abs_diff_eq!(tfidf.idf("hub").unwrap(), 1.693_147_180_559_945_3, epsilon = 1e-12);
        assert_eq!(tfidf.dim(), 5);
    }

    #[test]
    fn unseen_tokens_contribute_nothing() {
        let tfidf = TfIdf::fit(&["usb hub", "gpu hang"]).unwrap();
        assert_eq!(tfidf.transform("usb hub"), tfidf.transform("usb hub wifi"));
        assert_eq!(tfidf.transform("wifi").nnz(), 0);
    }

    #[test]
    fn weights_are_nonnegative_and_unit_length() {
        let tfidf = TfIdf::fit(&["a b b c", "c d"]).unwrap();
        let v = tfidf.transform("b b c d");
        assert!(v.values.iter().all(|w| *w >= 0.0 && w.is_finite()));
        assert_abs_diff_eq!(v.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert_eq!(TfIdf::fit::<&str>(&[]).unwrap_err(), TriageError::EmptyCorpus);
    }

    #[test]
    fn sparse_dot() {
        let a = SparseVector::from_dense(&[1.0, 0.0, 2.0]);
        let b = SparseVector::from_dense(&[3.0, 5.0, 4.0]);
        assert_eq!(a.dot(&b), 11.0);
        assert_eq!(a.dense(), vec![1.0, 0.0, 2.0]);
    }
}
