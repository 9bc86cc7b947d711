use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AnnotateError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementResult {
    pub kappa: f64,
    pub observed: f64,
    pub expected: f64,
    pub n: usize,
    /// Set when both raters used one identical category, so kappa is 0/0 and reported as 1.
    pub degenerate: bool,
}

/// Cohen's kappa for two aligned label sequences over whatever categories occur.
pub fn cohen_kappa<T: Ord>(a: &[T], b: &[T]) -> Result<AgreementResult, AnnotateError> {
    if a.len() != b.len() {
        return Err(AnnotateError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(AnnotateError::EmptyInput);
    }
    let n = a.len();
    let mut marginals: BTreeMap<&T, (usize, usize)> = BTreeMap::new();
    let mut agree = 0;
    for (x, y) in a.iter().zip(b) {
        marginals.entry(x).or_default().0 += 1;
        marginals.entry(y).or_default().1 += 1;
        if x == y {
            agree += 1;
        }
    }
    let nf = n as f64;
    let observed = agree as f64 / nf;
    let expected: f64 = marginals.values().map(|&(ca, cb)| (ca as f64 / nf) * (cb as f64 / nf)).sum();
    if expected >= 1.0 {
        return Ok(AgreementResult { kappa: 1.0, observed, expected: 1.0, n, degenerate: true });
    }
    Ok(AgreementResult { kappa: (observed - expected) / (1.0 - expected), observed, expected, n, degenerate: false })
}
