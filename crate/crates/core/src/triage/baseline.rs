use serde::{Deserialize, Serialize};

use super::{SparseVector, TriageError};
use crate::annotate::Label;

pub const DEFAULT_KNN_K: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRegParams {
    /// L2 strength; the penalty is `lambda / (2n) * |w|^2` and leaves the bias alone.
    pub lambda: f64,
    pub epochs: usize,
    /// Fixed step size. `None` uses `1 / L` for the loss's smoothness bound `L`,
    /// which guarantees a non-increasing loss.
    pub learning_rate: Option<f64>,
}

impl Default for LogRegParams {
    fn default() -> Self {
        Self { lambda: 1.0, epochs: 500, learning_rate: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    pub weights: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    /// Loss before the first epoch, then after each epoch.
    pub losses: Vec<f64>,
    pub learning_rate: f64,
    /// False if any epoch increased the loss.
    pub monotone: bool,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn target(label: Label) -> f64 {
    match label {
        Label::GenuineBug => 1.0,
        Label::FalsePositive => 0.0,
    }
}

impl LogisticRegression {
    fn margin(&self, x: &SparseVector) -> f64 {
        self.bias + x.indices.iter().zip(&x.values).map(|(&i, &v)| self.weights[i] * v).sum::<f64>()
    }

    /// Probability of GenuineBug.
    pub fn predict_proba(&self, x: &SparseVector) -> f64 {
        sigmoid(self.margin(x))
    }

    pub fn predict(&self, x: &SparseVector) -> Label {
        if self.predict_proba(x) >= 0.5 {
            Label::GenuineBug
        } else {
            Label::FalsePositive
        }
    }

    fn loss(&self, xs: &[SparseVector], ys: &[f64], lambda: f64) -> f64 {
        let n = xs.len() as f64;
        let data: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let z = self.margin(x);
                softplus(z) - y * z
            })
            .sum();
        data / n + lambda / (2.0 * n) * self.weights.iter().map(|w| w * w).sum::<f64>()
    }
}

/// Full-batch gradient descent on the L2-penalized mean log loss. GenuineBug is class 1.
pub fn train_logreg(
    features: &[SparseVector],
    labels: &[Label],
    params: &LogRegParams,
) -> Result<(LogisticRegression, TrainingReport), TriageError> {
    if features.len() != labels.len() {
        return Err(TriageError::LengthMismatch(features.len(), labels.len()));
    }
    if features.is_empty() {
        return Err(TriageError::EmptyTrainingSet);
    }
    if !labels.contains(&Label::GenuineBug) || !labels.contains(&Label::FalsePositive) {
        return Err(TriageError::SingleClassTraining);
    }
    let dim = features[0].dim;
    if let Some(x) = features.iter().find(|x| x.dim != dim) {
        return Err(TriageError::DimensionMismatch { expected: dim, got: x.dim });
    }
    let n = features.len() as f64;
    let ys: Vec<f64> = labels.iter().map(|l| target(*l)).collect();
    let smoothness = features.iter().map(|x| x.norm().powi(2) + 1.0).sum::<f64>() / (4.0 * n) + params.lambda / n;
    let lr = params.learning_rate.unwrap_or(1.0 / smoothness);
    let mut model = LogisticRegression { weights: vec![0.0; dim], bias: 0.0 };
    let mut losses = vec![model.loss(features, &ys, params.lambda)];
    let mut monotone = true;
    for _ in 0..params.epochs {
        let mut grad_w: Vec<f64> = model.weights.iter().map(|w| params.lambda / n * w).collect();
        let mut grad_b = 0.0;
        for (x, y) in features.iter().zip(&ys) {
            let residual = (model.predict_proba(x) - y) / n;
            grad_b += residual;
            for (&i, &v) in x.indices.iter().zip(&x.values) {
                grad_w[i] += residual * v;
            }
        }
        for (w, g) in model.weights.iter_mut().zip(&grad_w) {
            *w -= lr * g;
        }
        model.bias -= lr * grad_b;
        let loss = model.loss(features, &ys, params.lambda);
        let previous = *losses.last().expect("initial loss");
        if loss > previous + 1e-12 * previous.abs().max(1.0) {
            monotone = false;
        }
        losses.push(loss);
    }
    Ok((model, TrainingReport { losses, learning_rate: lr, monotone }))
}

fn cosine(a: &SparseVector, b: &SparseVector) -> f64 {
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        0.0
    } else {
        a.dot(b) / denom
    }
}

/// Majority label among the `k` training points with the smallest cosine
/// distance. Equal distances keep training order; a tied vote goes to FalsePositive.
pub fn knn_predict(
    train: &[SparseVector],
    labels: &[Label],
    query: &SparseVector,
    k: usize,
) -> Result<Label, TriageError> {
    if train.len() != labels.len() {
        return Err(TriageError::LengthMismatch(train.len(), labels.len()));
    }
    if train.is_empty() {
        return Err(TriageError::EmptyTrainingSet);
    }
    if k == 0 || k > train.len() {
        return Err(TriageError::InvalidK { k, n: train.len() });
    }
    let mut order: Vec<(f64, usize)> = train.iter().enumerate().map(|(i, x)| (1.0 - cosine(x, query), i)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let genuine = order[..k].iter().filter(|(_, i)| labels[*i] == Label::GenuineBug).count();
    Ok(if 2 * genuine > k { Label::GenuineBug } else { Label::FalsePositive })
}
