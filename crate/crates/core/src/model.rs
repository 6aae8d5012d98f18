//! L2-regularized logistic regression trained by stochastic gradient descent,
//! plus binary classification metrics and stratified hold-out splits.
//!
//! The objective is the mean log loss plus `(l2 / 2) * ||w||^2`; the bias is
//! not penalized. Step sizes decay per epoch as `learning_rate / sqrt(epoch + 1)`.

use crate::corpus::Corpus;
use crate::rng::{derive_seed, SplitMix64};
use crate::textprep::DocTermMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("training data must contain both classes")]
    SingleClass,
    #[error("non-finite feature value in row {0}")]
    NonFinite(usize),
    #[error("invalid hyperparameters: {0}")]
    Hyperparams(String),
    #[error("matrix has {actual} columns, model expects {expected}")]
    Dimension { expected: usize, actual: usize },
    #[error("matrix was built with feature space {actual}, model is bound to {expected}")]
    FeatureSpaceMismatch { expected: String, actual: String },
    #[error("prediction and truth lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("cannot evaluate zero examples")]
    Empty,
    #[error("invalid hold-out split: {0}")]
    Split(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    /// One update per example, order reshuffled each epoch.
    #[default]
    Sgd,
    /// One update per epoch from the exact gradient.
    FullBatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainHyperparams {
    pub l2_penalty: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub shuffle_seed: u64,
    pub optimizer: Optimizer,
}

impl Default for TrainHyperparams {
    fn default() -> Self {
        Self { l2_penalty: 1e-4, epochs: 30, learning_rate: 0.1, shuffle_seed: 0, optimizer: Optimizer::Sgd }
    }
}

impl TrainHyperparams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::Hyperparams(m.to_owned()));
        if !(self.l2_penalty.is_finite() && self.l2_penalty >= 0.0) {
            return bad("l2_penalty must be finite and non-negative");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be finite and positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.learning_rate * self.l2_penalty >= 1.0 {
            return bad("learning_rate * l2_penalty must be below 1");
        }
        Ok(())
    }

    fn step_size(&self, epoch: usize) -> f64 {
        self.learning_rate / ((epoch + 1) as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub feature_space: String,
    pub hyperparams: TrainHyperparams,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

// log(1 + exp(z)) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Regularized mean log loss of `(weights, bias)` on `matrix`.
pub fn objective(weights: &[f64], bias: f64, matrix: &DocTermMatrix, l2: f64) -> f64 {
    let n = matrix.n_rows().max(1) as f64;
    let data: f64 = matrix
        .rows
        .iter()
        .zip(&matrix.labels)
        .map(|(row, &y)| {
            let z = row.dot(weights) + bias;
            softplus(z) - f64::from(y) * z
        })
        .sum();
    data / n + 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>()
}

/// Exact gradient of [`objective`] with respect to `(weights, bias)`.
pub fn objective_gradient(weights: &[f64], bias: f64, matrix: &DocTermMatrix, l2: f64) -> (Vec<f64>, f64) {
    let n = matrix.n_rows().max(1) as f64;
    let mut gw: Vec<f64> = weights.iter().map(|w| l2 * w).collect();
    let mut gb = 0.0;
    for (row, &y) in matrix.rows.iter().zip(&matrix.labels) {
        let r = (sigmoid(row.dot(weights) + bias) - f64::from(y)) / n;
        for (&i, v) in row.indices.iter().zip(&row.values) {
            gw[i as usize] += r * v;
        }
        gb += r;
    }
    (gw, gb)
}

fn check_trainable(matrix: &DocTermMatrix) -> Result<(), ModelError> {
    let pos = matrix.labels.iter().filter(|&&y| y == 1).count();
    if pos == 0 || pos == matrix.n_rows() {
        return Err(ModelError::SingleClass);
    }
    for (i, row) in matrix.rows.iter().enumerate() {
        if row.values.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite(i));
        }
    }
    Ok(())
}

pub fn train(matrix: &DocTermMatrix, hp: &TrainHyperparams) -> Result<TrainedModel, ModelError> {
    hp.validate()?;
    check_trainable(matrix)?;
    let (weights, bias) = match hp.optimizer {
        Optimizer::Sgd => sgd(matrix, hp),
        Optimizer::FullBatch => full_batch(matrix, hp),
    };
    if weights.iter().any(|w| !w.is_finite()) || !bias.is_finite() {
        return Err(ModelError::Hyperparams("training diverged".into()));
    }
    Ok(TrainedModel { weights, bias, feature_space: matrix.feature_space.clone(), hyperparams: *hp })
}

fn sgd(matrix: &DocTermMatrix, hp: &TrainHyperparams) -> (Vec<f64>, f64) {
    // Weights are stored as scale * v so the L2 shrinkage is O(1) per step.
    let mut v = vec![0.0; matrix.n_cols];
    let mut scale = 1.0;
    let mut bias = 0.0;
    let mut order: Vec<usize> = (0..matrix.n_rows()).collect();
    for epoch in 0..hp.epochs {
        let mut rng = SplitMix64::new(derive_seed(hp.shuffle_seed, &[epoch as u64]));
        rng.shuffle(&mut order);
        let eta = hp.step_size(epoch);
        for &i in &order {
            let row = &matrix.rows[i];
            let z = scale * row.dot(&v) + bias;
            let g = sigmoid(z) - f64::from(matrix.labels[i]);
            scale *= 1.0 - eta * hp.l2_penalty;
            let step = eta * g / scale;
            for (&j, x) in row.indices.iter().zip(&row.values) {
                v[j as usize] -= step * x;
            }
            bias -= eta * g;
            if scale < 1e-9 {
                v.iter_mut().for_each(|w| *w *= scale);
                scale = 1.0;
            }
        }
    }
    (v.into_iter().map(|w| w * scale).collect(), bias)
}

fn full_batch(matrix: &DocTermMatrix, hp: &TrainHyperparams) -> (Vec<f64>, f64) {
    let mut w = vec![0.0; matrix.n_cols];
    let mut b = 0.0;
    for epoch in 0..hp.epochs {
        let eta = hp.step_size(epoch);
        let (gw, gb) = objective_gradient(&w, b, matrix, hp.l2_penalty);
        w.iter_mut().zip(&gw).for_each(|(w, g)| *w -= eta * g);
        b -= eta * gb;
    }
    (w, b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictions {
    pub scores: Vec<f64>,
    pub labels: Vec<u8>,
}

impl TrainedModel {
    /// `score = sigmoid(w.x + b)`, label 1 iff `score >= 0.5`.
    pub fn predict(&self, matrix: &DocTermMatrix) -> Result<Predictions, ModelError> {
        if matrix.n_cols != self.weights.len() {
            return Err(ModelError::Dimension { expected: self.weights.len(), actual: matrix.n_cols });
        }
        if matrix.feature_space != self.feature_space {
            return Err(ModelError::FeatureSpaceMismatch { expected: self.feature_space.clone(), actual: matrix.feature_space.clone() });
        }
        let scores: Vec<f64> = matrix.rows.iter().map(|r| sigmoid(r.dot(&self.weights) + self.bias)).collect();
        let labels = scores.iter().map(|&s| u8::from(s >= 0.5)).collect();
        Ok(Predictions { scores, labels })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

impl ClassMetrics {
    fn from_counts(hit: usize, false_alarm: usize, miss: usize) -> Self {
        let precision = ratio(hit, hit + false_alarm);
        let recall = ratio(hit, hit + miss);
        Self { precision, recall, f1: f1_score(precision, recall), support: hit + miss }
    }
}

/// Binary metrics with "rejected" (label 1) as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub confusion: Confusion,
    pub rejected: ClassMetrics,
    pub accepted: ClassMetrics,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
}

impl Metrics {
    pub fn from_confusion(c: Confusion) -> Self {
        let rejected = ClassMetrics::from_counts(c.tp, c.fp, c.fn_);
        let accepted = ClassMetrics::from_counts(c.tn, c.fn_, c.fp);
        Self {
            confusion: c,
            rejected,
            accepted,
            macro_precision: (rejected.precision + accepted.precision) / 2.0,
            macro_recall: (rejected.recall + accepted.recall) / 2.0,
            macro_f1: (rejected.f1 + accepted.f1) / 2.0,
            accuracy: ratio(c.tp + c.tn, c.total()),
        }
    }

    /// Headline score: F1 of the rejected class.
    pub fn f1(&self) -> f64 {
        self.rejected.f1
    }
}

pub fn evaluate(predicted: &[u8], truth: &[u8]) -> Result<Metrics, ModelError> {
    if predicted.len() != truth.len() {
        return Err(ModelError::LengthMismatch(predicted.len(), truth.len()));
    }
    if truth.is_empty() {
        return Err(ModelError::Empty);
    }
    let mut c = Confusion::default();
    for (&p, &t) in predicted.iter().zip(truth) {
        match (p != 0, t != 0) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(Metrics::from_confusion(c))
}

/// Stratified random split into `(train, test)` with
/// `|test| = round(eval_fraction * |corpus|)`. The test size is allotted to
/// the classes by largest remainder so both sides keep the class ratio.
pub fn holdout_split(corpus: &Corpus, eval_fraction: f64, seed: u64) -> Result<(Corpus, Corpus), ModelError> {
    if !(eval_fraction > 0.0 && eval_fraction < 1.0) {
        return Err(ModelError::Split(format!("fraction {eval_fraction} not in (0, 1)")));
    }
    let n = corpus.len();
    let n_test = (eval_fraction * n as f64).round() as usize;
    if n < 2 || n_test == 0 || n_test == n {
        return Err(ModelError::Split(format!("{n} records leave an empty side at fraction {eval_fraction}")));
    }
    let by_class: [Vec<usize>; 2] = [false, true].map(|rej| (0..n).filter(|&i| corpus.records()[i].rejected == rej).collect());
    let exact: Vec<f64> = by_class.iter().map(|c| n_test as f64 * c.len() as f64 / n as f64).collect();
    let mut quota: Vec<usize> = exact.iter().map(|q| q.floor() as usize).collect();
    let mut leftover = n_test - quota.iter().sum::<usize>();
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| (exact[b] - quota[b] as f64).total_cmp(&(exact[a] - quota[a] as f64)).then(a.cmp(&b)));
    for &k in order.iter().cycle().take(4) {
        if leftover == 0 {
            break;
        }
        if quota[k] < by_class[k].len() {
            quota[k] += 1;
            leftover -= 1;
        }
    }
    let mut in_test = vec![false; n];
    for (k, members) in by_class.iter().enumerate() {
        let mut rng = SplitMix64::new(derive_seed(seed, &[0x4011, k as u64]));
        for j in rng.sample_indices(members.len(), quota[k]) {
            in_test[members[j]] = true;
        }
    }
    let train: Vec<bool> = in_test.iter().map(|t| !t).collect();
    Ok((corpus.keep_mask(&train), corpus.keep_mask(&in_test)))
}

/// Majority-class accuracy of a label vector.
pub fn majority_baseline(labels: &[u8]) -> f64 {
    let pos = labels.iter().filter(|&&y| y == 1).count();
    ratio(pos.max(labels.len() - pos), labels.len())
}
