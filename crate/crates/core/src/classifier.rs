//! Hashed bag-of-n-grams linear classifier for work/leisure prediction.
//!
//! Model file layout (`TPC1`, all integers and floats little-endian):
//!
//! | field                           | type            |
//! |---------------------------------|-----------------|
//! | magic `TPC1`                    | 4 bytes         |
//! | hash_dim                        | u32             |
//! | ngram                           | u32             |
//! | epochs                          | u32             |
//! | learning_rate                   | f64             |
//! | seed                            | u64             |
//! | prior work, prior leisure       | f64, f64        |
//! | bias work, bias leisure         | f64, f64        |
//! | nnz (non-zero weight rows)      | u32             |
//! | nnz x (index u32, work f64, leisure f64), ascending index |  |
//!
//! Rows whose two weights are both zero are omitted.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hashing::{bucket, sparse_normalized};
use crate::labeling::BinaryLabel;
use crate::rng::SeededRng;

const MAGIC: &[u8; 4] = b"TPC1";

/// Sparse feature vector: `(bucket, value)` pairs sorted by bucket.
pub type SparseVector = Vec<(usize, f64)>;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("training data must contain both work and leisure examples")]
    SingleClassTrainingSet,
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("corrupt model file: {0}")]
    CorruptModelFile(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, ClassifierError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub hash_dim: usize,
    pub ngram: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            hash_dim: 1 << 21,
            ngram: 2,
            epochs: 5,
            learning_rate: 0.1,
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.hash_dim.is_power_of_two() || self.hash_dim > u32::MAX as usize {
            return Err(ClassifierError::InvalidHyperparams(format!(
                "hash_dim {} is not a power of two that fits in u32",
                self.hash_dim
            )));
        }
        if self.epochs == 0 {
            return Err(ClassifierError::InvalidHyperparams("epochs must be at least 1".into()));
        }
        if self.ngram == 0 {
            return Err(ClassifierError::InvalidHyperparams("ngram must be at least 1".into()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(ClassifierError::InvalidHyperparams(format!(
                "learning_rate {} must be positive",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Lowercases and splits on runs of non-alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Hashes word n-grams of order `1..=ngram` (tokens joined by a single space)
/// into `hash_dim` buckets; returns L2-normalized counts.
pub fn featurize(tokens: &[String], hash_dim: usize, ngram: usize) -> SparseVector {
    let mut buckets = Vec::with_capacity(tokens.len() * ngram);
    let mut buf = String::new();
    for n in 1..=ngram {
        for window in tokens.windows(n) {
            buf.clear();
            for (i, t) in window.iter().enumerate() {
                if i > 0 {
                    buf.push(' ');
                }
                buf.push_str(t);
            }
            buckets.push(bucket(buf.as_bytes(), hash_dim));
        }
    }
    sparse_normalized(buckets)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: BinaryLabel,
    /// Probability of `label`.
    pub score: f64,
}

/// Gradient of the logistic loss of one example.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    /// `(bucket, [d work, d leisure])`.
    pub weights: Vec<(usize, [f64; 2])>,
    pub bias: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    pub hyperparams: Hyperparams,
    /// Row-major `[hash_dim x 2]`, columns ordered work, leisure.
    weights: Vec<f64>,
    bias: [f64; 2],
    priors: [f64; 2],
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl ClassifierModel {
    /// All-zero model; used as the starting point of training.
    pub fn zeros(hyperparams: Hyperparams, priors: [f64; 2]) -> Result<Self> {
        hyperparams.validate()?;
        Ok(Self {
            hyperparams,
            weights: vec![0.0; hyperparams.hash_dim * 2],
            bias: [0.0; 2],
            priors,
        })
    }

    pub fn hash_dim(&self) -> usize {
        self.hyperparams.hash_dim
    }

    pub fn priors(&self) -> [f64; 2] {
        self.priors
    }

    pub fn weight(&self, bucket: usize, class: BinaryLabel) -> f64 {
        self.weights[bucket * 2 + class.index()]
    }

    pub fn set_weight(&mut self, bucket: usize, class: BinaryLabel, value: f64) {
        self.weights[bucket * 2 + class.index()] = value;
    }

    pub fn bias(&self, class: BinaryLabel) -> f64 {
        self.bias[class.index()]
    }

    pub fn set_bias(&mut self, class: BinaryLabel, value: f64) {
        self.bias[class.index()] = value;
    }

    pub fn features(&self, text: &str) -> SparseVector {
        featurize(&tokenize(text), self.hyperparams.hash_dim, self.hyperparams.ngram)
    }

    /// Work-minus-leisure linear score.
    pub fn margin(&self, x: &[(usize, f64)]) -> f64 {
        let mut z = self.bias[0] - self.bias[1];
        for &(i, v) in x {
            z += (self.weights[2 * i] - self.weights[2 * i + 1]) * v;
        }
        z
    }

    /// Negative log-likelihood of `label` given features `x`.
    pub fn example_loss(&self, x: &[(usize, f64)], label: BinaryLabel) -> f64 {
        let z = self.margin(x);
        let y = if label == BinaryLabel::Work { 1.0 } else { 0.0 };
        z.max(0.0) + (-z.abs()).exp().ln_1p() - y * z
    }

    pub fn example_gradient(&self, x: &[(usize, f64)], label: BinaryLabel) -> Gradient {
        let y = if label == BinaryLabel::Work { 1.0 } else { 0.0 };
        let g = sigmoid(self.margin(x)) - y;
        Gradient {
            weights: x.iter().map(|&(i, v)| (i, [g * v, -g * v])).collect(),
            bias: [g, -g],
        }
    }

    fn sgd_step(&mut self, x: &[(usize, f64)], label: BinaryLabel, lr: f64) {
        let y = if label == BinaryLabel::Work { 1.0 } else { 0.0 };
        let g = sigmoid(self.margin(x)) - y;
        for &(i, v) in x {
            self.weights[2 * i] -= lr * g * v;
            self.weights[2 * i + 1] += lr * g * v;
        }
        self.bias[0] -= lr * g;
        self.bias[1] += lr * g;
    }

    pub fn predict_features(&self, x: &[(usize, f64)]) -> Prediction {
        if x.is_empty() {
            let [work, leisure] = self.priors;
            return if work > leisure {
                Prediction { label: BinaryLabel::Work, score: work }
            } else {
                Prediction { label: BinaryLabel::Leisure, score: leisure }
            };
        }
        let p_work = sigmoid(self.margin(x));
        if p_work > 0.5 {
            Prediction { label: BinaryLabel::Work, score: p_work }
        } else {
            Prediction { label: BinaryLabel::Leisure, score: 1.0 - p_work }
        }
    }

    pub fn predict(&self, text: &str) -> Prediction {
        self.predict_features(&self.features(text))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let hp = &self.hyperparams;
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(hp.hash_dim as u32).to_le_bytes());
        out.extend_from_slice(&(hp.ngram as u32).to_le_bytes());
        out.extend_from_slice(&(hp.epochs as u32).to_le_bytes());
        out.extend_from_slice(&hp.learning_rate.to_le_bytes());
        out.extend_from_slice(&hp.seed.to_le_bytes());
        for v in self.priors.iter().chain(&self.bias) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let rows: Vec<usize> = (0..hp.hash_dim)
            .filter(|&i| self.weights[2 * i] != 0.0 || self.weights[2 * i + 1] != 0.0)
            .collect();
        out.extend_from_slice(&(rows.len() as u32).to_le_bytes());
        for i in rows {
            out.extend_from_slice(&(i as u32).to_le_bytes());
            out.extend_from_slice(&self.weights[2 * i].to_le_bytes());
            out.extend_from_slice(&self.weights[2 * i + 1].to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let corrupt = |m: &str| ClassifierError::CorruptModelFile(m.to_string());
        let mut reader = ByteReader { buf: bytes };
        if reader.take(4).ok_or_else(|| corrupt("truncated"))? != MAGIC {
            return Err(corrupt("bad magic"));
        }
        let hash_dim = reader.u32().ok_or_else(|| corrupt("truncated"))? as usize;
        let ngram = reader.u32().ok_or_else(|| corrupt("truncated"))? as usize;
        let epochs = reader.u32().ok_or_else(|| corrupt("truncated"))? as usize;
        let learning_rate = reader.f64().ok_or_else(|| corrupt("truncated"))?;
        let seed = reader.u64().ok_or_else(|| corrupt("truncated"))?;
        let mut header = [0.0; 4];
        for v in &mut header {
            *v = reader.f64().ok_or_else(|| corrupt("truncated"))?;
        }
        let hyperparams = Hyperparams {
            hash_dim,
            ngram,
            epochs,
            learning_rate,
            seed,
        };
        hyperparams
            .validate()
            .map_err(|e| ClassifierError::CorruptModelFile(e.to_string()))?;
        if header.iter().any(|v| !v.is_finite()) {
            return Err(corrupt("non-finite prior or bias"));
        }
        let mut model = Self::zeros(hyperparams, [header[0], header[1]])?;
        model.bias = [header[2], header[3]];
        let nnz = reader.u32().ok_or_else(|| corrupt("truncated"))? as usize;
        let mut prev: Option<usize> = None;
        for _ in 0..nnz {
            let i = reader.u32().ok_or_else(|| corrupt("truncated"))? as usize;
            let w = reader.f64().ok_or_else(|| corrupt("truncated"))?;
            let l = reader.f64().ok_or_else(|| corrupt("truncated"))?;
            if i >= hash_dim || prev.is_some_and(|p| p >= i) {
                return Err(corrupt("weight rows out of order or out of range"));
            }
            if !w.is_finite() || !l.is_finite() {
                return Err(corrupt("non-finite weight"));
            }
            prev = Some(i);
            model.weights[2 * i] = w;
            model.weights[2 * i + 1] = l;
        }
        if !reader.buf.is_empty() {
            return Err(corrupt("trailing bytes"));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| ClassifierError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| ClassifierError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_bytes(&bytes)
    }
}

struct ByteReader<'a> {
    buf: &'a [u8],
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        if self.buf.len() < n {
            return None;
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Some(head)
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }

    fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }

    fn f64(&mut self) -> Option<f64> {
        self.take(8).map(|b| f64::from_le_bytes(b.try_into().unwrap()))
    }
}

/// Trains with per-example SGD on the logistic loss. Examples are reshuffled
/// every epoch and the learning rate decays linearly to zero over the run.
pub fn train(examples: &[(String, BinaryLabel)], hyperparams: &Hyperparams) -> Result<ClassifierModel> {
    train_traced(examples, hyperparams).map(|(m, _)| m)
}

/// As [`train`], also returning the mean loss of each epoch (each example's
/// loss measured just before its update).
pub fn train_traced(
    examples: &[(String, BinaryLabel)],
    hyperparams: &Hyperparams,
) -> Result<(ClassifierModel, Vec<f64>)> {
    hyperparams.validate()?;
    let n_work = examples.iter().filter(|(_, l)| *l == BinaryLabel::Work).count();
    if n_work == 0 || n_work == examples.len() {
        return Err(ClassifierError::SingleClassTrainingSet);
    }
    let n = examples.len() as f64;
    let priors = [n_work as f64 / n, (examples.len() - n_work) as f64 / n];
    let mut model = ClassifierModel::zeros(*hyperparams, priors)?;
    let featurized: Vec<(SparseVector, BinaryLabel)> = examples
        .iter()
        .map(|(text, label)| (model.features(text), *label))
        .collect();

    let mut rng = SeededRng::new(hyperparams.seed);
    let mut order: Vec<usize> = (0..featurized.len()).collect();
    let total_steps = (hyperparams.epochs * featurized.len()).max(1) as f64;
    let mut step = 0usize;
    let mut losses = Vec::with_capacity(hyperparams.epochs);
    for _ in 0..hyperparams.epochs {
        rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        for &i in &order {
            let (x, label) = &featurized[i];
            let lr = hyperparams.learning_rate * (1.0 - step as f64 / total_steps);
            step += 1;
            loss_sum += model.example_loss(x, *label);
            model.sgd_step(x, *label, lr);
        }
        losses.push(loss_sum / n);
    }
    Ok((model, losses))
}
