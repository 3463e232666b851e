//! Character n-gram language identification.
//!
//! A multinomial logistic model over hashed character 1- to 4-grams, trained
//! with seeded SGD. Used to keep only English reviews.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Review, ReviewSet};
use crate::hashing::{bucket, sparse_normalized};
use crate::rng::SeededRng;

pub const DEFAULT_HASH_DIM: usize = 1 << 18;
pub const NGRAM_MIN: usize = 1;
pub const NGRAM_MAX: usize = 4;
pub const DEFAULT_THRESHOLD: f64 = 0.5;
const MAGIC: &[u8; 4] = b"LID1";

static BUNDLED_CORPUS: &str = include_str!("../data/langid_corpus.tsv");

#[derive(Debug, Error)]
pub enum LangIdError {
    #[error("training corpus must contain at least two languages")]
    SingleLanguageCorpus,
    #[error("training example {index} has empty text")]
    EmptyText { index: usize },
    #[error("input too short for language detection (need at least 3 characters)")]
    InputTooShort,
    #[error("threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("invalid hash dimension {0} (must be a power of two)")]
    InvalidHashDim(usize),
    #[error("corrupt language model file: {0}")]
    CorruptModelFile(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, LangIdError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LangIdParams {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub hash_dim: usize,
}

impl LangIdParams {
    pub fn new(seed: u64) -> Self {
        Self {
            epochs: 10,
            learning_rate: 0.5,
            seed,
            hash_dim: DEFAULT_HASH_DIM,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LangIdModel {
    languages: Vec<String>,
    hash_dim: usize,
    /// Row-major `[hash_dim x languages]`.
    weights: Vec<f32>,
    pub trained_on: String,
}

/// Per-epoch mean cross-entropy, measured on each example before its update.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTrace {
    pub epoch_losses: Vec<f64>,
}

/// `(language, text)` pairs shipped with the crate: 500 lines each of en, pt,
/// fr, es and it, mixing full review sentences with travel-vocabulary word runs.
pub fn bundled_corpus() -> Vec<(String, String)> {
    BUNDLED_CORPUS
        .lines()
        .filter_map(|l| l.split_once('\t'))
        .map(|(lang, text)| (lang.to_string(), text.to_string()))
        .collect()
}

/// Sparse L2-normalized character n-gram counts, sorted by bucket.
pub fn char_ngram_features(text: &str, hash_dim: usize) -> Vec<(usize, f64)> {
    let mut chars = vec![' '];
    let mut last_space = true;
    for c in text.chars().flat_map(char::to_lowercase) {
        if c.is_whitespace() {
            if !last_space {
                chars.push(' ');
            }
            last_space = true;
        } else {
            chars.push(c);
            last_space = false;
        }
    }
    if !last_space {
        chars.push(' ');
    }

    let mut buckets = Vec::new();
    let mut buf = String::new();
    for n in NGRAM_MIN..=NGRAM_MAX {
        for window in chars.windows(n) {
            buf.clear();
            buf.extend(window);
            buckets.push(bucket(buf.as_bytes(), hash_dim));
        }
    }
    sparse_normalized(buckets)
}

fn softmax_in_place(scores: &mut [f64]) {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        sum += *s;
    }
    for s in scores.iter_mut() {
        *s /= sum;
    }
}

impl LangIdModel {
    pub fn languages(&self) -> &[String] {
        &self.languages
    }

    pub fn hash_dim(&self) -> usize {
        self.hash_dim
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    fn scores(&self, features: &[(usize, f64)]) -> Vec<f64> {
        let k = self.languages.len();
        let mut scores = vec![0.0; k];
        for &(idx, x) in features {
            let row = &self.weights[idx * k..(idx + 1) * k];
            for (s, &w) in scores.iter_mut().zip(row) {
                *s += w as f64 * x;
            }
        }
        scores
    }

    /// Softmax distribution over the known languages, in model order.
    pub fn probabilities(&self, text: &str) -> Result<Vec<(String, f64)>> {
        if text.trim().chars().count() < 3 {
            return Err(LangIdError::InputTooShort);
        }
        let mut scores = self.scores(&char_ngram_features(text, self.hash_dim));
        softmax_in_place(&mut scores);
        Ok(self.languages.iter().cloned().zip(scores).collect())
    }

    /// Most probable language and its probability. Ties go to the language
    /// listed first. Unknown languages still map to the closest known one.
    pub fn detect(&self, text: &str) -> Result<(String, f64)> {
        let probs = self.probabilities(text)?;
        let mut best = 0;
        for (i, (_, p)) in probs.iter().enumerate() {
            if *p > probs[best].1 {
                best = i;
            }
        }
        Ok(probs[best].clone())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.weights.len() * 4);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.hash_dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.languages.len() as u16).to_le_bytes());
        for code in &self.languages {
            out.push(code.len() as u8);
            out.extend_from_slice(code.as_bytes());
        }
        for w in &self.weights {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let corrupt = |m: &str| LangIdError::CorruptModelFile(m.to_string());
        let mut cur = bytes;
        let mut take = |n: usize| -> Result<&[u8]> {
            if cur.len() < n {
                return Err(corrupt("truncated"));
            }
            let (head, rest) = cur.split_at(n);
            cur = rest;
            Ok(head)
        };
        if take(4)? != MAGIC {
            return Err(corrupt("bad magic"));
        }
        let hash_dim = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        if !hash_dim.is_power_of_two() {
            return Err(corrupt("hash_dim is not a power of two"));
        }
        let count = u16::from_le_bytes(take(2)?.try_into().unwrap()) as usize;
        if count < 2 {
            return Err(corrupt("fewer than two languages"));
        }
        let mut languages = Vec::with_capacity(count);
        for _ in 0..count {
            let len = take(1)?[0] as usize;
            let code = std::str::from_utf8(take(len)?).map_err(|_| corrupt("language code is not UTF-8"))?;
            languages.push(code.to_string());
        }
        let n_weights = hash_dim * count;
        let raw = take(n_weights * 4)?;
        let weights: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(corrupt("non-finite weight"));
        }
        if !cur.is_empty() {
            return Err(corrupt("trailing bytes"));
        }
        Ok(Self {
            languages,
            hash_dim,
            weights,
            trained_on: "model file".to_string(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| LangIdError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| LangIdError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let mut model = Self::from_bytes(&bytes)?;
        model.trained_on = path.display().to_string();
        Ok(model)
    }
}

pub fn train_langid(corpus: &[(String, String)], params: &LangIdParams) -> Result<LangIdModel> {
    train_langid_traced(corpus, params).map(|(m, _)| m)
}

pub fn train_langid_traced(
    corpus: &[(String, String)],
    params: &LangIdParams,
) -> Result<(LangIdModel, TrainingTrace)> {
    if !params.hash_dim.is_power_of_two() {
        return Err(LangIdError::InvalidHashDim(params.hash_dim));
    }
    if let Some(index) = corpus.iter().position(|(_, t)| t.trim().is_empty()) {
        return Err(LangIdError::EmptyText { index });
    }
    let mut languages: Vec<String> = corpus.iter().map(|(l, _)| l.clone()).collect();
    languages.sort();
    languages.dedup();
    if languages.len() < 2 {
        return Err(LangIdError::SingleLanguageCorpus);
    }
    let k = languages.len();
    let examples: Vec<(Vec<(usize, f64)>, usize)> = corpus
        .iter()
        .map(|(lang, text)| {
            let y = languages.binary_search(lang).expect("language indexed");
            (char_ngram_features(text, params.hash_dim), y)
        })
        .collect();

    let mut model = LangIdModel {
        languages,
        hash_dim: params.hash_dim,
        weights: vec![0.0; params.hash_dim * k],
        trained_on: format!("{} examples, seed {}", corpus.len(), params.seed),
    };
    let mut rng = SeededRng::new(params.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let total_steps = (params.epochs * examples.len()).max(1) as f64;
    let mut step = 0usize;
    let mut epoch_losses = Vec::with_capacity(params.epochs);
    for _ in 0..params.epochs {
        rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        for &i in &order {
            let (x, y) = &examples[i];
            let lr = params.learning_rate * (1.0 - step as f64 / total_steps);
            step += 1;
            let mut probs = model.scores(x);
            softmax_in_place(&mut probs);
            loss_sum -= probs[*y].max(f64::MIN_POSITIVE).ln();
            for &(idx, xv) in x {
                let row = &mut model.weights[idx * k..(idx + 1) * k];
                for (c, w) in row.iter_mut().enumerate() {
                    let target = if c == *y { 1.0 } else { 0.0 };
                    *w += (lr * (target - probs[c]) * xv) as f32;
                }
            }
        }
        epoch_losses.push(loss_sum / examples.len() as f64);
    }
    Ok((model, TrainingTrace { epoch_losses }))
}

/// Fills `lang` and `lang_confidence` on every record. Records too short to
/// classify get both fields cleared.
pub fn annotate_languages(set: &ReviewSet, model: &LangIdModel) -> ReviewSet {
    use rayon::prelude::*;
    let records: Vec<Review> = set
        .records()
        .par_iter()
        .map(|r| {
            let mut r = r.clone();
            match model.detect(&r.text) {
                Ok((lang, p)) => {
                    r.lang = Some(lang);
                    r.lang_confidence = Some(p);
                }
                Err(_) => {
                    r.lang = None;
                    r.lang_confidence = None;
                }
            }
            r
        })
        .collect();
    set.with_records(records)
}

fn check_threshold(threshold: f64) -> Result<()> {
    if (0.0..=1.0).contains(&threshold) {
        Ok(())
    } else {
        Err(LangIdError::InvalidThreshold(threshold))
    }
}

/// Keeps reviews whose existing annotation is `en` with confidence at least
/// `threshold`. A missing confidence counts as certain.
pub fn filter_by_annotation(set: &ReviewSet, threshold: f64) -> Result<ReviewSet> {
    check_threshold(threshold)?;
    let records = set
        .iter()
        .filter(|r| r.lang.as_deref() == Some("en") && r.lang_confidence.unwrap_or(1.0) >= threshold)
        .cloned()
        .collect();
    Ok(set.with_records(records))
}

/// Detects the language of every review and keeps the English ones.
pub fn filter_english(set: &ReviewSet, model: &LangIdModel, threshold: f64) -> Result<ReviewSet> {
    check_threshold(threshold)?;
    filter_by_annotation(&annotate_languages(set, model), threshold)
}
