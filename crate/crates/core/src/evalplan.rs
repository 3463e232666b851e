//! Cross-validation plans: seeded stratified k-fold assignment and per-fold
//! undersampling of the majority class.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::labeling::BinaryLabel;
use crate::rng::SeededRng;

pub const DEFAULT_K: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("fold count must be at least 2 (got {0})")]
    InvalidFoldCount(usize),
    #[error("{n} instances cannot fill {k} folds")]
    TooFewInstances { n: usize, k: usize },
    #[error("class `{0}` has no instances; stratification needs both classes")]
    EmptyClass(BinaryLabel),
    #[error("training set of fold {fold_index} contains a single class")]
    SingleClassTrainingSet { fold_index: usize },
    #[error("invalid fold plan: {0}")]
    InvalidPlan(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub stratified: bool,
    /// Test indices of each fold, ascending.
    pub folds: Vec<Vec<usize>>,
}

impl FoldPlan {
    pub fn n(&self) -> usize {
        self.folds.iter().map(Vec::len).sum()
    }

    pub fn test_indices(&self, fold: usize) -> &[usize] {
        &self.folds[fold]
    }

    /// Every index not in `fold`, ascending.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        let mut train: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != fold)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        train.sort_unstable();
        train
    }

    /// Checks that the folds partition `0..n` with `k` entries.
    pub fn validate(&self, n: usize) -> Result<(), PlanError> {
        if self.folds.len() != self.k {
            return Err(PlanError::InvalidPlan(format!(
                "k = {} but {} folds present",
                self.k,
                self.folds.len()
            )));
        }
        let mut seen = vec![false; n];
        for idx in self.folds.iter().flatten() {
            match seen.get_mut(*idx) {
                Some(s) if !*s => *s = true,
                Some(_) => return Err(PlanError::InvalidPlan(format!("index {idx} repeated"))),
                None => return Err(PlanError::InvalidPlan(format!("index {idx} out of range"))),
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(PlanError::InvalidPlan(format!("index {missing} unassigned")));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plan serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }

    /// Hex SHA-256 of the JSON form; identifies the plan in reports.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

/// Assigns `labels.len()` instances to `k` folds. Indices are shuffled with
/// the seeded generator (per class when stratified, work first) and dealt
/// round-robin, so fold sizes and per-class fold counts each differ by at
/// most one.
pub fn make_folds(
    labels: &[BinaryLabel],
    k: usize,
    seed: u64,
    stratified: bool,
) -> Result<FoldPlan, PlanError> {
    if k < 2 {
        return Err(PlanError::InvalidFoldCount(k));
    }
    let n = labels.len();
    if n < k {
        return Err(PlanError::TooFewInstances { n, k });
    }
    let mut rng = SeededRng::new(seed);
    let order: Vec<usize> = if stratified {
        let mut order = Vec::with_capacity(n);
        for class in BinaryLabel::ALL {
            let mut members: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
            if members.is_empty() {
                return Err(PlanError::EmptyClass(class));
            }
            rng.shuffle(&mut members);
            order.extend(members);
        }
        order
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut all);
        all
    };

    let mut folds = vec![Vec::with_capacity(n / k + 1); k];
    for (pos, idx) in order.into_iter().enumerate() {
        folds[pos % k].push(idx);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(FoldPlan {
        k,
        seed,
        stratified,
        folds,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalancePlan {
    pub fold_index: usize,
    pub minority: BinaryLabel,
    pub n_mino: usize,
    pub selected_majority: Vec<usize>,
    pub selected_minority: Vec<usize>,
}

impl BalancePlan {
    /// All selected indices, ascending.
    pub fn indices(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self
            .selected_majority
            .iter()
            .chain(&self.selected_minority)
            .copied()
            .collect();
        all.sort_unstable();
        all
    }
}

/// Seed used for balancing fold `fold_index`.
pub fn fold_seed(seed: u64, fold_index: usize) -> u64 {
    seed ^ fold_index as u64
}

/// Keeps every minority-class instance of a training fold and samples the
/// same number of majority-class instances without replacement. When the
/// classes are already equal, everything is kept (work counts as minority).
pub fn balance_train(
    train: &[(usize, BinaryLabel)],
    seed: u64,
    fold_index: usize,
) -> Result<BalancePlan, PlanError> {
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for &(idx, label) in train {
        by_class[label.index()].push(idx);
    }
    if by_class.iter().any(Vec::is_empty) {
        return Err(PlanError::SingleClassTrainingSet { fold_index });
    }
    for v in &mut by_class {
        v.sort_unstable();
    }
    let minority = if by_class[BinaryLabel::Work.index()].len() <= by_class[BinaryLabel::Leisure.index()].len() {
        BinaryLabel::Work
    } else {
        BinaryLabel::Leisure
    };
    let selected_minority = std::mem::take(&mut by_class[minority.index()]);
    let n_mino = selected_minority.len();
    let mut majority = std::mem::take(&mut by_class[minority.other().index()]);
    let mut rng = SeededRng::new(fold_seed(seed, fold_index));
    let mut selected_majority = rng.select_prefix(&mut majority, n_mino).to_vec();
    selected_majority.sort_unstable();
    Ok(BalancePlan {
        fold_index,
        minority,
        n_mino,
        selected_majority,
        selected_minority,
    })
}
