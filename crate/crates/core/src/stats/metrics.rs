use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::labeling::BinaryLabel;

/// Binary confusion counts, `counts[gold][predicted]` indexed by
/// [`BinaryLabel::index`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 2]; 2],
}

impl ConfusionMatrix {
    pub fn add(&mut self, gold: BinaryLabel, pred: BinaryLabel) {
        self.counts[gold.index()][pred.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn tp(&self, class: BinaryLabel) -> u64 {
        self.counts[class.index()][class.index()]
    }

    pub fn fp(&self, class: BinaryLabel) -> u64 {
        self.counts[class.other().index()][class.index()]
    }

    pub fn fn_(&self, class: BinaryLabel) -> u64 {
        self.counts[class.index()][class.other().index()]
    }

    pub fn tn(&self, class: BinaryLabel) -> u64 {
        self.counts[class.other().index()][class.other().index()]
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        (self.counts[0][0] + self.counts[1][1]) as f64 / total as f64
    }

    pub fn f1(&self, class: BinaryLabel) -> f64 {
        f1_from_counts(self.tp(class), self.fp(class), self.fn_(class))
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// `2PR/(P+R)`, with any zero denominator giving 0.
fn f1_from_counts(tp: u64, fp: u64, fn_: u64) -> f64 {
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn confusion(golds: &[BinaryLabel], preds: &[BinaryLabel]) -> Result<ConfusionMatrix, StatsError> {
    if golds.len() != preds.len() {
        return Err(StatsError::LengthMismatch {
            left: golds.len(),
            right: preds.len(),
        });
    }
    if golds.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut cm = ConfusionMatrix::default();
    for (&g, &p) in golds.iter().zip(preds) {
        cm.add(g, p);
    }
    Ok(cm)
}

/// Unweighted mean of the per-class F1 scores.
pub fn macro_f1(cm: &ConfusionMatrix) -> f64 {
    BinaryLabel::ALL.iter().map(|&c| cm.f1(c)).sum::<f64>() / 2.0
}

/// F1 over counts pooled across both classes.
pub fn micro_f1(cm: &ConfusionMatrix) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for c in BinaryLabel::ALL {
        tp += cm.tp(c);
        fp += cm.fp(c);
        fn_ += cm.fn_(c);
    }
    f1_from_counts(tp, fp, fn_)
}

#[cfg(test)]
mod tests {
    use super::*;
    use BinaryLabel::{Leisure as L, Work as W};

    #[test]
    fn hand_enumerated_matrix() {
        let cm = confusion(&[W, W, L, L], &[W, L, L, L]).unwrap();
        assert_eq!((cm.tp(W), cm.fp(W), cm.fn_(W)), (1, 0, 1));
        assert_eq!((cm.tp(L), cm.fp(L), cm.fn_(L)), (2, 1, 0));
        assert!((macro_f1(&cm) - 11.0 / 15.0).abs() < 1e-15);
        assert_eq!(micro_f1(&cm), 0.75);
    }

    #[test]
    fn perfect_and_errors() {
        let golds = [W, L, L, W, L];
        let cm = confusion(&golds, &golds).unwrap();
        assert_eq!(cm.fp(W) + cm.fn_(W), 0);
        assert_eq!((macro_f1(&cm), micro_f1(&cm)), (1.0, 1.0));
        assert_eq!(confusion(&[W], &[W, L]), Err(StatsError::LengthMismatch { left: 1, right: 2 }));
        assert_eq!(confusion(&[], &[]), Err(StatsError::Empty));
    }

    #[test]
    fn majority_predictor() {
        let mut golds = vec![L; 90];
        golds.extend([W; 10]);
        let cm = confusion(&golds, &[L; 100]).unwrap();
        assert!((cm.f1(L) - 18.0 / 19.0).abs() < 1e-15);
        assert_eq!(cm.f1(W), 0.0);
        assert!((macro_f1(&cm) - 9.0 / 19.0).abs() < 1e-15);
        assert!((micro_f1(&cm) - 0.9).abs() < 1e-15);
    }
}
