#![allow(dead_code)]

use tripclass::corpus::{Review, ReviewSet, TripLabel};
use tripclass::labeling::BinaryLabel;
use tripclass::rng::SeededRng;

pub fn review(id: &str, user: &str, city: &str, year: i32, month: u8, label: Option<TripLabel>) -> Review {
    Review {
        id: id.into(),
        user_id: user.into(),
        poi_id: format!("poi-{id}"),
        city: city.into(),
        year,
        month,
        text: format!("review {id}"),
        label,
        lang: None,
        lang_confidence: None,
    }
}

/// Twelve reviews covering assignment, no source, ties and grouping keys.
/// Returns the set and the labels expected after propagation.
pub fn augmentation_fixture() -> (ReviewSet, Vec<(&'static str, Option<TripLabel>)>, usize) {
    use TripLabel::*;
    let set = ReviewSet::from_records(vec![
        // Single work source: the unlabeled visit gets work.
        review("a01", "u1", "Lisbon", 2019, 5, Some(Work)),
        review("a02", "u1", "Lisbon", 2019, 5, None),
        // Two family vs one friends: strict majority family.
        review("a03", "u2", "Rome", 2018, 7, Some(Family)),
        review("a04", "u2", "Rome", 2018, 7, Some(Family)),
        review("a05", "u2", "Rome", 2018, 7, Some(Friends)),
        review("a06", "u2", "Rome", 2018, 7, None),
        // One romantic vs one alone: tie stays unlabeled.
        review("a07", "u3", "Cannes", 2020, 2, Some(Romantic)),
        review("a08", "u3", "Cannes", 2020, 2, Some(Alone)),
        review("a09", "u3", "Cannes", 2020, 2, None),
        // Different month: no source.
        review("a10", "u1", "Lisbon", 2019, 6, None),
        // City key ignores case and surrounding space.
        review("a11", "u4", " LONDON ", 2021, 1, None),
        review("a12", "u4", "london", 2021, 1, Some(Work)),
    ]);
    let expected = vec![
        ("a01", Some(Work)),
        ("a02", Some(Work)),
        ("a03", Some(Family)),
        ("a04", Some(Family)),
        ("a05", Some(Friends)),
        ("a06", Some(Family)),
        ("a07", Some(Romantic)),
        ("a08", Some(Alone)),
        ("a09", None),
        ("a10", None),
        ("a11", Some(Work)),
        ("a12", Some(Work)),
    ];
    (set, expected, 3)
}

/// Reference F1 computed by counting, independent of the library.
pub fn oracle_f1(golds: &[BinaryLabel], preds: &[BinaryLabel]) -> (f64, f64) {
    let f1_for = |c: BinaryLabel| {
        let tp = golds.iter().zip(preds).filter(|(g, p)| **g == c && **p == c).count() as f64;
        let fp = golds.iter().zip(preds).filter(|(g, p)| **g != c && **p == c).count() as f64;
        let fn_ = golds.iter().zip(preds).filter(|(g, p)| **g == c && **p != c).count() as f64;
        let prec = if tp + fp == 0.0 { 0.0 } else { tp / (tp + fp) };
        let rec = if tp + fn_ == 0.0 { 0.0 } else { tp / (tp + fn_) };
        if prec + rec == 0.0 {
            0.0
        } else {
            2.0 * prec * rec / (prec + rec)
        }
    };
    let macro_ = (f1_for(BinaryLabel::Work) + f1_for(BinaryLabel::Leisure)) / 2.0;
    let correct = golds.iter().zip(preds).filter(|(g, p)| g == p).count() as f64;
    (macro_, correct / golds.len() as f64)
}

pub fn random_labels(rng: &mut SeededRng, n: usize, p_work: f64) -> Vec<BinaryLabel> {
    (0..n)
        .map(|_| if rng.bernoulli(p_work) { BinaryLabel::Work } else { BinaryLabel::Leisure })
        .collect()
}
