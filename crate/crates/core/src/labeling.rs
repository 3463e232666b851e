//! Trip-label augmentation and the work/leisure collapse.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{Review, ReviewSet, TripLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinaryLabel {
    Work,
    Leisure,
}

impl BinaryLabel {
    pub const ALL: [BinaryLabel; 2] = [BinaryLabel::Work, BinaryLabel::Leisure];

    pub fn as_str(self) -> &'static str {
        match self {
            BinaryLabel::Work => "work",
            BinaryLabel::Leisure => "leisure",
        }
    }

    pub fn index(self) -> usize {
        match self {
            BinaryLabel::Work => 0,
            BinaryLabel::Leisure => 1,
        }
    }

    pub fn other(self) -> BinaryLabel {
        match self {
            BinaryLabel::Work => BinaryLabel::Leisure,
            BinaryLabel::Leisure => BinaryLabel::Work,
        }
    }
}

impl From<TripLabel> for BinaryLabel {
    fn from(label: TripLabel) -> Self {
        match label {
            TripLabel::Work => BinaryLabel::Work,
            TripLabel::Family | TripLabel::Romantic | TripLabel::Friends | TripLabel::Alone => {
                BinaryLabel::Leisure
            }
        }
    }
}

impl fmt::Display for BinaryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for BinaryLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "work" => Ok(BinaryLabel::Work),
            "leisure" => Ok(BinaryLabel::Leisure),
            other => Err(format!("unknown binary label `{other}`")),
        }
    }
}

/// How to resolve disagreeing source labels within a visit group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConflictPolicy {
    /// Assign the label held by more than half of the sources; otherwise leave
    /// the review unlabeled.
    #[default]
    MajorityOrDrop,
}

type VisitKey = (String, String, i32, u8);

fn visit_key(r: &Review) -> VisitKey {
    (r.user_id.clone(), r.city_key(), r.year, r.month)
}

/// Labels unlabeled reviews from the originally labeled reviews of the same
/// user in the same city and (year, month). Single pass: labels assigned here
/// never act as sources. Returns the new set and the number of reviews labeled.
pub fn propagate_labels(set: &ReviewSet, policy: ConflictPolicy) -> (ReviewSet, usize) {
    let mut sources: HashMap<VisitKey, HashMap<TripLabel, usize>> = HashMap::new();
    for r in set {
        if let Some(label) = r.label {
            *sources.entry(visit_key(r)).or_default().entry(label).or_default() += 1;
        }
    }

    let mut augmented = 0;
    let records = set
        .iter()
        .map(|r| {
            let mut r = r.clone();
            if r.label.is_none() {
                if let Some(counts) = sources.get(&visit_key(&r)) {
                    let assigned = match policy {
                        ConflictPolicy::MajorityOrDrop => strict_majority(counts),
                    };
                    if assigned.is_some() {
                        r.label = assigned;
                        augmented += 1;
                    }
                }
            }
            r
        })
        .collect();
    (set.with_records(records), augmented)
}

fn strict_majority(counts: &HashMap<TripLabel, usize>) -> Option<TripLabel> {
    let total: usize = counts.values().sum();
    counts
        .iter()
        .find(|(_, &c)| 2 * c > total)
        .map(|(&label, _)| label)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DistributionStats {
    pub n_total: usize,
    pub n_work: usize,
    pub n_leisure: usize,
    pub pct_work: f64,
    pub pct_leisure: f64,
    pub n_unlabeled_dropped: usize,
    pub n_augmented: usize,
}

impl DistributionStats {
    pub fn from_counts(n_work: usize, n_leisure: usize, n_unlabeled_dropped: usize) -> Self {
        let n_total = n_work + n_leisure;
        let (pct_work, pct_leisure) = if n_total == 0 {
            (0.0, 0.0)
        } else {
            (
                100.0 * n_work as f64 / n_total as f64,
                100.0 * n_leisure as f64 / n_total as f64,
            )
        };
        Self {
            n_total,
            n_work,
            n_leisure,
            pct_work,
            pct_leisure,
            n_unlabeled_dropped,
            n_augmented: 0,
        }
    }

    pub fn to_table(&self) -> String {
        format!(
            "{:<22}{:>10}{:>10}\n{:<22}{:>10}{:>9.2}%\n{:<22}{:>10}{:>9.2}%\n{:<22}{:>10}\n{:<22}{:>10}\n{:<22}{:>10}\n",
            "Class", "Count", "Share",
            "leisure", self.n_leisure, self.pct_leisure,
            "work", self.n_work, self.pct_work,
            "total", self.n_total,
            "unlabeled (dropped)", self.n_unlabeled_dropped,
            "augmented", self.n_augmented,
        )
    }
}

/// Collapses trip labels to work/leisure. Unlabeled reviews are dropped and
/// counted.
pub fn binarize(set: &ReviewSet) -> (Vec<(Review, BinaryLabel)>, DistributionStats) {
    let mut out = Vec::with_capacity(set.len());
    let mut dropped = 0;
    for r in set {
        match r.label {
            Some(label) => out.push((r.clone(), BinaryLabel::from(label))),
            None => dropped += 1,
        }
    }
    let n_work = out.iter().filter(|(_, l)| *l == BinaryLabel::Work).count();
    let stats = DistributionStats::from_counts(n_work, out.len() - n_work, dropped);
    (out, stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn review(id: &str, user: &str, city: &str, ym: (i32, u8), label: Option<TripLabel>) -> Review {
        Review {
            id: id.into(),
            user_id: user.into(),
            poi_id: format!("poi-{id}"),
            city: city.into(),
            year: ym.0,
            month: ym.1,
            text: "text".into(),
            label,
            lang: None,
            lang_confidence: None,
        }
    }

    #[test]
    fn assign_no_source_and_tie() {
        use TripLabel::*;
        let set = ReviewSet::from_records(vec![
            review("r1", "u1", "Paris", (2019, 5), Some(Work)),
            review("r2", "u1", "Paris", (2019, 5), None),
            review("r3", "u1", "Paris", (2019, 6), None),
            review("r4", "u2", "Paris", (2019, 5), Some(Work)),
            review("r5", "u2", "Paris", (2019, 5), Some(Family)),
            review("r6", "u2", "Paris", (2019, 5), None),
        ]);
        let (out, n) = propagate_labels(&set, ConflictPolicy::MajorityOrDrop);
        assert_eq!(n, 1);
        assert_eq!(out.get("r2").unwrap().label, Some(Work));
        assert_eq!(out.get("r3").unwrap().label, None);
        assert_eq!(out.get("r6").unwrap().label, None);
    }

    #[test]
    fn city_grouping_is_normalized() {
        let set = ReviewSet::from_records(vec![
            review("a", "u", "  São Paulo", (2020, 1), Some(TripLabel::Friends)),
            review("b", "u", "SA\u{0303}O PAULO", (2020, 1), None),
        ]);
        let (out, n) = propagate_labels(&set, ConflictPolicy::default());
        assert_eq!(n, 1);
        assert_eq!(out.get("b").unwrap().label, Some(TripLabel::Friends));
    }

    #[test]
    fn binarize_collapses_and_counts() {
        use TripLabel::*;
        let set = ReviewSet::from_records(vec![
            review("a", "u", "X", (2020, 1), Some(Work)),
            review("b", "u", "X", (2020, 1), Some(Family)),
            review("c", "u", "X", (2020, 1), Some(Alone)),
            review("d", "u", "X", (2020, 1), None),
        ]);
        let (rows, stats) = binarize(&set);
        assert_eq!(rows.len(), 3);
        assert_eq!(stats.n_work, 1);
        assert_eq!(stats.n_leisure, 2);
        assert_eq!(stats.n_unlabeled_dropped, 1);
        assert!((stats.pct_work + stats.pct_leisure - 100.0).abs() < 1e-9);
    }

    #[test]
    fn single_work_and_all_unlabeled() {
        let one = ReviewSet::from_records(vec![review("a", "u", "X", (2020, 1), Some(TripLabel::Work))]);
        let (_, stats) = binarize(&one);
        assert_eq!((stats.n_total, stats.pct_work), (1, 100.0));

        let none = ReviewSet::from_records(vec![
            review("a", "u", "X", (2020, 1), None),
            review("b", "u", "X", (2020, 1), None),
        ]);
        let (rows, stats) = binarize(&none);
        assert!(rows.is_empty());
        assert_eq!(stats.n_unlabeled_dropped, 2);
    }

    #[test]
    fn stats_table_mentions_percentages() {
        let stats = DistributionStats::from_counts(1233, 8767, 0);
        let table = stats.to_table();
        assert!(table.contains("12.33%"), "{table}");
        assert!(table.contains("87.67%"), "{table}");
    }
}
