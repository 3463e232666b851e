//! Deterministic synthetic review corpora with a tunable lexical signal.

use serde::{Deserialize, Serialize};

use super::{CorpusError, Provenance, Result, Review, ReviewSet, TripLabel};
use crate::rng::SeededRng;

pub const WORK_LEXICON: &[&str] = &[
    "meeting", "conference", "client", "colleagues", "business", "presentation", "office",
    "deadline", "workshop", "seminar", "laptop", "desk", "coworkers", "project", "contract",
    "negotiation", "convention", "expo", "boardroom", "invoice", "report", "schedule", "agenda",
    "manager", "team", "training", "corporate", "delegates", "keynote", "printer",
];

pub const LEISURE_LEXICON: &[&str] = &[
    "beach", "family", "kids", "vacation", "holiday", "romantic", "honeymoon", "sunset", "pool",
    "relaxing", "friends", "wine", "scenery", "museum", "hiking", "anniversary", "shopping",
    "cocktails", "spa", "weekend", "children", "sightseeing", "festival", "garden", "picnic",
    "swimming", "wedding", "castle", "playground", "boat",
];

pub const NEUTRAL_LEXICON: &[&str] = &[
    "hotel", "room", "staff", "breakfast", "location", "clean", "friendly", "service", "price",
    "stay", "restaurant", "street", "city", "night", "morning", "food", "walk", "parking", "view",
    "bed", "quiet", "helpful", "coffee", "bar", "lobby", "bathroom", "modern", "small", "great",
    "comfortable",
];

const CONNECTIVES: &[&str] = &[
    "the", "was", "and", "with", "for", "our", "very", "we", "it", "a", "after", "during", "near",
];

const CITIES: &[&str] = &[
    "Tiradentes", "Ouro Preto", "San Gimignano", "Cannes", "Ibiza", "Lisbon", "London", "Rome",
];

const LEISURE_LABELS: [TripLabel; 4] = [
    TripLabel::Family,
    TripLabel::Romantic,
    TripLabel::Friends,
    TripLabel::Alone,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureSpec {
    pub n: usize,
    pub work_fraction: f64,
    /// Probability that a content word comes from the class lexicon rather
    /// than the shared neutral one.
    pub vocab_signal: f64,
    pub seed: u64,
    /// Fraction of reviews whose label is removed after generation.
    #[serde(default)]
    pub unlabeled_fraction: f64,
}

impl FixtureSpec {
    pub fn new(n: usize, work_fraction: f64, vocab_signal: f64, seed: u64) -> Self {
        Self {
            n,
            work_fraction,
            vocab_signal,
            seed,
            unlabeled_fraction: 0.0,
        }
    }

    /// Number of work reviews the fixture contains before unlabeling.
    pub fn work_count(&self) -> usize {
        ((self.n as f64) * self.work_fraction).round() as usize
    }

    fn validate(&self) -> Result<()> {
        let unit = 0.0..=1.0;
        for (name, v) in [
            ("work_fraction", self.work_fraction),
            ("vocab_signal", self.vocab_signal),
            ("unlabeled_fraction", self.unlabeled_fraction),
        ] {
            if !unit.contains(&v) {
                return Err(CorpusError::InvalidFixtureSpec(format!(
                    "{name} = {v} is outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

struct Trip {
    user: usize,
    city: &'static str,
    year: i32,
    month: u8,
    label: TripLabel,
    size: usize,
}

fn sentence(rng: &mut SeededRng, lexicon: &[&str], signal: f64) -> String {
    let content_words = 5 + rng.index(6);
    let mut words: Vec<&str> = Vec::with_capacity(content_words * 2);
    for _ in 0..content_words {
        words.push(rng.choose(CONNECTIVES));
        let pool = if rng.bernoulli(signal) {
            lexicon
        } else {
            NEUTRAL_LEXICON
        };
        words.push(rng.choose(pool));
    }
    let mut text = words.join(" ");
    if let Some(first) = text.get_mut(0..1) {
        first.make_ascii_uppercase();
    }
    text.push('.');
    text
}

/// Generates `spec.n` reviews with exactly `round(n * work_fraction)` work
/// reviews. Consecutive reviews of the same class are grouped into trips that
/// share user, city and month, so label propagation has material to work on.
pub fn generate_fixture(spec: &FixtureSpec) -> Result<ReviewSet> {
    spec.validate()?;
    let mut rng = SeededRng::new(spec.seed);
    let n_work = spec.work_count().min(spec.n);
    let mut is_work: Vec<bool> = (0..spec.n).map(|i| i < n_work).collect();
    rng.shuffle(&mut is_work);

    let n_users = spec.n / 3 + 1;
    let width = spec.n.max(1).to_string().len();
    let mut records = Vec::with_capacity(spec.n);
    let mut trip: Option<Trip> = None;
    for (i, &work) in is_work.iter().enumerate() {
        let joins = matches!(&trip, Some(t) if (t.label == TripLabel::Work) == work && t.size < 4)
            && rng.bernoulli(0.5);
        if !joins {
            trip = Some(Trip {
                user: rng.index(n_users),
                city: rng.choose(CITIES),
                year: 2012 + rng.index(11) as i32,
                month: 1 + rng.index(12) as u8,
                label: if work {
                    TripLabel::Work
                } else {
                    *rng.choose(&LEISURE_LABELS)
                },
                size: 0,
            });
        }
        let t = trip.as_mut().expect("trip started");
        t.size += 1;
        let lexicon = if work { WORK_LEXICON } else { LEISURE_LEXICON };
        let text = sentence(&mut rng, lexicon, spec.vocab_signal);
        let unlabeled = spec.unlabeled_fraction > 0.0 && rng.bernoulli(spec.unlabeled_fraction);
        records.push(Review {
            id: format!("r{i:0width$}"),
            user_id: format!("u{}", t.user),
            poi_id: format!("poi{}", rng.index(500)),
            city: t.city.to_string(),
            year: t.year,
            month: t.month,
            text,
            label: (!unlabeled).then_some(t.label),
            lang: None,
            lang_confidence: None,
        });
    }
    ReviewSet::build(
        records,
        Provenance {
            sources: vec![format!("synthetic:{}", serde_json::to_string(spec).unwrap())],
            ..Provenance::default()
        },
        true,
    )
}
