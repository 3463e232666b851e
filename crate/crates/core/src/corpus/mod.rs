//! Canonical review records and everything that produces them: CSV/JSONL
//! ingestion, offline HTML snapshot extraction and synthetic fixtures.

mod html;
mod io;
mod synth;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

pub use html::{extract_from_html, ExtractorConfig};
pub use io::{
    csv_bytes, ingest_csv, ingest_jsonl, ingest_paths, read_csv_bytes, write_csv, write_jsonl,
    CSV_HEADER,
};
pub use synth::{generate_fixture, FixtureSpec, LEISURE_LEXICON, NEUTRAL_LEXICON, WORK_LEXICON};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: missing header row")]
    MissingHeader { path: String },
    #[error("{path}: header does not match canonical schema (found `{found}`)")]
    SchemaMismatch { path: String, found: String },
    #[error("duplicate review id `{id}`")]
    DuplicateId { id: String },
    #[error("{path}:{line}: malformed row: {reason}")]
    MalformedRow {
        path: String,
        line: u64,
        reason: String,
    },
    #[error("invalid selector for field `{field}`: {reason}")]
    InvalidSelector { field: String, reason: String },
    #[error("snapshot directory {path} contains no HTML files")]
    EmptySnapshotDir { path: String },
    #[error("invalid fixture spec: {0}")]
    InvalidFixtureSpec(String),
    #[error("{path}: invalid extractor config: {reason}")]
    InvalidConfig { path: String, reason: String },
}

pub type Result<T> = std::result::Result<T, CorpusError>;

/// Raw user-declared trip purpose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TripLabel {
    Family,
    Romantic,
    Friends,
    Work,
    Alone,
}

impl TripLabel {
    pub const ALL: [TripLabel; 5] = [
        TripLabel::Family,
        TripLabel::Romantic,
        TripLabel::Friends,
        TripLabel::Work,
        TripLabel::Alone,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TripLabel::Family => "family",
            TripLabel::Romantic => "romantic",
            TripLabel::Friends => "friends",
            TripLabel::Work => "work",
            TripLabel::Alone => "alone",
        }
    }
}

impl fmt::Display for TripLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown trip label `{0}` (expected one of family, romantic, friends, work, alone)")]
pub struct UnknownLabel(pub String);

impl FromStr for TripLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        TripLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| UnknownLabel(s.to_string()))
    }
}

/// One user-authored review of a point of interest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Review {
    pub id: String,
    pub user_id: String,
    pub poi_id: String,
    pub city: String,
    pub year: i32,
    pub month: u8,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<TripLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang_confidence: Option<f64>,
}

impl Review {
    /// Grouping key for the city: NFC, trimmed, lowercased.
    pub fn city_key(&self) -> String {
        normalize_city(&self.city)
    }
}

pub fn normalize_city(city: &str) -> String {
    city.trim().nfc().collect::<String>().to_lowercase()
}

/// Field values as read from any source, before validation.
#[derive(Debug, Default, Clone)]
pub(crate) struct RawReview {
    pub id: Option<String>,
    pub user_id: Option<String>,
    pub poi_id: Option<String>,
    pub city: Option<String>,
    pub year: Option<String>,
    pub month: Option<String>,
    pub text: Option<String>,
    pub label: Option<String>,
    pub lang: Option<String>,
    pub lang_confidence: Option<String>,
}

impl RawReview {
    pub(crate) fn set(&mut self, field: &str, value: String) -> bool {
        let slot = match field {
            "id" => &mut self.id,
            "user_id" => &mut self.user_id,
            "poi_id" => &mut self.poi_id,
            "city" => &mut self.city,
            "year" => &mut self.year,
            "month" => &mut self.month,
            "text" => &mut self.text,
            "label" => &mut self.label,
            "lang" => &mut self.lang,
            "lang_confidence" => &mut self.lang_confidence,
            _ => return false,
        };
        *slot = Some(value);
        true
    }

    /// Validates into a [`Review`]. The boolean is true when the record is
    /// kept but should be reported as a warning (empty text).
    pub(crate) fn validate(self) -> std::result::Result<(Review, bool), String> {
        fn required(v: Option<String>, name: &str) -> std::result::Result<String, String> {
            match v {
                Some(s) if !s.trim().is_empty() => Ok(s),
                _ => Err(format!("missing required field `{name}`")),
            }
        }
        fn optional(v: Option<String>) -> Option<String> {
            v.filter(|s| !s.is_empty())
        }

        let id = required(self.id, "id")?;
        let user_id = required(self.user_id, "user_id")?;
        let poi_id = required(self.poi_id, "poi_id")?;
        let city = required(self.city, "city")?;
        let year: i32 = required(self.year, "year")?
            .trim()
            .parse()
            .map_err(|_| "year is not an integer".to_string())?;
        if !(1900..=2100).contains(&year) {
            return Err(format!("year {year} outside 1900..=2100"));
        }
        let month: u8 = required(self.month, "month")?
            .trim()
            .parse()
            .map_err(|_| "month is not an integer".to_string())?;
        if !(1..=12).contains(&month) {
            return Err(format!("month {month} outside 1..=12"));
        }
        let text = self.text.unwrap_or_default();
        let label = optional(self.label)
            .map(|s| s.parse::<TripLabel>())
            .transpose()
            .map_err(|e| e.to_string())?;
        let lang = optional(self.lang);
        if let Some(code) = &lang {
            if code.len() != 2 || !code.bytes().all(|b| b.is_ascii_lowercase()) {
                return Err(format!("lang `{code}` is not a two-letter ISO 639-1 code"));
            }
        }
        let lang_confidence = optional(self.lang_confidence)
            .map(|s| s.trim().parse::<f64>())
            .transpose()
            .map_err(|_| "lang_confidence is not a number".to_string())?;
        if let Some(c) = lang_confidence {
            if !(0.0..=1.0).contains(&c) {
                return Err(format!("lang_confidence {c} outside [0, 1]"));
            }
        }
        let warn = text.is_empty();
        Ok((
            Review {
                id,
                user_id,
                poi_id,
                city,
                year,
                month,
                text,
                label,
                lang,
                lang_confidence,
            },
            warn,
        ))
    }
}

impl From<&Review> for RawReview {
    fn from(r: &Review) -> Self {
        RawReview {
            id: Some(r.id.clone()),
            user_id: Some(r.user_id.clone()),
            poi_id: Some(r.poi_id.clone()),
            city: Some(r.city.clone()),
            year: Some(r.year.to_string()),
            month: Some(r.month.to_string()),
            text: Some(r.text.clone()),
            label: r.label.map(|l| l.as_str().to_string()),
            lang: r.lang.clone(),
            lang_confidence: r.lang_confidence.map(|c| c.to_string()),
        }
    }
}

/// Where a [`ReviewSet`] came from and what was discarded on the way.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub sources: Vec<String>,
    pub skipped: usize,
    pub duplicates: usize,
    pub warnings: Vec<String>,
}

/// An id-sorted, duplicate-free collection of reviews.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReviewSet {
    records: Vec<Review>,
    pub provenance: Provenance,
}

impl ReviewSet {
    /// Sorts by id (stable, so earlier records win ties) and drops duplicates.
    /// In strict mode a duplicate id is an error.
    pub fn build(
        mut records: Vec<Review>,
        mut provenance: Provenance,
        strict: bool,
    ) -> Result<Self> {
        records.sort_by(|a, b| a.id.cmp(&b.id));
        let before = records.len();
        let mut out: Vec<Review> = Vec::with_capacity(before);
        for r in records {
            if let Some(last) = out.last() {
                if last.id == r.id {
                    if strict {
                        return Err(CorpusError::DuplicateId { id: r.id });
                    }
                    provenance
                        .warnings
                        .push(format!("duplicate id `{}` dropped (first occurrence kept)", r.id));
                    continue;
                }
            }
            out.push(r);
        }
        provenance.duplicates += before - out.len();
        Ok(Self {
            records: out,
            provenance,
        })
    }

    /// Builds from records already known to be unique; panics otherwise.
    pub fn from_records(records: Vec<Review>) -> Self {
        Self::build(records, Provenance::default(), true).expect("duplicate review ids")
    }

    pub fn records(&self) -> &[Review] {
        &self.records
    }

    pub fn into_records(self) -> Vec<Review> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Review> {
        self.records.iter()
    }

    pub fn get(&self, id: &str) -> Option<&Review> {
        self.records
            .binary_search_by(|r| r.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.records[i])
    }

    /// Same provenance, records replaced. Caller keeps ids sorted and unique.
    pub(crate) fn with_records(&self, records: Vec<Review>) -> Self {
        debug_assert!(records.windows(2).all(|w| w[0].id < w[1].id));
        Self {
            records,
            provenance: self.provenance.clone(),
        }
    }

    pub fn labeled_count(&self) -> usize {
        self.records.iter().filter(|r| r.label.is_some()).count()
    }
}

impl<'a> IntoIterator for &'a ReviewSet {
    type Item = &'a Review;
    type IntoIter = std::slice::Iter<'a, Review>;

    fn into_iter(self) -> Self::IntoIter {
        self.records.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn review(id: &str) -> Review {
        Review {
            id: id.into(),
            user_id: "u".into(),
            poi_id: "p".into(),
            city: "Paris".into(),
            year: 2019,
            month: 5,
            text: "nice".into(),
            label: None,
            lang: None,
            lang_confidence: None,
        }
    }

    #[test]
    fn labels_parse_exactly_five_values() {
        for l in TripLabel::ALL {
            assert_eq!(l.as_str().parse::<TripLabel>().unwrap(), l);
        }
        assert!("business".parse::<TripLabel>().is_err());
        assert!("Work".parse::<TripLabel>().is_err());
        assert!("work-related".parse::<TripLabel>().is_err());
    }

    #[test]
    fn city_key_normalizes() {
        // "Sa\u{0303}o" is the decomposed form of "São".
        assert_eq!(normalize_city("  Sa\u{0303}o Paulo "), normalize_city("SÃO PAULO"));
    }

    #[test]
    fn build_sorts_and_keeps_first_duplicate() {
        let mut dup = review("b");
        dup.text = "second".into();
        let set = ReviewSet::build(
            vec![review("c"), review("b"), dup, review("a")],
            Provenance::default(),
            false,
        )
        .unwrap();
        let ids: Vec<_> = set.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert_eq!(set.get("b").unwrap().text, "nice");
        assert_eq!(set.provenance.duplicates, 1);

        let strict = ReviewSet::build(vec![review("x"), review("x")], Provenance::default(), true);
        assert!(matches!(strict, Err(CorpusError::DuplicateId { .. })));
    }

    #[test]
    fn validation_rejects_out_of_range() {
        let mut raw = RawReview::from(&review("a"));
        raw.month = Some("13".into());
        assert!(raw.validate().unwrap_err().contains("month"));

        let mut raw = RawReview::from(&review("a"));
        raw.year = Some("1899".into());
        assert!(raw.validate().is_err());

        let mut raw = RawReview::from(&review("a"));
        raw.label = Some("business".into());
        assert!(raw.validate().unwrap_err().contains("unknown trip label"));

        let mut raw = RawReview::from(&review("a"));
        raw.city = Some("   ".into());
        assert!(raw.validate().is_err());

        let mut raw = RawReview::from(&review("a"));
        raw.text = Some(String::new());
        let (_, warn) = raw.validate().unwrap();
        assert!(warn);
    }
}
