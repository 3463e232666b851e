//! Offline extraction of reviews from saved HTML pages.
//!
//! A config maps each review field to a selector evaluated inside every
//! review block. A selector is a CSS selector, optionally followed by
//! `@attribute` to read an attribute instead of the element text. A bare
//! `@attribute` reads from the block element itself.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use log::warn;
use scraper::{ElementRef, Html, Selector};
use serde::{Deserialize, Serialize};

use super::io::CSV_HEADER;
use super::{CorpusError, Provenance, RawReview, Result, ReviewSet};

fn default_review_block() -> String {
    "[data-review-id]".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractorConfig {
    pub field_selectors: BTreeMap<String, String>,
    pub required_fields: Vec<String>,
    /// Selector matching one element per review.
    #[serde(default = "default_review_block")]
    pub review_block: String,
}

impl ExtractorConfig {
    pub fn from_json(json: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| CorpusError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_json(&text).map_err(|e| CorpusError::InvalidConfig {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }

    fn compile(&self) -> Result<CompiledConfig> {
        for field in &self.required_fields {
            if !self.field_selectors.contains_key(field) {
                return Err(CorpusError::InvalidSelector {
                    field: field.clone(),
                    reason: "required field has no selector".into(),
                });
            }
        }
        let block = parse_selector("review_block", &self.review_block)?;
        let mut fields = Vec::with_capacity(self.field_selectors.len());
        for (field, expr) in &self.field_selectors {
            if !CSV_HEADER.contains(&field.as_str()) {
                return Err(CorpusError::InvalidSelector {
                    field: field.clone(),
                    reason: "not a review field".into(),
                });
            }
            let (css, attr) = match expr.rsplit_once('@') {
                Some((css, attr)) if !attr.is_empty() => (css.trim(), Some(attr.to_string())),
                Some(_) => {
                    return Err(CorpusError::InvalidSelector {
                        field: field.clone(),
                        reason: "empty attribute name after `@`".into(),
                    })
                }
                None => (expr.trim(), None),
            };
            let selector = if css.is_empty() {
                if attr.is_none() {
                    return Err(CorpusError::InvalidSelector {
                        field: field.clone(),
                        reason: "empty selector".into(),
                    });
                }
                None
            } else {
                Some(parse_selector(field, css)?)
            };
            fields.push(FieldRule {
                field: field.clone(),
                selector,
                attr,
            });
        }
        Ok(CompiledConfig {
            block,
            fields,
            required: self.required_fields.clone(),
        })
    }
}

fn parse_selector(field: &str, css: &str) -> Result<Selector> {
    Selector::parse(css).map_err(|e| CorpusError::InvalidSelector {
        field: field.to_string(),
        reason: e.to_string(),
    })
}

struct FieldRule {
    field: String,
    selector: Option<Selector>,
    attr: Option<String>,
}

impl FieldRule {
    fn extract(&self, block: ElementRef<'_>) -> Option<String> {
        let el = match &self.selector {
            Some(sel) => block.select(sel).next()?,
            None => block,
        };
        let value = match &self.attr {
            Some(attr) => el.value().attr(attr)?.trim().to_string(),
            None => collapse_whitespace(&el.text().collect::<String>()),
        };
        (!value.is_empty()).then_some(value)
    }
}

struct CompiledConfig {
    block: Selector,
    fields: Vec<FieldRule>,
    required: Vec<String>,
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Extracts one review per matched block from every `.html`/`.htm` file in
/// `snapshot_dir` (files visited in name order). Blocks missing a required
/// field, or failing record validation, are skipped with a diagnostic.
pub fn extract_from_html(
    snapshot_dir: impl AsRef<Path>,
    config: &ExtractorConfig,
) -> Result<ReviewSet> {
    let compiled = config.compile()?;
    let dir = snapshot_dir.as_ref();
    let io_err = |e| CorpusError::Io {
        path: dir.display().to_string(),
        source: e,
    };
    let mut files: Vec<_> = fs::read_dir(dir)
        .map_err(io_err)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("html") | Some("htm")
            )
        })
        .collect();
    if files.is_empty() {
        return Err(CorpusError::EmptySnapshotDir {
            path: dir.display().to_string(),
        });
    }
    files.sort();

    let mut provenance = Provenance::default();
    let mut records = Vec::new();
    for file in &files {
        let name = file.display().to_string();
        let html = fs::read_to_string(file).map_err(|e| CorpusError::Io {
            path: name.clone(),
            source: e,
        })?;
        provenance.sources.push(name.clone());
        let doc = Html::parse_document(&html);
        for (n, block) in doc.select(&compiled.block).enumerate() {
            let mut raw = RawReview::default();
            let mut found = Vec::new();
            for rule in &compiled.fields {
                if let Some(value) = rule.extract(block) {
                    raw.set(&rule.field, value);
                    found.push(rule.field.as_str());
                }
            }
            let missing: Vec<_> = compiled
                .required
                .iter()
                .filter(|f| !found.contains(&f.as_str()))
                .collect();
            let outcome = if missing.is_empty() {
                raw.validate()
            } else {
                Err(format!("required fields not matched: {missing:?}"))
            };
            match outcome {
                Ok((review, empty_text)) => {
                    if empty_text {
                        provenance
                            .warnings
                            .push(format!("{name}: review `{}` has empty text", review.id));
                    }
                    records.push(review);
                }
                Err(reason) => {
                    warn!("{name}: review block {n} skipped: {reason}");
                    provenance.skipped += 1;
                    provenance
                        .warnings
                        .push(format!("{name}: review block {n} skipped: {reason}"));
                }
            }
        }
    }
    if records.is_empty() {
        warn!("{}: no review blocks extracted", dir.display());
        provenance
            .warnings
            .push(format!("{}: no review blocks extracted", dir.display()));
    }
    ReviewSet::build(records, provenance, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> ExtractorConfig {
        ExtractorConfig::from_json(
            r#"{"field_selectors": {"id": "@data-review-id", "text": ".body", "user_id": ".user",
                 "poi_id": "@data-poi", "city": "@data-city", "year": ".date@data-year",
                 "month": ".date@data-month"},
                "required_fields": ["id", "text"]}"#,
        )
        .unwrap()
    }

    #[test]
    fn missing_required_selector_is_rejected_before_parsing() {
        let mut cfg = config();
        cfg.field_selectors.remove("text");
        let dir = tempfile::tempdir().unwrap();
        let err = extract_from_html(dir.path(), &cfg).unwrap_err();
        assert!(matches!(err, CorpusError::InvalidSelector { ref field, .. } if field == "text"));
    }

    #[test]
    fn malformed_css_is_invalid_selector() {
        let mut cfg = config();
        cfg.field_selectors.insert("label".into(), "div[[".into());
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            extract_from_html(dir.path(), &cfg),
            Err(CorpusError::InvalidSelector { .. })
        ));
    }

    #[test]
    fn empty_dir_and_zero_blocks() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            extract_from_html(dir.path(), &config()),
            Err(CorpusError::EmptySnapshotDir { .. })
        ));
        fs::write(dir.path().join("a.html"), "<html><body><p>nothing</p></body></html>").unwrap();
        let set = extract_from_html(dir.path(), &config()).unwrap();
        assert!(set.is_empty());
        assert_eq!(set.provenance.warnings.len(), 1);
    }

    #[test]
    fn block_without_required_field_is_skipped() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("a.html"),
            r#"<div data-review-id="r1" data-poi="p" data-city="Cannes">
                 <span class="user">u1</span><span class="date" data-year="2019" data-month="3"></span>
                 <p class="body">  Sunny   terrace </p></div>
               <div data-review-id="r2" data-poi="p" data-city="Cannes">
                 <span class="user">u1</span><span class="date" data-year="2019" data-month="3"></span></div>"#,
        )
        .unwrap();
        let set = extract_from_html(dir.path(), &config()).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.records()[0].text, "Sunny terrace");
        assert_eq!(set.provenance.skipped, 1);
    }
}
