use std::fs;
use std::io::Write;
use std::path::Path;

use log::warn;
use rayon::prelude::*;
use serde_json::Value;

use super::{CorpusError, Provenance, RawReview, Result, Review, ReviewSet};

pub const CSV_HEADER: [&str; 10] = [
    "id",
    "user_id",
    "poi_id",
    "city",
    "year",
    "month",
    "text",
    "label",
    "lang",
    "lang_confidence",
];

fn io_err(path: &Path, source: std::io::Error) -> CorpusError {
    CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Accumulates validated rows, skipping or failing on bad ones.
struct RowSink {
    source: String,
    strict: bool,
    records: Vec<Review>,
    provenance: Provenance,
}

impl RowSink {
    fn new(source: String, strict: bool) -> Self {
        Self {
            provenance: Provenance {
                sources: vec![source.clone()],
                ..Provenance::default()
            },
            source,
            strict,
            records: Vec::new(),
        }
    }

    fn push(&mut self, line: u64, raw: std::result::Result<RawReview, String>) -> Result<()> {
        match raw.and_then(RawReview::validate) {
            Ok((review, empty_text)) => {
                if empty_text {
                    self.provenance
                        .warnings
                        .push(format!("{}:{line}: review `{}` has empty text", self.source, review.id));
                }
                self.records.push(review);
                Ok(())
            }
            Err(reason) if self.strict => Err(CorpusError::MalformedRow {
                path: self.source.clone(),
                line,
                reason,
            }),
            Err(reason) => {
                warn!("{}:{line}: skipping malformed row: {reason}", self.source);
                self.provenance.skipped += 1;
                self.provenance
                    .warnings
                    .push(format!("{}:{line}: skipped: {reason}", self.source));
                Ok(())
            }
        }
    }

    fn finish(self) -> Result<ReviewSet> {
        ReviewSet::build(self.records, self.provenance, self.strict)
    }
}

/// Parses canonical CSV from memory; `source` names it in diagnostics.
pub fn read_csv_bytes(bytes: &[u8], source: &str, strict: bool) -> Result<ReviewSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes);
    let mut rows = reader.records();
    let header = match rows.next() {
        None => {
            return Err(CorpusError::MissingHeader {
                path: source.to_string(),
            })
        }
        Some(Err(e)) => {
            return Err(CorpusError::MalformedRow {
                path: source.to_string(),
                line: 1,
                reason: e.to_string(),
            })
        }
        Some(Ok(h)) => h,
    };
    let header_fields: Vec<&str> = header.iter().collect();
    if header_fields != CSV_HEADER {
        return Err(CorpusError::SchemaMismatch {
            path: source.to_string(),
            found: header_fields.join(","),
        });
    }

    let mut sink = RowSink::new(source.to_string(), strict);
    for row in rows {
        let (line, raw) = match row {
            Ok(rec) => {
                let line = rec.position().map_or(0, |p| p.line());
                let raw = if rec.len() != CSV_HEADER.len() {
                    Err(format!(
                        "expected {} fields, found {}",
                        CSV_HEADER.len(),
                        rec.len()
                    ))
                } else {
                    let mut raw = RawReview::default();
                    for (name, value) in CSV_HEADER.iter().zip(rec.iter()) {
                        raw.set(name, value.to_string());
                    }
                    Ok(raw)
                };
                (line, raw)
            }
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                (line, Err(e.to_string()))
            }
        };
        sink.push(line, raw)?;
    }
    sink.finish()
}

pub fn ingest_csv(path: impl AsRef<Path>, strict: bool) -> Result<ReviewSet> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    read_csv_bytes(&bytes, &path.display().to_string(), strict)
}

fn json_scalar(v: &Value) -> std::result::Result<Option<String>, String> {
    match v {
        Value::Null => Ok(None),
        Value::String(s) => Ok(Some(s.clone())),
        Value::Number(n) => Ok(Some(n.to_string())),
        other => Err(format!("unsupported JSON value `{other}`")),
    }
}

pub fn ingest_jsonl(path: impl AsRef<Path>, strict: bool) -> Result<ReviewSet> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let source = path.display().to_string();
    let mut sink = RowSink::new(source.clone(), strict);
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<Value>(line)
            .map_err(|e| e.to_string())
            .and_then(|v| match v {
                Value::Object(map) => {
                    let mut raw = RawReview::default();
                    for (key, value) in &map {
                        if let Some(s) = json_scalar(value).map_err(|e| format!("{key}: {e}"))? {
                            if !raw.set(key, s) {
                                return Err(format!("unknown field `{key}`"));
                            }
                        }
                    }
                    Ok(raw)
                }
                _ => Err("line is not a JSON object".to_string()),
            });
        sink.push(i as u64 + 1, parsed)?;
    }
    if sink.records.is_empty() && sink.provenance.skipped == 0 {
        warn!("{source}: no records");
        sink.provenance.warnings.push(format!("{source}: file contains no records"));
    }
    sink.finish()
}

fn is_jsonl(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("jsonl") | Some("ndjson") | Some("json")
    )
}

/// Ingests several files (format chosen by extension) in parallel and merges
/// them. The result equals sequential ingestion: on duplicate ids the record
/// from the earlier path wins.
pub fn ingest_paths<P: AsRef<Path> + Sync>(paths: &[P], strict: bool) -> Result<ReviewSet> {
    let sets: Vec<ReviewSet> = paths
        .par_iter()
        .map(|p| {
            let p = p.as_ref();
            if is_jsonl(p) {
                ingest_jsonl(p, strict)
            } else {
                ingest_csv(p, strict)
            }
        })
        .collect::<Result<_>>()?;
    let mut provenance = Provenance::default();
    let mut records = Vec::new();
    for set in sets {
        provenance.sources.extend(set.provenance.sources);
        provenance.skipped += set.provenance.skipped;
        provenance.duplicates += set.provenance.duplicates;
        provenance.warnings.extend(set.provenance.warnings);
        records.extend(set.records);
    }
    ReviewSet::build(records, provenance, strict)
}

pub fn csv_bytes(set: &ReviewSet) -> Vec<u8> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(CSV_HEADER).expect("in-memory write");
    for r in set {
        let raw = RawReview::from(r);
        writer
            .write_record([
                raw.id.unwrap_or_default(),
                raw.user_id.unwrap_or_default(),
                raw.poi_id.unwrap_or_default(),
                raw.city.unwrap_or_default(),
                raw.year.unwrap_or_default(),
                raw.month.unwrap_or_default(),
                raw.text.unwrap_or_default(),
                raw.label.unwrap_or_default(),
                raw.lang.unwrap_or_default(),
                raw.lang_confidence.unwrap_or_default(),
            ])
            .expect("in-memory write");
    }
    writer.into_inner().expect("in-memory flush")
}

pub fn write_csv(set: &ReviewSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, csv_bytes(set)).map_err(|e| io_err(path, e))
}

pub fn write_jsonl(set: &ReviewSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for r in set {
        serde_json::to_writer(&mut out, r).expect("review serializes");
        out.push(b'\n');
    }
    fs::File::create(path)
        .and_then(|mut f| f.write_all(&out))
        .map_err(|e| io_err(path, e))
}
