//! Corpus ingestion: labeled documents from JSONL/CSV, CoNLL 2003 NER files,
//! raw span annotations, and temporal train/test splits.

pub mod conll;
pub mod spans;
pub mod tokenize;

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::taxonomy::{AttackSet, BinaryLabel, Taxonomy};

pub use conll::{parse_conll, write_conll, TagSequence};
pub use spans::{
    bio_to_spans, char_spans_to_token_spans, resolve_annotations, resolve_corpus_annotations,
    spans_to_bio, CharSpan, EntitySpan, RawEntityAnnotation,
};
pub use tokenize::{SimpleTokenizer, Token, Tokenizer, WhitespaceTokenizer};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    FormatError { line: usize, message: String },
    #[error("duplicate document id `{0}`")]
    DuplicateId(String),
    #[error("line {line}: malformed CoNLL line")]
    MalformedLine { line: usize },
    #[error("line {line}: unknown tag `{tag}`")]
    UnknownTag { line: usize, tag: String },
    #[error("token/tag length mismatch: {tokens} tokens vs {tags} tags")]
    LengthMismatch { tokens: usize, tags: usize },
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One text record: identity, body, optional event date, optional gold labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub date: Option<NaiveDate>,
    pub binary_label: Option<BinaryLabel>,
    pub attack_labels: Option<AttackSet>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorpusFormat::Jsonl => f.write_str("jsonl"),
            CorpusFormat::Csv => f.write_str("csv"),
        }
    }
}

/// Parse an ISO 8601 calendar date, with bare-year fallback (`"2017"` means
/// January 1, 2017).
pub fn parse_date(raw: &str) -> Option<NaiveDate> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return None;
    }
    if let Ok(date) = NaiveDate::parse_from_str(trimmed, "%Y-%m-%d") {
        return Some(date);
    }
    if trimmed.len() == 4 && trimmed.chars().all(|c| c.is_ascii_digit()) {
        let year: i32 = trimmed.parse().ok()?;
        return NaiveDate::from_ymd_opt(year, 1, 1);
    }
    None
}

#[derive(Deserialize)]
struct RawDocRecord {
    id: String,
    text: String,
    #[serde(default)]
    date: Option<String>,
    #[serde(default)]
    label: Option<u8>,
    #[serde(default)]
    labels: Option<Vec<String>>,
}

fn build_document(
    taxonomy: &Taxonomy,
    raw: RawDocRecord,
    line: usize,
) -> Result<Document, CorpusError> {
    if raw.id.is_empty() {
        return Err(CorpusError::FormatError {
            line,
            message: "empty document id".into(),
        });
    }
    let date = match &raw.date {
        Some(s) if !s.trim().is_empty() => {
            let parsed = parse_date(s);
            if parsed.is_none() {
                log::warn!(
                    "doc {}: unparseable date `{}`; treated as absent",
                    raw.id,
                    s
                );
            }
            parsed
        }
        _ => None,
    };
    let binary_label = match raw.label {
        Some(v) => Some(
            BinaryLabel::from_u8(v).ok_or_else(|| CorpusError::FormatError {
                line,
                message: format!("label must be 0 or 1, got {v}"),
            })?,
        ),
        None => None,
    };
    let attack_labels = match raw.labels {
        Some(names) => {
            let mut set = AttackSet::EMPTY;
            for name in &names {
                let t = taxonomy.normalize_attack_label(name).map_err(|e| {
                    CorpusError::FormatError {
                        line,
                        message: e.to_string(),
                    }
                })?;
                set.insert(t);
            }
            Some(set)
        }
        None => None,
    };
    Ok(Document {
        id: raw.id,
        text: raw.text,
        date,
        binary_label,
        attack_labels,
    })
}

/// Load documents from a JSONL or CSV file.
pub fn load_documents(
    path: &Path,
    format: CorpusFormat,
    taxonomy: &Taxonomy,
) -> Result<Vec<Document>, CorpusError> {
    let text = std::fs::read_to_string(path)?;
    load_documents_str(&text, format, taxonomy)
}

/// As [`load_documents`], from in-memory text.
pub fn load_documents_str(
    text: &str,
    format: CorpusFormat,
    taxonomy: &Taxonomy,
) -> Result<Vec<Document>, CorpusError> {
    let docs = match format {
        CorpusFormat::Jsonl => load_jsonl(text, taxonomy)?,
        CorpusFormat::Csv => load_csv(text, taxonomy)?,
    };
    let mut seen = HashSet::new();
    for doc in &docs {
        if !seen.insert(doc.id.as_str()) {
            return Err(CorpusError::DuplicateId(doc.id.clone()));
        }
    }
    Ok(docs)
}

fn load_jsonl(text: &str, taxonomy: &Taxonomy) -> Result<Vec<Document>, CorpusError> {
    let mut docs = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawDocRecord =
            serde_json::from_str(line).map_err(|e| CorpusError::FormatError {
                line: lineno,
                message: e.to_string(),
            })?;
        docs.push(build_document(taxonomy, raw, lineno)?);
    }
    Ok(docs)
}

fn load_csv(text: &str, taxonomy: &Taxonomy) -> Result<Vec<Document>, CorpusError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CorpusError::FormatError {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (id_col, text_col) = match (col("id"), col("text")) {
        (Some(i), Some(t)) => (i, t),
        _ => {
            return Err(CorpusError::FormatError {
                line: 1,
                message: "CSV header must contain `id` and `text` columns".into(),
            })
        }
    };
    let date_col = col("date");
    let label_col = col("label");
    let labels_col = col("labels");

    let mut docs = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let lineno = idx + 2; // header is line 1
        let record = record.map_err(|e| CorpusError::FormatError {
            line: lineno,
            message: e.to_string(),
        })?;
        let field = |i: Option<usize>| {
            i.and_then(|i| record.get(i))
                .map(str::trim)
                .filter(|s| !s.is_empty())
        };
        let label = match field(label_col) {
            Some(s) => Some(s.parse::<u8>().map_err(|_| CorpusError::FormatError {
                line: lineno,
                message: format!("label must be 0 or 1, got `{s}`"),
            })?),
            None => None,
        };
        let labels = field(labels_col).map(|s| {
            s.split('|')
                .map(str::trim)
                .filter(|p| !p.is_empty())
                .map(String::from)
                .collect::<Vec<_>>()
        });
        let raw = RawDocRecord {
            id: field(Some(id_col)).unwrap_or("").to_string(),
            text: field(Some(text_col)).unwrap_or("").to_string(),
            date: field(date_col).map(String::from),
            label,
            labels,
        };
        docs.push(build_document(taxonomy, raw, lineno)?);
    }
    Ok(docs)
}

/// Serialize a document to the JSONL record shape.
pub fn document_to_json(doc: &Document) -> serde_json::Value {
    let mut obj = serde_json::Map::new();
    obj.insert("id".into(), doc.id.clone().into());
    obj.insert("text".into(), doc.text.clone().into());
    if let Some(date) = doc.date {
        obj.insert("date".into(), date.format("%Y-%m-%d").to_string().into());
    }
    if let Some(label) = doc.binary_label {
        obj.insert("label".into(), label.as_u8().into());
    }
    if let Some(set) = doc.attack_labels {
        let names: Vec<serde_json::Value> = set
            .iter()
            .map(|t| t.display_name().to_string().into())
            .collect();
        obj.insert("labels".into(), names.into());
    }
    serde_json::Value::Object(obj)
}

/// Load raw entity annotations from JSONL:
/// `{doc_id, begin, end, label, confidence}` per line.
pub fn load_annotations(path: &Path) -> Result<Vec<RawEntityAnnotation>, CorpusError> {
    let text = std::fs::read_to_string(path)?;
    load_annotations_str(&text)
}

pub fn load_annotations_str(text: &str) -> Result<Vec<RawEntityAnnotation>, CorpusError> {
    #[derive(Deserialize)]
    struct RawAnn {
        doc_id: String,
        begin: usize,
        end: usize,
        label: String,
        confidence: f64,
    }
    let mut anns = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawAnn = serde_json::from_str(line).map_err(|e| CorpusError::FormatError {
            line: lineno,
            message: e.to_string(),
        })?;
        if raw.begin >= raw.end {
            return Err(CorpusError::FormatError {
                line: lineno,
                message: format!("span [{}, {}) is empty or inverted", raw.begin, raw.end),
            });
        }
        if !(0.0..=1.0).contains(&raw.confidence) {
            return Err(CorpusError::FormatError {
                line: lineno,
                message: format!("confidence {} outside [0, 1]", raw.confidence),
            });
        }
        anns.push(RawEntityAnnotation {
            doc_id: raw.doc_id,
            begin: raw.begin,
            end: raw.end,
            label: raw.label,
            confidence: raw.confidence,
        });
    }
    Ok(anns)
}

/// Year-based split boundaries: train is `year <= cutoff_year`, test is
/// `cutoff_year < year <= end_year`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub cutoff_year: i32,
    pub end_year: i32,
}

impl SplitSpec {
    pub fn new(cutoff_year: i32, end_year: i32) -> Result<SplitSpec, CorpusError> {
        if cutoff_year > end_year {
            return Err(CorpusError::InvalidSplit(format!(
                "cutoff_year {cutoff_year} is after end_year {end_year}"
            )));
        }
        Ok(SplitSpec {
            cutoff_year,
            end_year,
        })
    }
}

/// Result of a temporal split. Dateless documents and documents after
/// `end_year` are excluded and counted.
#[derive(Clone, Debug)]
pub struct TemporalSplit {
    pub train: Vec<Document>,
    pub test: Vec<Document>,
    pub excluded: usize,
}

/// Partition documents by year.
pub fn temporal_split(docs: Vec<Document>, spec: &SplitSpec) -> TemporalSplit {
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut excluded = 0usize;
    for doc in docs {
        match doc.date.map(|d| d.year()) {
            Some(year) if year <= spec.cutoff_year => train.push(doc),
            Some(year) if year <= spec.end_year => test.push(doc),
            _ => excluded += 1,
        }
    }
    if excluded > 0 {
        log::warn!("temporal split excluded {excluded} document(s) (dateless or out of window)");
    }
    TemporalSplit {
        train,
        test,
        excluded,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::AttackType;

    fn dated(id: &str, year: i32) -> Document {
        Document {
            id: id.into(),
            text: String::new(),
            date: NaiveDate::from_ymd_opt(year, 6, 15),
            binary_label: None,
            attack_labels: None,
        }
    }

    #[test]
    fn jsonl_documents_with_labels() {
        let tax = Taxonomy::builtin();
        let text = r#"{"id":"d1","text":"some text","labels":["Armed Assault"]}"#;
        let docs = load_documents_str(text, CorpusFormat::Jsonl, &tax).unwrap();
        assert_eq!(docs.len(), 1);
        let set = docs[0].attack_labels.unwrap();
        assert!(set.contains(AttackType::ArmedAssault));
        assert_eq!(set.len(), 1);
    }

    #[test]
    fn multi_label_record() {
        let tax = Taxonomy::builtin();
        let text =
            r#"{"id":"d1","text":"t","labels":["Armed Assault","Hostage Taking (Kidnapping)"]}"#;
        let docs = load_documents_str(text, CorpusFormat::Jsonl, &tax).unwrap();
        let set = docs[0].attack_labels.unwrap();
        assert_eq!(set.len(), 2);
        assert!(set.contains(AttackType::HostageKidnapping));
    }

    #[test]
    fn duplicate_id_is_rejected() {
        let tax = Taxonomy::builtin();
        let text = "id,text\nd1,a\nd1,b\n";
        let err = load_documents_str(text, CorpusFormat::Csv, &tax).unwrap_err();
        match err {
            CorpusError::DuplicateId(id) => assert_eq!(id, "d1"),
            other => panic!("expected DuplicateId, got {other:?}"),
        }
    }

    #[test]
    fn csv_with_labels_and_dates() {
        let tax = Taxonomy::builtin();
        let text = "id,text,date,label,labels\nd1,hello,2017-03-05,1,Armed Assault|Unknown\n";
        let docs = load_documents_str(text, CorpusFormat::Csv, &tax).unwrap();
        assert_eq!(docs[0].date, NaiveDate::from_ymd_opt(2017, 3, 5));
        assert_eq!(docs[0].binary_label, Some(BinaryLabel::Conflict));
        assert_eq!(docs[0].attack_labels.unwrap().len(), 2);
    }

    #[test]
    fn unknown_label_reports_line() {
        let tax = Taxonomy::builtin();
        let text = "{\"id\":\"a\",\"text\":\"t\"}\n{\"id\":\"b\",\"text\":\"t\",\"labels\":[\"Cyber Attack\"]}";
        let err = load_documents_str(text, CorpusFormat::Jsonl, &tax).unwrap_err();
        match err {
            CorpusError::FormatError { line, .. } => assert_eq!(line, 2),
            other => panic!("expected FormatError, got {other:?}"),
        }
    }

    #[test]
    fn unparseable_date_becomes_absent() {
        let tax = Taxonomy::builtin();
        let text = r#"{"id":"d1","text":"t","date":"sometime in March"}"#;
        let docs = load_documents_str(text, CorpusFormat::Jsonl, &tax).unwrap();
        assert_eq!(docs[0].date, None);
    }

    #[test]
    fn bare_year_dates_parse() {
        assert_eq!(parse_date("2017"), NaiveDate::from_ymd_opt(2017, 1, 1));
        assert_eq!(
            parse_date("2017-03-05"),
            NaiveDate::from_ymd_opt(2017, 3, 5)
        );
        assert_eq!(parse_date("17"), None);
    }

    #[test]
    fn split_partitions_by_year() {
        let spec = SplitSpec::new(2016, 2020).unwrap();
        let docs = vec![
            dated("a", 2015),
            dated("b", 2016),
            dated("c", 2017),
            dated("d", 2020),
        ];
        let split = temporal_split(docs, &spec);
        assert_eq!(split.train.len(), 2);
        assert_eq!(split.test.len(), 2);
        assert_eq!(split.excluded, 0);
    }

    #[test]
    fn dateless_docs_are_excluded() {
        let spec = SplitSpec::new(2016, 2020).unwrap();
        let mut doc = dated("a", 2017);
        doc.date = None;
        let split = temporal_split(vec![doc.clone(), doc], &spec);
        assert!(split.train.is_empty());
        assert!(split.test.is_empty());
        assert_eq!(split.excluded, 2);
    }

    #[test]
    fn docs_after_end_year_are_excluded() {
        let spec = SplitSpec::new(2016, 2020).unwrap();
        let split = temporal_split(vec![dated("a", 2021)], &spec);
        assert_eq!(split.excluded, 1);
        assert!(SplitSpec::new(2020, 2016).is_err());
    }

    #[test]
    fn annotations_jsonl_round_trip() {
        let text = r#"{"doc_id":"d1","begin":0,"end":10,"label":"ORG","confidence":0.9}"#;
        let anns = load_annotations_str(text).unwrap();
        assert_eq!(anns.len(), 1);
        assert_eq!(anns[0].end, 10);
        let bad = r#"{"doc_id":"d1","begin":5,"end":5,"label":"ORG","confidence":0.9}"#;
        assert!(load_annotations_str(bad).is_err());
        let bad = r#"{"doc_id":"d1","begin":0,"end":5,"label":"ORG","confidence":1.5}"#;
        assert!(load_annotations_str(bad).is_err());
    }
}
