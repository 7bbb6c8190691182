//! Offline predictions files: the integration point for models scored out
//! of process. JSONL, one record per document:
//!
//! * `{"id": ..., "score": 0.99}` — binary task
//! * `{"id": ..., "scores": {"Armed Assault": 0.98, ...}}` — attack task
//! * `{"id": ..., "tags": ["B-Person", "O", ...]}` — NER task (optionally with
//!   `"tokens": [...]` of the same length)
//!
//! A file must stick to one record shape throughout.

use std::path::Path;
use std::time::Duration;

use serde::Deserialize;

use crate::backends::{Backend, BackendError, Prediction, PredictionPayload, PredictionSet, Task};
use crate::corpus::{Document, TagSequence};
use crate::taxonomy::{CategoryVector, Taxonomy};

#[derive(Deserialize)]
struct RawPrediction {
    id: String,
    #[serde(default)]
    score: Option<f64>,
    #[serde(default)]
    scores: Option<serde_json::Map<String, serde_json::Value>>,
    #[serde(default)]
    tags: Option<Vec<String>>,
    #[serde(default)]
    tokens: Option<Vec<String>>,
}

fn payload_from_raw(
    raw: RawPrediction,
    taxonomy: &Taxonomy,
    line: usize,
) -> Result<(String, PredictionPayload), BackendError> {
    let fields_set =
        raw.score.is_some() as u8 + raw.scores.is_some() as u8 + raw.tags.is_some() as u8;
    if fields_set != 1 {
        return Err(BackendError::FormatError {
            line,
            message: "record must have exactly one of `score`, `scores`, `tags`".into(),
        });
    }
    if let Some(score) = raw.score {
        if !(0.0..=1.0).contains(&score) {
            return Err(BackendError::FormatError {
                line,
                message: format!("score {score} outside [0, 1]"),
            });
        }
        return Ok((raw.id, PredictionPayload::Binary { score }));
    }
    if let Some(scores) = raw.scores {
        let mut vector = CategoryVector::zero();
        for (label, value) in &scores {
            let category =
                taxonomy
                    .normalize_attack_label(label)
                    .map_err(|e| BackendError::FormatError {
                        line,
                        message: e.to_string(),
                    })?;
            let prob = value.as_f64().ok_or_else(|| BackendError::FormatError {
                line,
                message: format!("non-numeric score for `{label}`"),
            })?;
            if !(0.0..=1.0).contains(&prob) {
                return Err(BackendError::FormatError {
                    line,
                    message: format!("score {prob} for `{label}` outside [0, 1]"),
                });
            }
            vector.set(category, prob);
        }
        return Ok((raw.id, PredictionPayload::Attack { scores: vector }));
    }
    let tags = raw.tags.expect("one field is set");
    for tag in &tags {
        if tag != "O" {
            let valid = crate::corpus::conll::split_tag(tag)
                .map(|(_, name)| taxonomy.normalize_entity_label(name).is_ok())
                .unwrap_or(false);
            if !valid {
                return Err(BackendError::FormatError {
                    line,
                    message: format!("unknown tag `{tag}`"),
                });
            }
        }
    }
    let tokens = match raw.tokens {
        Some(tokens) if tokens.len() == tags.len() => tokens,
        Some(_) => {
            return Err(BackendError::FormatError {
                line,
                message: "`tokens` and `tags` lengths differ".into(),
            })
        }
        None => vec![String::new(); tags.len()],
    };
    Ok((
        raw.id,
        PredictionPayload::Ner {
            tags: TagSequence { tokens, tags },
        },
    ))
}

/// Read a predictions file. The task is inferred from the first record and
/// enforced across the file; the set's name defaults to the file stem.
pub fn load_predictions_file(
    path: &Path,
    taxonomy: &Taxonomy,
) -> Result<PredictionSet, BackendError> {
    let text = std::fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "predictions".to_string());
    load_predictions_str(&text, &name, taxonomy)
}

/// As [`load_predictions_file`], from in-memory text.
pub fn load_predictions_str(
    text: &str,
    name: &str,
    taxonomy: &Taxonomy,
) -> Result<PredictionSet, BackendError> {
    let mut task: Option<Task> = None;
    let mut predictions = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawPrediction =
            serde_json::from_str(line).map_err(|e| BackendError::FormatError {
                line: lineno,
                message: e.to_string(),
            })?;
        let (doc_id, payload) = payload_from_raw(raw, taxonomy, lineno)?;
        match task {
            None => task = Some(payload.task()),
            Some(t) if t != payload.task() => {
                return Err(BackendError::MixedTasks { line: lineno })
            }
            _ => {}
        }
        predictions.push(Prediction {
            doc_id,
            payload,
            latency: None,
            failed: false,
        });
    }
    let task = task.ok_or(BackendError::FormatError {
        line: 0,
        message: "predictions file is empty".into(),
    })?;
    PredictionSet::new(name.to_string(), task, predictions, Duration::ZERO)
}

/// Serves predictions from a loaded file. Documents without a record get a
/// flagged zero prediction.
pub struct PredictionsFileBackend {
    name: String,
    set: PredictionSet,
}

impl PredictionsFileBackend {
    pub fn from_file(name: &str, path: &Path, taxonomy: &Taxonomy) -> Result<Self, BackendError> {
        let mut set = load_predictions_file(path, taxonomy)?;
        set.backend_name = name.to_string();
        Ok(PredictionsFileBackend {
            name: name.to_string(),
            set,
        })
    }

    pub fn from_set(name: &str, set: PredictionSet) -> Self {
        PredictionsFileBackend {
            name: name.to_string(),
            set,
        }
    }

    pub fn task(&self) -> Task {
        self.set.task
    }
}

impl Backend for PredictionsFileBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn supports(&self, task: Task) -> bool {
        self.set.task == task
    }

    fn predict_batch(
        &self,
        task: Task,
        docs: &[Document],
    ) -> Result<Vec<Prediction>, BackendError> {
        Ok(docs
            .iter()
            .map(|doc| match self.set.get(&doc.id) {
                Some(p) => {
                    let mut p = p.clone();
                    // NER tag sequences must align to the document's tokens.
                    if let PredictionPayload::Ner { tags } = &p.payload {
                        let doc_tokens = doc.text.split_whitespace().count();
                        if tags.len() != doc_tokens {
                            log::warn!(
                                "prediction for doc {} has {} tags but document has {} tokens; scoring all-O",
                                doc.id,
                                tags.len(),
                                doc_tokens
                            );
                            return Prediction::failed_for(task, doc);
                        }
                    }
                    p.failed = false;
                    p
                }
                None => {
                    log::warn!(
                        "predictions file {} has no record for doc {}; scoring zero",
                        self.name,
                        doc.id
                    );
                    Prediction::failed_for(task, doc)
                }
            })
            .collect())
    }
}
