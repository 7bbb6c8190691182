//! Prediction sources and run machinery.
//!
//! Two adapters produce [`PredictionSet`]s: an offline predictions-file
//! reader ([`file::PredictionsFileBackend`]) and an HTTP chat client
//! implementing the prompt/JSON-output protocol ([`http::HttpChatBackend`]).
//! [`run_backend`] drives either over a corpus with bounded concurrency and
//! wall-clock timing.

pub mod file;
pub mod http;
pub mod json_extract;
pub mod prompt;

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Document, TagSequence, Tokenizer, WhitespaceTokenizer};
use crate::taxonomy::CategoryVector;

pub use file::{load_predictions_file, load_predictions_str, PredictionsFileBackend};
pub use http::{
    http_generate, ChatMessage, EndpointConfig, GenerationRequest, GenerationResponse,
    HttpChatBackend,
};
pub use prompt::{
    align_ner_output, parse_classification_output, render_classification_prompt, render_ner_prompt,
    ClassificationParse, CLASSIFICATION_PROMPT,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Binary,
    Attack,
    Ner,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Task::Binary => f.write_str("binary"),
            Task::Attack => f.write_str("attack"),
            Task::Ner => f.write_str("ner"),
        }
    }
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("unexpected HTTP status {status}")]
    BadStatus { status: u16 },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("line {line}: {message}")]
    FormatError { line: usize, message: String },
    #[error("line {line}: mixes tasks with earlier lines")]
    MixedTasks { line: usize },
    #[error("duplicate prediction id `{0}`")]
    DuplicateId(String),
    #[error("backend `{backend}` does not support the {task} task")]
    UnsupportedTask { backend: String, task: Task },
    #[error("empty event batch")]
    EmptyBatch,
    #[error("entity type list is empty")]
    InvalidTypes,
    #[error("text is empty")]
    EmptyText,
    #[error("no documents to run")]
    EmptyCorpus,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Task-specific model output for one document.
#[derive(Clone, Debug, PartialEq)]
pub enum PredictionPayload {
    Binary { score: f64 },
    Attack { scores: CategoryVector },
    Ner { tags: TagSequence },
}

impl PredictionPayload {
    pub fn task(&self) -> Task {
        match self {
            PredictionPayload::Binary { .. } => Task::Binary,
            PredictionPayload::Attack { .. } => Task::Attack,
            PredictionPayload::Ner { .. } => Task::Ner,
        }
    }
}

/// One model output: exactly the payload matching the task, an optional
/// request latency, and a flag marking failed slots (backend errors or
/// unparseable output) that score as "no prediction".
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub doc_id: String,
    pub payload: PredictionPayload,
    pub latency: Option<Duration>,
    pub failed: bool,
}

impl Prediction {
    /// Zero-valued flagged prediction for a document: score 0, all-zero
    /// vector, or all-O tags over a whitespace tokenization of the text.
    pub fn failed_for(task: Task, doc: &Document) -> Prediction {
        let payload = match task {
            Task::Binary => PredictionPayload::Binary { score: 0.0 },
            Task::Attack => PredictionPayload::Attack {
                scores: CategoryVector::zero(),
            },
            Task::Ner => {
                let tokens = WhitespaceTokenizer
                    .tokenize(&doc.text)
                    .into_iter()
                    .map(|t| t.text)
                    .collect();
                PredictionPayload::Ner {
                    tags: TagSequence::all_outside(tokens),
                }
            }
        };
        Prediction {
            doc_id: doc.id.clone(),
            payload,
            latency: None,
            failed: true,
        }
    }
}

/// Wall-clock timing for a whole backend run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TimingStats {
    pub total_secs: f64,
    pub per_doc_secs: f64,
    pub docs: usize,
}

impl TimingStats {
    pub fn from_total(total: Duration, docs: usize) -> TimingStats {
        let total_secs = total.as_secs_f64();
        TimingStats {
            total_secs,
            per_doc_secs: if docs == 0 {
                0.0
            } else {
                total_secs / docs as f64
            },
            docs,
        }
    }
}

/// A backend's outputs for a corpus, in input order, with timing.
#[derive(Clone, Debug)]
pub struct PredictionSet {
    pub backend_name: String,
    pub task: Task,
    predictions: Vec<Prediction>,
    index: HashMap<String, usize>,
    pub timing: TimingStats,
}

impl PredictionSet {
    pub fn new(
        backend_name: String,
        task: Task,
        predictions: Vec<Prediction>,
        total: Duration,
    ) -> Result<PredictionSet, BackendError> {
        let mut index = HashMap::with_capacity(predictions.len());
        for (i, p) in predictions.iter().enumerate() {
            if index.insert(p.doc_id.clone(), i).is_some() {
                return Err(BackendError::DuplicateId(p.doc_id.clone()));
            }
        }
        let timing = TimingStats::from_total(total, predictions.len());
        Ok(PredictionSet {
            backend_name,
            task,
            predictions,
            index,
            timing,
        })
    }

    pub fn get(&self, doc_id: &str) -> Option<&Prediction> {
        self.index.get(doc_id).map(|i| &self.predictions[*i])
    }

    pub fn iter(&self) -> impl Iterator<Item = &Prediction> {
        self.predictions.iter()
    }

    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictions.is_empty()
    }

    /// Count of flagged (failed/unparseable) predictions.
    pub fn parse_failures(&self) -> usize {
        self.predictions.iter().filter(|p| p.failed).count()
    }
}

/// A source of predictions. `predict_batch` is called with 1..=batch_size
/// documents and must return one prediction per document, in order.
pub trait Backend: Send + Sync {
    fn name(&self) -> &str;

    fn supports(&self, task: Task) -> bool;

    fn predict_batch(&self, task: Task, docs: &[Document])
        -> Result<Vec<Prediction>, BackendError>;
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub concurrency: usize,
    pub batch_size: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            concurrency: 1,
            batch_size: 1,
        }
    }
}

/// Run a backend over a corpus: work is issued in batches with at most
/// `concurrency` in flight, results are reassembled in input order, and wall
/// time is measured once around the whole run. Per-batch backend errors
/// become flagged zero predictions; only configuration errors abort.
pub fn run_backend(
    backend: &dyn Backend,
    docs: &[Document],
    task: Task,
    options: &RunOptions,
) -> Result<PredictionSet, BackendError> {
    if docs.is_empty() {
        return Err(BackendError::EmptyCorpus);
    }
    if !backend.supports(task) {
        return Err(BackendError::UnsupportedTask {
            backend: backend.name().to_string(),
            task,
        });
    }
    let batch_size = options.batch_size.max(1);
    let workers = options.concurrency.max(1);
    let batches: Vec<&[Document]> = docs.chunks(batch_size).collect();

    let started = Instant::now();
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Vec<Prediction>>>> = Mutex::new(vec![None; batches.len()]);

    let predict_into = |batch_idx: usize| {
        let batch = batches[batch_idx];
        let outcome = backend.predict_batch(task, batch).unwrap_or_else(|e| {
            log::warn!(
                "backend {} failed on batch {}: {e}; scoring zero predictions",
                backend.name(),
                batch_idx
            );
            batch
                .iter()
                .map(|d| Prediction::failed_for(task, d))
                .collect()
        });
        let outcome = if outcome.len() == batch.len() {
            outcome
        } else {
            log::warn!(
                "backend {} returned {} predictions for a batch of {}; scoring zero predictions",
                backend.name(),
                outcome.len(),
                batch.len()
            );
            batch
                .iter()
                .map(|d| Prediction::failed_for(task, d))
                .collect()
        };
        results.lock().unwrap()[batch_idx] = Some(outcome);
    };

    if workers == 1 {
        for i in 0..batches.len() {
            predict_into(i);
        }
    } else {
        std::thread::scope(|scope| {
            for _ in 0..workers.min(batches.len()) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= batches.len() {
                        break;
                    }
                    predict_into(i);
                });
            }
        });
    }

    let total = started.elapsed();
    let predictions: Vec<Prediction> = results
        .into_inner()
        .unwrap()
        .into_iter()
        .flat_map(|slot| slot.expect("every batch produced"))
        .collect();
    PredictionSet::new(backend.name().to_string(), task, predictions, total)
}
