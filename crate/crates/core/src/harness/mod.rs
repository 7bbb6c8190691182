//! Run configuration and orchestration: corpus → backends → metrics →
//! timeseries, with manifest and report emission.

pub mod report;
pub mod svg;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::backends::{
    run_backend, Backend, BackendError, HttpChatBackend, PredictionPayload, PredictionSet,
    PredictionsFileBackend, RunOptions, Task,
};
use crate::corpus::{
    self, bio_to_spans, CorpusError, CorpusFormat, Document, EntitySpan, SplitSpec, TagSequence,
};
use crate::metrics::{
    self, accuracy, class_scores, macro_avg, multilabel, one_vs_rest, weighted_avg,
    ConfusionCounts, MetricsError,
};
use crate::par;
use crate::taxonomy::{
    AttackSet, AttackType, BinaryLabel, CategoryVector, Taxonomy, TaxonomyError,
};
use crate::timeseries::{
    bias_summary, cumulative_series, Bucketing, CumulativeSeries, DateWindow, TimeseriesError,
};

pub use report::{
    emit_reports, AttackReport, BackendReport, BackendStatus, BinaryReport, ComparisonReport,
    CurveArtifact, CurveKind, EmitOptions, NerReport, RunArtifacts, RunManifest, TaskMetrics,
    TimelineArtifact,
};

/// Identifier for the built-in NER prompt template, recorded in manifests so
/// reports name the protocol in use.
pub const NER_PROMPT_VERSION: &str = "evbench-builtin-1";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Timeseries(#[from] TimeseriesError),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Where a backend's predictions come from.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum BackendKind {
    #[serde(rename = "predictions-file")]
    PredictionsFile { path: PathBuf },
    #[serde(rename = "http-chat")]
    HttpChat {
        #[serde(flatten)]
        endpoint: crate::backends::EndpointConfig,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BackendDescriptor {
    pub name: String,
    #[serde(flatten)]
    pub kind: BackendKind,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct CorpusConfig {
    #[serde(default)]
    pub documents: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<CorpusFormat>,
    #[serde(default)]
    pub conll: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct WindowConfig {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

fn default_threshold() -> f64 {
    0.5
}

fn default_batch_size() -> usize {
    1
}

fn default_concurrency() -> usize {
    4
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_bucketing() -> Bucketing {
    Bucketing::Month
}

/// Full run configuration. The JSON config file deserializes into this;
/// CLI flags override individual fields (flags > config > defaults).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub task: Task,
    #[serde(default)]
    pub corpus: CorpusConfig,
    #[serde(default)]
    pub split: Option<SplitSpec>,
    pub backends: Vec<BackendDescriptor>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub alias_tables: Option<PathBuf>,
    #[serde(default = "default_bucketing")]
    pub bucketing: Bucketing,
    #[serde(default)]
    pub window: Option<WindowConfig>,
    #[serde(default)]
    pub reproducible: bool,
}

/// CLI flag overrides; `None` keeps the config/default value.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub threshold: Option<f64>,
    pub batch_size: Option<usize>,
    pub concurrency: Option<usize>,
    pub reproducible: bool,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<RunConfig, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Ok(config)
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(out_dir) = &overrides.out_dir {
            self.out_dir = out_dir.clone();
        }
        if let Some(threshold) = overrides.threshold {
            self.threshold = threshold;
        }
        if let Some(batch_size) = overrides.batch_size {
            self.batch_size = batch_size;
        }
        if let Some(concurrency) = overrides.concurrency {
            self.concurrency = concurrency;
        }
        if overrides.reproducible {
            self.reproducible = true;
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.backends.is_empty() {
            return Err(HarnessError::Config(
                "at least one backend is required".into(),
            ));
        }
        let mut names: Vec<&str> = self.backends.iter().map(|b| b.name.as_str()).collect();
        names.sort();
        names.dedup();
        if names.len() != self.backends.len() {
            return Err(HarnessError::Config("backend names must be unique".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(HarnessError::Config(format!(
                "threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        if self.batch_size == 0 {
            return Err(HarnessError::Config("batch_size must be >= 1".into()));
        }
        if self.concurrency == 0 {
            return Err(HarnessError::Config("concurrency must be >= 1".into()));
        }
        match self.task {
            Task::Ner => {
                if self.corpus.conll.is_none() {
                    return Err(HarnessError::Config(
                        "ner task requires corpus.conll".into(),
                    ));
                }
            }
            _ => {
                if self.corpus.documents.is_none() {
                    return Err(HarnessError::Config(format!(
                        "{} task requires corpus.documents",
                        self.task
                    )));
                }
            }
        }
        Ok(())
    }

    fn taxonomy(&self) -> Result<Taxonomy, HarnessError> {
        match &self.alias_tables {
            Some(path) => Ok(Taxonomy::with_alias_file(path)?),
            None => Ok(Taxonomy::builtin()),
        }
    }

    /// All input files contributing to the corpus digest, in config order.
    fn input_files(&self) -> Vec<PathBuf> {
        let mut files = Vec::new();
        if let Some(p) = &self.corpus.documents {
            files.push(p.clone());
        }
        if let Some(p) = &self.corpus.conll {
            files.push(p.clone());
        }
        if let Some(p) = &self.alias_tables {
            files.push(p.clone());
        }
        for backend in &self.backends {
            if let BackendKind::PredictionsFile { path } = &backend.kind {
                files.push(path.clone());
            }
        }
        files
    }

    fn format_or_infer(&self, path: &Path) -> Result<CorpusFormat, HarnessError> {
        if let Some(format) = self.corpus.format {
            return Ok(format);
        }
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => Ok(CorpusFormat::Jsonl),
            Some("csv") => Ok(CorpusFormat::Csv),
            _ => Err(HarnessError::Config(format!(
                "cannot infer corpus format from {}; set corpus.format",
                path.display()
            ))),
        }
    }
}

/// SHA-256 over the bytes of every input file (length-framed), so the digest
/// changes exactly when some input file's bytes change. A missing file
/// hashes as a marker rather than aborting: the backend that needs it fails
/// in isolation.
pub fn corpus_digest(files: &[PathBuf]) -> Result<String, HarnessError> {
    let mut hasher = Sha256::new();
    for path in files {
        match std::fs::read(path) {
            Ok(bytes) => {
                hasher.update([0u8]);
                hasher.update((bytes.len() as u64).to_le_bytes());
                hasher.update(&bytes);
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => hasher.update([1u8]),
            Err(e) => return Err(e.into()),
        }
    }
    let digest = hasher.finalize();
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    Ok(format!("sha256:{hex}"))
}

/// Evaluation corpus, shaped per task.
pub enum EvalCorpus {
    /// Binary or attack: documents carrying the matching gold labels.
    Labeled(Vec<Document>),
    /// NER: one document per CoNLL sentence plus the gold tag sequences.
    Tagged {
        docs: Vec<Document>,
        gold: BTreeMap<String, TagSequence>,
    },
}

impl EvalCorpus {
    pub fn docs(&self) -> &[Document] {
        match self {
            EvalCorpus::Labeled(docs) => docs,
            EvalCorpus::Tagged { docs, .. } => docs,
        }
    }
}

/// Load and filter the evaluation corpus for the configured task. Applies
/// the temporal split (keeping the test side) when one is configured.
pub fn load_eval_corpus(
    config: &RunConfig,
    taxonomy: &Taxonomy,
) -> Result<EvalCorpus, HarnessError> {
    match config.task {
        Task::Ner => {
            let path = config.corpus.conll.as_ref().expect("validated");
            let text = std::fs::read_to_string(path)?;
            let sequences = corpus::parse_conll(&text, taxonomy)?;
            if sequences.is_empty() {
                return Err(HarnessError::Config(format!(
                    "{}: no sentences found",
                    path.display()
                )));
            }
            let mut docs = Vec::with_capacity(sequences.len());
            let mut gold = BTreeMap::new();
            for (i, seq) in sequences.into_iter().enumerate() {
                let id = format!("s{:05}", i + 1);
                docs.push(Document {
                    id: id.clone(),
                    text: seq.tokens.join(" "),
                    date: None,
                    binary_label: None,
                    attack_labels: None,
                });
                gold.insert(id, seq);
            }
            Ok(EvalCorpus::Tagged { docs, gold })
        }
        task => {
            let path = config.corpus.documents.as_ref().expect("validated");
            let format = config.format_or_infer(path)?;
            let docs = corpus::load_documents(path, format, taxonomy)?;
            let docs = match &config.split {
                Some(spec) => {
                    let split = corpus::temporal_split(docs, spec);
                    log::info!(
                        "temporal split: {} train / {} test / {} excluded",
                        split.train.len(),
                        split.test.len(),
                        split.excluded
                    );
                    split.test
                }
                None => docs,
            };
            let total = docs.len();
            let labeled: Vec<Document> = docs
                .into_iter()
                .filter(|d| match task {
                    Task::Binary => d.binary_label.is_some(),
                    _ => d.attack_labels.is_some(),
                })
                .collect();
            if labeled.len() < total {
                log::warn!(
                    "{} document(s) lack gold labels for the {task} task and were dropped",
                    total - labeled.len()
                );
            }
            if labeled.is_empty() {
                return Err(HarnessError::Config(
                    "no documents with gold labels to evaluate".into(),
                ));
            }
            Ok(EvalCorpus::Labeled(labeled))
        }
    }
}

fn build_backend(
    descriptor: &BackendDescriptor,
    taxonomy: &Arc<Taxonomy>,
) -> Result<Box<dyn Backend>, BackendError> {
    match &descriptor.kind {
        BackendKind::PredictionsFile { path } => Ok(Box::new(PredictionsFileBackend::from_file(
            &descriptor.name,
            path,
            taxonomy,
        )?)),
        BackendKind::HttpChat { endpoint } => Ok(Box::new(HttpChatBackend::new(
            &descriptor.name,
            endpoint.clone(),
            Arc::clone(taxonomy),
        ))),
    }
}

/// Per-backend multipliers relative to the slowest backend: the slowest
/// reports 1.00x, everything else `max_per_doc_time / per_doc_time`.
pub fn relative_speed(per_doc_secs: &[(String, f64)]) -> Vec<(String, f64)> {
    let slowest = per_doc_secs
        .iter()
        .map(|(_, t)| *t)
        .fold(0.0f64, f64::max)
        .max(1e-12);
    per_doc_secs
        .iter()
        .map(|(name, t)| (name.clone(), slowest / t.max(1e-12)))
        .collect()
}

struct BackendRun {
    name: String,
    outcome: Result<PredictionSet, BackendError>,
}

/// Everything a run produces in memory, before emission.
pub struct RunOutcome {
    pub report: ComparisonReport,
    pub manifest: RunManifest,
    pub artifacts: RunArtifacts,
    pub failed_backends: usize,
}

/// Execute the configured run: load the corpus, run every backend, score per
/// task, and assemble the manifest, report, and plot artifacts. Per-backend
/// failures are isolated into failure blocks; configuration and corpus
/// errors abort.
pub fn run(config: &RunConfig) -> Result<RunOutcome, HarnessError> {
    config.validate()?;
    let started_at = chrono::Utc::now().to_rfc3339();
    let taxonomy = Arc::new(config.taxonomy()?);
    let corpus = load_eval_corpus(config, &taxonomy)?;
    let digest = corpus_digest(&config.input_files())?;

    let options = RunOptions {
        concurrency: config.concurrency,
        batch_size: config.batch_size,
    };
    let runs: Vec<BackendRun> = config
        .backends
        .iter()
        .map(|descriptor| {
            let outcome = build_backend(descriptor, &taxonomy).and_then(|backend| {
                run_backend(backend.as_ref(), corpus.docs(), config.task, &options)
            });
            if let Err(e) = &outcome {
                log::error!("backend {} failed: {e}", descriptor.name);
            }
            BackendRun {
                name: descriptor.name.clone(),
                outcome,
            }
        })
        .collect();

    let mut artifacts = RunArtifacts::default();
    let mut backend_reports = Vec::new();
    let mut failed = 0usize;
    let mut timings: Vec<(String, f64)> = Vec::new();

    for run in &runs {
        match &run.outcome {
            Ok(set) => {
                let metrics = score_task(config, &taxonomy, &corpus, set)?;
                artifacts.curves.extend(curves_for(config, &corpus, set)?);
                timings.push((run.name.clone(), set.timing.per_doc_secs));
                backend_reports.push(BackendReport {
                    name: run.name.clone(),
                    status: BackendStatus::Ok,
                    parse_failures: set.parse_failures(),
                    docs: set.len(),
                    timing: if config.reproducible {
                        None
                    } else {
                        Some(set.timing)
                    },
                    metrics: Some(metrics),
                });
            }
            Err(e) => {
                failed += 1;
                backend_reports.push(BackendReport {
                    name: run.name.clone(),
                    status: BackendStatus::Failed(e.to_string()),
                    parse_failures: 0,
                    docs: 0,
                    timing: None,
                    metrics: None,
                });
            }
        }
    }

    if config.task == Task::Attack {
        let memberships: Vec<(&str, BTreeMap<String, AttackSet>)> = runs
            .iter()
            .filter_map(|r| r.outcome.as_ref().ok())
            .map(|set| {
                (
                    set.backend_name.as_str(),
                    attack_sets_of(set, config.threshold),
                )
            })
            .collect();
        if let Some((timelines, biases)) = timelines_for(config, &corpus, &memberships)? {
            for report in &mut backend_reports {
                if let Some(TaskMetrics::Attack(attack)) = &mut report.metrics {
                    attack.bias = Some(
                        biases
                            .iter()
                            .filter(|b| b.backend == report.name)
                            .cloned()
                            .collect(),
                    );
                }
            }
            artifacts.timelines = timelines;
        }
    }

    let speed = if config.reproducible || timings.is_empty() {
        None
    } else {
        Some(relative_speed(&timings))
    };

    let finished_at = chrono::Utc::now().to_rfc3339();
    let manifest = RunManifest {
        tool: "evbench".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        task: config.task,
        config: serde_json::to_value(config)?,
        ner_prompt: (config.task == Task::Ner).then_some(NER_PROMPT_VERSION),
        started_at: (!config.reproducible).then_some(started_at),
        finished_at: (!config.reproducible).then_some(finished_at),
        corpus_digest: digest,
        backends: backend_reports
            .iter()
            .map(|r| report::ManifestBackend {
                name: r.name.clone(),
                status: r.status.label(),
                docs: r.docs,
                parse_failures: r.parse_failures,
                total_secs: r.timing.map(|t| t.total_secs),
                per_doc_secs: r.timing.map(|t| t.per_doc_secs),
            })
            .collect(),
    };

    let report = ComparisonReport {
        task: config.task,
        threshold: config.threshold,
        backends: backend_reports,
        relative_speed: speed,
    };

    Ok(RunOutcome {
        report,
        manifest,
        artifacts,
        failed_backends: failed,
    })
}

/// Map every prediction to its thresholded attack set.
fn attack_sets_of(set: &PredictionSet, tau: f64) -> BTreeMap<String, AttackSet> {
    set.iter()
        .map(|p| {
            let labels = match &p.payload {
                PredictionPayload::Attack { scores } => scores.threshold(tau),
                _ => AttackSet::EMPTY,
            };
            (p.doc_id.clone(), labels)
        })
        .collect()
}

fn binary_score_of(set: &PredictionSet, doc_id: &str) -> f64 {
    match set.get(doc_id).map(|p| &p.payload) {
        Some(PredictionPayload::Binary { score }) => *score,
        _ => 0.0,
    }
}

fn attack_vector_of(set: &PredictionSet, doc_id: &str) -> CategoryVector {
    match set.get(doc_id).map(|p| &p.payload) {
        Some(PredictionPayload::Attack { scores }) => scores.clone(),
        _ => CategoryVector::zero(),
    }
}

fn score_task(
    config: &RunConfig,
    taxonomy: &Taxonomy,
    corpus: &EvalCorpus,
    set: &PredictionSet,
) -> Result<TaskMetrics, HarnessError> {
    match (config.task, corpus) {
        (Task::Binary, EvalCorpus::Labeled(docs)) => Ok(TaskMetrics::Binary(score_binary(
            docs,
            set,
            config.threshold,
        )?)),
        (Task::Attack, EvalCorpus::Labeled(docs)) => Ok(TaskMetrics::Attack(score_attack(
            docs,
            set,
            config.threshold,
        )?)),
        (Task::Ner, EvalCorpus::Tagged { docs, gold }) => {
            Ok(TaskMetrics::Ner(score_ner(taxonomy, docs, gold, set)?))
        }
        _ => Err(HarnessError::Config("task/corpus mismatch".into())),
    }
}

fn score_binary(
    docs: &[Document],
    set: &PredictionSet,
    tau: f64,
) -> Result<BinaryReport, HarnessError> {
    let gold: Vec<usize> = docs
        .iter()
        .map(|d| d.binary_label.expect("filtered at load").as_u8() as usize)
        .collect();
    let scores: Vec<f64> = docs.iter().map(|d| binary_score_of(set, &d.id)).collect();
    let pred: Vec<usize> = scores.iter().map(|s| (*s >= tau) as usize).collect();
    let counts = ConfusionCounts::from_labels(&gold, &pred, 2)?;
    let per_class = class_scores(&counts);
    let gold_bools: Vec<bool> = gold.iter().map(|g| *g == 1).collect();
    let roc = metrics::roc_curve(&scores, &gold_bools)?;
    Ok(BinaryReport {
        confusion: counts.rows(),
        classes: BTreeMap::from([
            ("0".to_string(), per_class[0]),
            ("1".to_string(), per_class[1]),
        ]),
        macro_avg: macro_avg(&per_class),
        weighted_avg: weighted_avg(&per_class),
        accuracy: accuracy(&counts),
        auc: roc.auc,
    })
}

fn score_attack(
    docs: &[Document],
    set: &PredictionSet,
    tau: f64,
) -> Result<AttackReport, HarnessError> {
    let gold: BTreeMap<String, AttackSet> = docs
        .iter()
        .map(|d| (d.id.clone(), d.attack_labels.expect("filtered at load")))
        .collect();
    let vectors: BTreeMap<String, CategoryVector> = docs
        .iter()
        .map(|d| (d.id.clone(), attack_vector_of(set, &d.id)))
        .collect();
    let pred_sets: BTreeMap<String, AttackSet> = vectors
        .iter()
        .map(|(id, v)| (id.clone(), v.threshold(tau)))
        .collect();
    Ok(AttackReport {
        one_vs_rest: one_vs_rest(&gold, &vectors, tau)?,
        multilabel: multilabel(&gold, &pred_sets)?,
        bias: None,
    })
}

fn score_ner(
    taxonomy: &Taxonomy,
    docs: &[Document],
    gold: &BTreeMap<String, TagSequence>,
    set: &PredictionSet,
) -> Result<NerReport, HarnessError> {
    let mut gold_seqs = Vec::with_capacity(docs.len());
    let mut pred_seqs = Vec::with_capacity(docs.len());
    for doc in docs {
        let gold_seq = &gold[&doc.id];
        let pred_seq = match set.get(&doc.id).map(|p| &p.payload) {
            Some(PredictionPayload::Ner { tags }) if tags.len() == gold_seq.len() => tags.clone(),
            other => {
                if other.is_some() {
                    log::warn!(
                        "prediction for doc {} does not align with gold tokens; scoring all-O",
                        doc.id
                    );
                }
                TagSequence::all_outside(gold_seq.tokens.clone())
            }
        };
        gold_seqs.push(gold_seq.clone());
        pred_seqs.push(pred_seq);
    }
    let token = metrics::ner_token_metrics(&gold_seqs, &pred_seqs)?;
    let collect_spans = |seqs: &[TagSequence]| -> Vec<EntitySpan> {
        seqs.iter()
            .zip(docs)
            .flat_map(|(seq, doc)| bio_to_spans(seq, taxonomy, &doc.id))
            .collect()
    };
    let span = metrics::ner_span_metrics(&collect_spans(&gold_seqs), &collect_spans(&pred_seqs));
    Ok(NerReport { token, span })
}

/// Curve battery for one backend: ROC/PR/F1 per attack type, or one set for
/// the binary task. NER has no score sweep.
fn curves_for(
    config: &RunConfig,
    corpus: &EvalCorpus,
    set: &PredictionSet,
) -> Result<Vec<CurveArtifact>, HarnessError> {
    let mut artifacts = Vec::new();
    match (config.task, corpus) {
        (Task::Binary, EvalCorpus::Labeled(docs)) => {
            let gold: Vec<bool> = docs
                .iter()
                .map(|d| d.binary_label == Some(BinaryLabel::Conflict))
                .collect();
            let scores: Vec<f64> = docs.iter().map(|d| binary_score_of(set, &d.id)).collect();
            for (kind, series) in [
                (CurveKind::Roc, metrics::roc_curve(&scores, &gold)?),
                (CurveKind::Pr, metrics::pr_curve(&scores, &gold)?),
                (
                    CurveKind::F1,
                    metrics::f1_vs_threshold(&scores, &gold, None)?,
                ),
            ] {
                artifacts.push(CurveArtifact {
                    backend: set.backend_name.clone(),
                    label: "binary".into(),
                    kind,
                    series,
                });
            }
        }
        (Task::Attack, EvalCorpus::Labeled(docs)) => {
            let vectors: Vec<CategoryVector> =
                docs.iter().map(|d| attack_vector_of(set, &d.id)).collect();
            let gold_sets: Vec<AttackSet> = docs
                .iter()
                .map(|d| d.attack_labels.expect("filtered at load"))
                .collect();
            let per_type: Vec<Result<Vec<CurveArtifact>, MetricsError>> =
                par::map_slice(&AttackType::ALL, |t| {
                    let gold: Vec<bool> = gold_sets.iter().map(|s| s.contains(*t)).collect();
                    let scores: Vec<f64> = vectors.iter().map(|v| v.get(*t)).collect();
                    Ok(vec![
                        CurveArtifact {
                            backend: set.backend_name.clone(),
                            label: t.slug().into(),
                            kind: CurveKind::Roc,
                            series: metrics::roc_curve(&scores, &gold)?,
                        },
                        CurveArtifact {
                            backend: set.backend_name.clone(),
                            label: t.slug().into(),
                            kind: CurveKind::Pr,
                            series: metrics::pr_curve(&scores, &gold)?,
                        },
                        CurveArtifact {
                            backend: set.backend_name.clone(),
                            label: t.slug().into(),
                            kind: CurveKind::F1,
                            series: metrics::f1_vs_threshold(&scores, &gold, None)?,
                        },
                    ])
                });
            for group in per_type {
                artifacts.extend(group?);
            }
        }
        _ => {}
    }
    Ok(artifacts)
}

type TimelineAnalysis = (Vec<TimelineArtifact>, Vec<crate::timeseries::BiasSummary>);

/// Cumulative timelines per attack type: gold vs every backend, over the
/// configured window (explicit `window`, else test-split years, else the
/// span of observed dates). Returns `None` when no documents are dated.
fn timelines_for(
    config: &RunConfig,
    corpus: &EvalCorpus,
    backends: &[(&str, BTreeMap<String, AttackSet>)],
) -> Result<Option<TimelineAnalysis>, HarnessError> {
    if backends.is_empty() {
        return Ok(None);
    }
    let docs = corpus.docs();
    let dates: Vec<NaiveDate> = docs.iter().filter_map(|d| d.date).collect();
    if dates.is_empty() {
        log::warn!("no dated documents; skipping timeline analysis");
        return Ok(None);
    }
    let window = match (&config.window, &config.split) {
        (Some(w), _) => DateWindow::new(w.start, w.end)?,
        (None, Some(split)) => DateWindow::from_years(split.cutoff_year + 1, split.end_year)?,
        (None, None) => {
            DateWindow::new(*dates.iter().min().unwrap(), *dates.iter().max().unwrap())?
        }
    };
    let gold_membership: BTreeMap<String, AttackSet> = docs
        .iter()
        .map(|d| (d.id.clone(), d.attack_labels.unwrap_or(AttackSet::EMPTY)))
        .collect();

    let mut timelines = Vec::new();
    let mut biases = Vec::new();
    for attack_type in AttackType::ALL {
        let gold_series = cumulative_series(
            docs,
            &gold_membership,
            attack_type,
            config.bucketing,
            &window,
            "gold",
        )?;
        let mut backend_series: Vec<CumulativeSeries> = Vec::new();
        for (name, membership) in backends {
            let series = cumulative_series(
                docs,
                membership,
                attack_type,
                config.bucketing,
                &window,
                name,
            )?;
            biases.push(bias_summary(&gold_series, &series)?);
            backend_series.push(series);
        }
        timelines.push(TimelineArtifact {
            attack_type,
            dates: gold_series.points.iter().map(|(d, _)| *d).collect(),
            gold: gold_series.points.iter().map(|(_, c)| *c).collect(),
            backends: backend_series
                .into_iter()
                .map(|s| {
                    let counts = s.points.iter().map(|(_, c)| *c).collect();
                    (s.source, counts)
                })
                .collect(),
        });
    }
    Ok(Some((timelines, biases)))
}

/// One row of a timing-only (`bench`) run.
pub struct BenchRow {
    pub name: String,
    pub status: BackendStatus,
    pub docs: usize,
    pub total_secs: f64,
    pub per_doc_secs: f64,
}

pub struct BenchOutcome {
    pub rows: Vec<BenchRow>,
    pub relative: Vec<(String, f64)>,
}

/// Run every backend for timing only: no scoring, just wall time, throughput,
/// and relative speed.
pub fn bench(config: &RunConfig) -> Result<BenchOutcome, HarnessError> {
    config.validate()?;
    let taxonomy = Arc::new(config.taxonomy()?);
    let corpus = load_eval_corpus(config, &taxonomy)?;
    let options = RunOptions {
        concurrency: config.concurrency,
        batch_size: config.batch_size,
    };
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for descriptor in &config.backends {
        let outcome = build_backend(descriptor, &taxonomy)
            .and_then(|b| run_backend(b.as_ref(), corpus.docs(), config.task, &options));
        match outcome {
            Ok(set) => {
                timings.push((descriptor.name.clone(), set.timing.per_doc_secs));
                rows.push(BenchRow {
                    name: descriptor.name.clone(),
                    status: BackendStatus::Ok,
                    docs: set.len(),
                    total_secs: set.timing.total_secs,
                    per_doc_secs: set.timing.per_doc_secs,
                });
            }
            Err(e) => rows.push(BenchRow {
                name: descriptor.name.clone(),
                status: BackendStatus::Failed(e.to_string()),
                docs: 0,
                total_secs: 0.0,
                per_doc_secs: 0.0,
            }),
        }
    }
    let relative = relative_speed(&timings);
    Ok(BenchOutcome { rows, relative })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_config() -> RunConfig {
        RunConfig {
            task: Task::Binary,
            corpus: CorpusConfig {
                documents: Some(PathBuf::from("docs.jsonl")),
                format: Some(CorpusFormat::Jsonl),
                conll: None,
            },
            split: None,
            backends: vec![BackendDescriptor {
                name: "m".into(),
                kind: BackendKind::PredictionsFile {
                    path: PathBuf::from("preds.jsonl"),
                },
            }],
            threshold: 0.5,
            batch_size: 1,
            concurrency: 1,
            out_dir: PathBuf::from("out"),
            seed: 0,
            alias_tables: None,
            bucketing: Bucketing::Month,
            window: None,
            reproducible: false,
        }
    }

    #[test]
    fn threshold_outside_unit_interval_is_config_error() {
        let mut config = minimal_config();
        config.threshold = 1.5;
        assert!(matches!(config.validate(), Err(HarnessError::Config(_))));
        config.threshold = 0.0;
        assert!(config.validate().is_err());
        config.threshold = 0.5;
        assert!(config.validate().is_ok());
    }

    #[test]
    fn at_least_one_backend_required() {
        let mut config = minimal_config();
        config.backends.clear();
        assert!(config.validate().is_err());
    }

    #[test]
    fn duplicate_backend_names_rejected() {
        let mut config = minimal_config();
        config.backends.push(config.backends[0].clone());
        assert!(config.validate().is_err());
    }

    #[test]
    fn relative_speed_matches_published_multiplier() {
        // Totals over equal doc counts reduce to total-time ratios.
        let speeds = relative_speed(&[("fast".into(), 27.6), ("slow".into(), 20880.0)]);
        let fast = speeds[0].1;
        let slow = speeds[1].1;
        assert_eq!(slow, 1.0);
        assert!((fast - 20880.0 / 27.6).abs() < 1e-9);
        // Within 1% of the published 759.49x.
        assert!((fast - 759.49).abs() / 759.49 < 0.01);
    }

    #[test]
    fn equal_times_all_report_one() {
        let speeds = relative_speed(&[("a".into(), 1.0), ("b".into(), 1.0)]);
        assert!(speeds.iter().all(|(_, x)| *x == 1.0));
    }

    #[test]
    fn two_to_one_speedup() {
        let speeds = relative_speed(&[("a".into(), 1.0), ("b".into(), 0.5)]);
        assert_eq!(speeds[0].1, 1.0);
        assert_eq!(speeds[1].1, 2.0);
    }

    #[test]
    fn config_round_trips_through_json() {
        let config = minimal_config();
        let json = serde_json::to_string(&config).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back.threshold, 0.5);
        assert!(matches!(
            back.backends[0].kind,
            BackendKind::PredictionsFile { .. }
        ));
    }

    #[test]
    fn backend_descriptor_json_shape() {
        let json = r#"{"name": "gemma", "kind": "http-chat", "base_url": "http://localhost:8080", "model": "gemma-2-9b"}"#;
        let descriptor: BackendDescriptor = serde_json::from_str(json).unwrap();
        match descriptor.kind {
            BackendKind::HttpChat { endpoint } => {
                assert_eq!(endpoint.base_url, "http://localhost:8080");
                assert_eq!(endpoint.path, "/v1/chat/completions");
                assert_eq!(endpoint.max_attempts, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
