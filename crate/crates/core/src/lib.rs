//! evbench-core: corpora, model backends, metrics, and report emission for
//! benchmarking text-coding models on conflict-event tasks.
//!
//! The library is organized around the pipeline the CLI drives:
//!
//! * [`taxonomy`] — canonical label sets and normalization of model output.
//! * [`corpus`] — document loading, CoNLL parsing, span preprocessing,
//!   BIO conversion, and temporal splits.
//! * [`backends`] — prediction sources: offline predictions files and an
//!   HTTP chat-completion client with the prompt/JSON-output protocol.
//! * [`metrics`] — confusion-matrix scores, ROC/PR/F-vs-cutoff curves,
//!   multi-label metrics, and token-/span-level NER metrics.
//! * [`timeseries`] — cumulative event-count curves and bias summaries.
//! * [`harness`] — run configuration, orchestration, and report files.

pub mod backends;
pub mod corpus;
pub mod harness;
pub mod metrics;
pub mod par;
pub mod taxonomy;
pub mod timeseries;

pub use taxonomy::{AttackSet, AttackType, BinaryLabel, CategoryVector, EntityType, Taxonomy};
