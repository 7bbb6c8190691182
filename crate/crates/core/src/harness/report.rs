//! Report types and file emission: manifest, metrics JSON/CSV, curve CSVs,
//! and timeline CSV/SVG. All reported reals are rounded half-to-even to four
//! decimals at the point of writing; in-memory values stay full precision.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Serialize;

use crate::backends::{Task, TimingStats};
use crate::harness::svg::timeline_svg;
use crate::harness::HarnessError;
use crate::metrics::{
    ClassScore, CurveSeries, MultiLabelScores, NerSpanReport, NerTokenReport, OneVsRestReport,
};
use crate::taxonomy::AttackType;
use crate::timeseries::BiasSummary;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase", tag = "state", content = "detail")]
pub enum BackendStatus {
    Ok,
    Failed(String),
}

impl BackendStatus {
    pub fn label(&self) -> String {
        match self {
            BackendStatus::Ok => "ok".to_string(),
            BackendStatus::Failed(message) => format!("failed: {message}"),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BinaryReport {
    /// 2×2 counts, rows gold (0, 1), columns predicted.
    pub confusion: Vec<Vec<u64>>,
    pub classes: BTreeMap<String, ClassScore>,
    pub macro_avg: ClassScore,
    pub weighted_avg: ClassScore,
    pub accuracy: f64,
    pub auc: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AttackReport {
    pub one_vs_rest: OneVsRestReport,
    pub multilabel: MultiLabelScores,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bias: Option<Vec<BiasSummary>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct NerReport {
    pub token: NerTokenReport,
    pub span: NerSpanReport,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskMetrics {
    Binary(BinaryReport),
    Attack(AttackReport),
    Ner(NerReport),
}

#[derive(Clone, Debug, Serialize)]
pub struct BackendReport {
    pub name: String,
    pub status: BackendStatus,
    pub parse_failures: usize,
    pub docs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<TimingStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<TaskMetrics>,
}

/// The cross-backend comparison: per-backend metric blocks plus the
/// relative-speed table (absent in reproducible mode).
#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    pub task: Task,
    pub threshold: f64,
    pub backends: Vec<BackendReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relative_speed: Option<Vec<(String, f64)>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ManifestBackend {
    pub name: String,
    pub status: String,
    pub docs: usize,
    pub parse_failures: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_secs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_doc_secs: Option<f64>,
}

/// Provenance record, written before any other report file. In reproducible
/// mode the timestamps and timing fields are omitted so reruns are
/// byte-identical.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub task: Task,
    pub config: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ner_prompt: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub started_at: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finished_at: Option<String>,
    pub corpus_digest: String,
    pub backends: Vec<ManifestBackend>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurveKind {
    Roc,
    Pr,
    F1,
}

impl CurveKind {
    fn prefix(self) -> &'static str {
        match self {
            CurveKind::Roc => "roc",
            CurveKind::Pr => "pr",
            CurveKind::F1 => "f1",
        }
    }
}

/// One curve destined for a CSV file.
#[derive(Clone, Debug)]
pub struct CurveArtifact {
    pub backend: String,
    /// Attack-type slug, or "binary".
    pub label: String,
    pub kind: CurveKind,
    pub series: CurveSeries,
}

/// One attack type's cumulative timeline: gold and per-backend counts over
/// shared buckets.
#[derive(Clone, Debug)]
pub struct TimelineArtifact {
    pub attack_type: AttackType,
    pub dates: Vec<NaiveDate>,
    pub gold: Vec<u64>,
    pub backends: Vec<(String, Vec<u64>)>,
}

#[derive(Clone, Debug, Default)]
pub struct RunArtifacts {
    pub curves: Vec<CurveArtifact>,
    pub timelines: Vec<TimelineArtifact>,
}

/// Which file families to write.
#[derive(Clone, Copy, Debug)]
pub struct EmitOptions {
    pub metrics: bool,
    pub curves: bool,
    pub timelines: bool,
}

impl Default for EmitOptions {
    fn default() -> Self {
        EmitOptions {
            metrics: true,
            curves: true,
            timelines: true,
        }
    }
}

/// Round half-to-even at four decimals.
pub fn round4(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    (x * 10_000.0).round_ties_even() / 10_000.0
}

/// Round every fractional number in a JSON tree to four decimals; integers
/// pass through.
fn round_json(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Number(n) => {
            if !n.is_u64() && !n.is_i64() {
                if let Some(f) = n.as_f64() {
                    if let Some(rounded) = serde_json::Number::from_f64(round4(f)) {
                        *n = rounded;
                    }
                }
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_json),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

/// Write atomically: to a temp file in the same directory, then rename.
fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut file = std::fs::File::create(&tmp)?;
        file.write_all(contents.as_bytes())?;
        file.flush()?;
    }
    std::fs::rename(&tmp, path)
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c.to_ascii_lowercase()
            } else {
                '-'
            }
        })
        .collect()
}

fn fmt4(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{:.4}", x)
}

fn curve_csv(series: &CurveSeries) -> String {
    let mut out = String::from("threshold,x,y\n");
    for point in &series.points {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt4(point.threshold),
            fmt4(point.x),
            fmt4(point.y)
        ));
    }
    out
}

fn timeline_csv(timeline: &TimelineArtifact) -> String {
    let mut header = String::from("date,gold");
    for (name, _) in &timeline.backends {
        header.push(',');
        header.push_str(&sanitize(name));
    }
    let mut out = header;
    out.push('\n');
    for (i, date) in timeline.dates.iter().enumerate() {
        out.push_str(&format!("{},{}", date.format("%Y-%m-%d"), timeline.gold[i]));
        for (_, counts) in &timeline.backends {
            out.push_str(&format!(",{}", counts[i]));
        }
        out.push('\n');
    }
    out
}

/// Flat CSV: one row per class or aggregate, one per scalar metric.
fn metrics_csv(report: &ComparisonReport) -> String {
    let mut out =
        String::from("backend,section,label,accuracy,precision,recall,f1,support,value\n");
    let mut row = |backend: &str,
                   section: &str,
                   label: &str,
                   accuracy: Option<f64>,
                   score: Option<&ClassScore>,
                   value: Option<f64>| {
        let acc = accuracy.map(fmt4).unwrap_or_default();
        let (p, r, f, s) = match score {
            Some(score) => (
                fmt4(score.precision),
                fmt4(score.recall),
                fmt4(score.f1),
                score.support.to_string(),
            ),
            None => Default::default(),
        };
        let v = value.map(fmt4).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            sanitize(backend),
            section,
            label,
            acc,
            p,
            r,
            f,
            s,
            v
        ));
    };

    for backend in &report.backends {
        let name = backend.name.as_str();
        match &backend.metrics {
            Some(TaskMetrics::Binary(binary)) => {
                for (label, score) in &binary.classes {
                    row(name, "class", label, None, Some(score), None);
                }
                row(
                    name,
                    "aggregate",
                    "macro_avg",
                    None,
                    Some(&binary.macro_avg),
                    None,
                );
                row(
                    name,
                    "aggregate",
                    "weighted_avg",
                    None,
                    Some(&binary.weighted_avg),
                    None,
                );
                row(
                    name,
                    "scalar",
                    "accuracy",
                    None,
                    None,
                    Some(binary.accuracy),
                );
                if let Some(auc) = binary.auc {
                    row(name, "scalar", "auc", None, None, Some(auc));
                }
            }
            Some(TaskMetrics::Attack(attack)) => {
                for t in &attack.one_vs_rest.per_type {
                    let score = ClassScore {
                        precision: t.precision,
                        recall: t.recall,
                        f1: t.f1,
                        support: t.support,
                    };
                    row(
                        name,
                        "type",
                        t.attack_type.slug(),
                        Some(t.accuracy),
                        Some(&score),
                        None,
                    );
                }
                let m = &attack.one_vs_rest.macro_avg;
                let macro_score = ClassScore {
                    precision: m.precision,
                    recall: m.recall,
                    f1: m.f1,
                    support: 0,
                };
                row(
                    name,
                    "aggregate",
                    "macro_avg",
                    Some(m.accuracy),
                    Some(&macro_score),
                    None,
                );
                let ml = &attack.multilabel;
                row(
                    name,
                    "multilabel",
                    "subset_accuracy",
                    None,
                    None,
                    Some(ml.subset_accuracy),
                );
                row(
                    name,
                    "multilabel",
                    "hamming_loss",
                    None,
                    None,
                    Some(ml.hamming_loss),
                );
                row(
                    name,
                    "multilabel",
                    "partial_match",
                    None,
                    None,
                    Some(ml.partial_match),
                );
                row(
                    name,
                    "multilabel",
                    "cardinality_true",
                    None,
                    None,
                    Some(ml.cardinality_true),
                );
                row(
                    name,
                    "multilabel",
                    "cardinality_pred",
                    None,
                    None,
                    Some(ml.cardinality_pred),
                );
            }
            Some(TaskMetrics::Ner(ner)) => {
                for (tag, score) in &ner.token.per_tag {
                    row(name, "tag", tag, None, Some(score), None);
                }
                row(
                    name,
                    "aggregate",
                    "macro_avg",
                    None,
                    Some(&ner.token.macro_avg),
                    None,
                );
                row(
                    name,
                    "aggregate",
                    "weighted_avg",
                    None,
                    Some(&ner.token.weighted_avg),
                    None,
                );
                for (entity, score) in &ner.span.per_type {
                    row(name, "span_type", entity, None, Some(score), None);
                }
                row(
                    name,
                    "aggregate",
                    "span_micro",
                    None,
                    Some(&ner.span.micro),
                    None,
                );
            }
            None => {
                row(name, "status", &backend.status.label(), None, None, None);
            }
        }
    }
    if let Some(speeds) = &report.relative_speed {
        for (name, multiplier) in speeds {
            row(
                name,
                "scalar",
                "relative_speed",
                None,
                None,
                Some(*multiplier),
            );
        }
    }
    out
}

fn to_rounded_json<T: Serialize>(value: &T) -> Result<String, HarnessError> {
    let mut json = serde_json::to_value(value)?;
    round_json(&mut json);
    let mut text = serde_json::to_string_pretty(&json)?;
    text.push('\n');
    Ok(text)
}

/// Write all report files. The manifest always goes first; filenames are
/// deterministic from backend and task names, and every write is atomic.
/// Returns the paths written.
pub fn emit_reports(
    report: &ComparisonReport,
    manifest: &RunManifest,
    artifacts: &RunArtifacts,
    out_dir: &Path,
    options: &EmitOptions,
) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    // The manifest is provenance, not a table: timing stays full precision.
    let manifest_path = out_dir.join("manifest.json");
    let mut manifest_text = serde_json::to_string_pretty(manifest)?;
    manifest_text.push('\n');
    write_atomic(&manifest_path, &manifest_text)?;
    written.push(manifest_path);

    if options.metrics {
        let metrics_path = out_dir.join("metrics.json");
        write_atomic(&metrics_path, &to_rounded_json(report)?)?;
        written.push(metrics_path);

        let csv_path = out_dir.join("metrics.csv");
        write_atomic(&csv_path, &metrics_csv(report))?;
        written.push(csv_path);
    }

    if options.curves {
        for curve in &artifacts.curves {
            let file = format!(
                "{}_{}_{}.csv",
                curve.kind.prefix(),
                sanitize(&curve.backend),
                curve.label
            );
            let path = out_dir.join(file);
            write_atomic(&path, &curve_csv(&curve.series))?;
            written.push(path);
        }
    }

    if options.timelines {
        for timeline in &artifacts.timelines {
            let base = format!("timeline_{}", timeline.attack_type.slug());
            let csv_path = out_dir.join(format!("{base}.csv"));
            write_atomic(&csv_path, &timeline_csv(timeline))?;
            written.push(csv_path);
            let svg_path = out_dir.join(format!("{base}.svg"));
            write_atomic(&svg_path, &timeline_svg(timeline))?;
            written.push(svg_path);
        }
    }

    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round4_is_half_to_even() {
        assert_eq!(round4(0.66875), 0.6688);
        assert_eq!(round4(0.12345), 0.1234); // ties to even
        assert_eq!(round4(0.123456), 0.1235);
        assert_eq!(round4(1.0), 1.0);
    }

    #[test]
    fn round_json_leaves_integers_alone() {
        let mut value = serde_json::json!({
            "support": 269,
            "precision": 0.98271234,
            "nested": [{"f1": 0.123456}]
        });
        round_json(&mut value);
        assert_eq!(value["support"], 269);
        assert_eq!(value["precision"], 0.9827);
        assert_eq!(value["nested"][0]["f1"], 0.1235);
    }

    #[test]
    fn sanitize_filenames() {
        assert_eq!(sanitize("ConfliBERT"), "conflibert");
        assert_eq!(sanitize("gemma 2 (9B)"), "gemma-2--9b-");
    }

    #[test]
    fn curve_csv_shape() {
        let series = CurveSeries {
            points: vec![
                crate::metrics::CurvePoint {
                    threshold: f64::INFINITY,
                    x: 0.0,
                    y: 0.0,
                },
                crate::metrics::CurvePoint {
                    threshold: 0.9,
                    x: 0.5,
                    y: 1.0,
                },
            ],
            auc: Some(1.0),
            degenerate: false,
        };
        let csv = curve_csv(&series);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "threshold,x,y");
        assert_eq!(lines[1], "inf,0.0000,0.0000");
        assert_eq!(lines[2], "0.9000,0.5000,1.0000");
    }
}
