//! Scoring: confusion-matrix metrics with macro/weighted aggregation,
//! threshold-swept curves, multi-label metrics, and NER metrics.
//!
//! One convention applies everywhere: a metric whose denominator is zero
//! is 0, never NaN.

pub mod curves;
pub mod multilabel;
pub mod ner;

use serde::Serialize;
use thiserror::Error;

pub use curves::{f1_vs_threshold, pr_curve, roc_curve, CurvePoint, CurveSeries};
pub use multilabel::{
    multilabel, one_vs_rest, MacroScores, MultiLabelScores, OneVsRestReport, TypeBinaryScore,
};
pub use ner::{ner_span_metrics, ner_token_metrics, NerSpanReport, NerTokenReport};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("length mismatch: gold has {gold}, predictions have {pred}")]
    LengthMismatch { gold: usize, pred: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("label {label} outside universe of {universe} classes")]
    LabelOutOfRange { label: usize, universe: usize },
    #[error("gold and prediction document ids differ: {0}")]
    MissingDocs(String),
}

/// Full K×K confusion matrix for a single-label task; rows are gold classes,
/// columns are predicted classes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionCounts {
    classes: usize,
    matrix: Vec<u64>,
}

impl ConfusionCounts {
    /// Count gold/predicted class-index pairs over a universe of `classes`.
    pub fn from_labels(
        gold: &[usize],
        pred: &[usize],
        classes: usize,
    ) -> Result<ConfusionCounts, MetricsError> {
        if gold.len() != pred.len() {
            return Err(MetricsError::LengthMismatch {
                gold: gold.len(),
                pred: pred.len(),
            });
        }
        if gold.is_empty() {
            return Err(MetricsError::EmptyInput);
        }
        let mut matrix = vec![0u64; classes * classes];
        for (&g, &p) in gold.iter().zip(pred) {
            for label in [g, p] {
                if label >= classes {
                    return Err(MetricsError::LabelOutOfRange {
                        label,
                        universe: classes,
                    });
                }
            }
            matrix[g * classes + p] += 1;
        }
        Ok(ConfusionCounts { classes, matrix })
    }

    /// Build directly from row-major counts (rows gold, columns predicted).
    pub fn from_matrix(rows: &[Vec<u64>]) -> Result<ConfusionCounts, MetricsError> {
        let classes = rows.len();
        if classes == 0 || rows.iter().any(|r| r.len() != classes) {
            return Err(MetricsError::EmptyInput);
        }
        let matrix = rows.iter().flatten().copied().collect();
        Ok(ConfusionCounts { classes, matrix })
    }

    pub fn num_classes(&self) -> usize {
        self.classes
    }

    pub fn count(&self, gold: usize, pred: usize) -> u64 {
        self.matrix[gold * self.classes + pred]
    }

    pub fn true_positives(&self, class: usize) -> u64 {
        self.count(class, class)
    }

    pub fn false_positives(&self, class: usize) -> u64 {
        (0..self.classes)
            .filter(|g| *g != class)
            .map(|g| self.count(g, class))
            .sum()
    }

    pub fn false_negatives(&self, class: usize) -> u64 {
        (0..self.classes)
            .filter(|p| *p != class)
            .map(|p| self.count(class, p))
            .sum()
    }

    /// Gold count for the class (row sum); equals tp + fn.
    pub fn support(&self, class: usize) -> u64 {
        (0..self.classes).map(|p| self.count(class, p)).sum()
    }

    pub fn total(&self) -> u64 {
        self.matrix.iter().sum()
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        (0..self.classes)
            .map(|g| (0..self.classes).map(|p| self.count(g, p)).collect())
            .collect()
    }
}

/// Precision/recall/F1 with the gold count for the class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClassScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

impl ClassScore {
    pub fn from_counts(tp: u64, fp: u64, fn_: u64) -> ClassScore {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        ClassScore {
            precision,
            recall,
            f1: f1(precision, recall),
            support: tp + fn_,
        }
    }
}

pub(crate) fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub(crate) fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Per-class scores in class-index order.
pub fn class_scores(counts: &ConfusionCounts) -> Vec<ClassScore> {
    (0..counts.num_classes())
        .map(|c| {
            ClassScore::from_counts(
                counts.true_positives(c),
                counts.false_positives(c),
                counts.false_negatives(c),
            )
        })
        .collect()
}

/// Unweighted mean of each metric; support is the total gold count.
pub fn macro_avg(scores: &[ClassScore]) -> ClassScore {
    let n = scores.len() as f64;
    if scores.is_empty() {
        return ClassScore {
            precision: 0.0,
            recall: 0.0,
            f1: 0.0,
            support: 0,
        };
    }
    ClassScore {
        precision: scores.iter().map(|s| s.precision).sum::<f64>() / n,
        recall: scores.iter().map(|s| s.recall).sum::<f64>() / n,
        f1: scores.iter().map(|s| s.f1).sum::<f64>() / n,
        support: scores.iter().map(|s| s.support).sum(),
    }
}

/// Support-weighted mean of each metric.
pub fn weighted_avg(scores: &[ClassScore]) -> ClassScore {
    let total: u64 = scores.iter().map(|s| s.support).sum();
    if total == 0 {
        return ClassScore {
            precision: 0.0,
            recall: 0.0,
            f1: 0.0,
            support: 0,
        };
    }
    let weight = |f: fn(&ClassScore) -> f64| {
        scores.iter().map(|s| f(s) * s.support as f64).sum::<f64>() / total as f64
    };
    ClassScore {
        precision: weight(|s| s.precision),
        recall: weight(|s| s.recall),
        f1: weight(|s| s.f1),
        support: total,
    }
}

/// Fraction of the diagonal: trace / total.
pub fn accuracy(counts: &ConfusionCounts) -> f64 {
    let trace: u64 = (0..counts.num_classes())
        .map(|c| counts.true_positives(c))
        .sum();
    ratio(trace, counts.total())
}

/// Expand a confusion matrix back into aligned gold/pred label vectors.
/// Useful for reconstructing fixtures from published tables.
pub fn labels_realizing_matrix(rows: &[Vec<u64>]) -> (Vec<usize>, Vec<usize>) {
    let mut gold = Vec::new();
    let mut pred = Vec::new();
    for (g, row) in rows.iter().enumerate() {
        for (p, &n) in row.iter().enumerate() {
            for _ in 0..n {
                gold.push(g);
                pred.push(p);
            }
        }
    }
    (gold, pred)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) {
        assert!((a - b).abs() <= 1e-4 + 1e-12, "{a} vs {b}");
    }

    #[test]
    fn confusion_from_labels_matches_matrix() {
        let (gold, pred) = labels_realizing_matrix(&[vec![227, 42], vec![4, 49]]);
        let counts = ConfusionCounts::from_labels(&gold, &pred, 2).unwrap();
        assert_eq!(counts.support(0), 269);
        assert_eq!(counts.support(1), 53);
        assert_eq!(counts.rows(), vec![vec![227, 42], vec![4, 49]]);
    }

    #[test]
    fn all_correct_has_zero_off_diagonal() {
        let counts = ConfusionCounts::from_labels(&[0, 1, 1, 0], &[0, 1, 1, 0], 2).unwrap();
        assert_eq!(counts.count(0, 1), 0);
        assert_eq!(counts.count(1, 0), 0);
        assert_eq!(accuracy(&counts), 1.0);
    }

    #[test]
    fn constant_predictor_confusion() {
        let (gold, _) = labels_realizing_matrix(&[vec![269, 0], vec![53, 0]]);
        let pred = vec![0usize; gold.len()];
        let counts = ConfusionCounts::from_labels(&gold, &pred, 2).unwrap();
        assert_eq!(counts.rows(), vec![vec![269, 0], vec![53, 0]]);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let err = ConfusionCounts::from_labels(&[0, 1], &[0], 2).unwrap_err();
        assert!(matches!(err, MetricsError::LengthMismatch { .. }));
    }

    #[test]
    fn class_scores_conflict_class() {
        // tp=49, fp=42, fn=4
        let score = ClassScore::from_counts(49, 42, 4);
        close(score.precision, 0.5385);
        close(score.recall, 0.9245);
        close(score.f1, 0.6806);
        assert_eq!(score.support, 53);
    }

    #[test]
    fn zero_division_convention() {
        let score = ClassScore::from_counts(0, 0, 53);
        assert_eq!(score.precision, 0.0);
        assert_eq!(score.recall, 0.0);
        assert_eq!(score.f1, 0.0);
        assert_eq!(score.support, 53);
    }

    #[test]
    fn perfect_class_scores_one() {
        let score = ClassScore::from_counts(7, 0, 0);
        assert_eq!((score.precision, score.recall, score.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn macro_and_weighted_match_published_row() {
        let scores = [
            ClassScore {
                precision: 0.9827,
                recall: 0.8439,
                f1: 0.9080,
                support: 269,
            },
            ClassScore {
                precision: 0.5385,
                recall: 0.9245,
                f1: 0.6806,
                support: 53,
            },
        ];
        let macro_row = macro_avg(&scores);
        close(macro_row.f1, 0.7943);
        let weighted_row = weighted_avg(&scores);
        close(weighted_row.f1, 0.8706);
        assert_eq!(macro_row.support, 322);
    }

    #[test]
    fn accuracy_equals_weighted_recall_for_single_label() {
        let counts = ConfusionCounts::from_matrix(&[vec![227, 42], vec![4, 49]]).unwrap();
        let acc = accuracy(&counts);
        close(acc, 0.8571);
        let weighted = weighted_avg(&class_scores(&counts));
        assert!((acc - weighted.recall).abs() < 1e-12);
    }
}
