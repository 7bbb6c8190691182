//! Threshold-swept curves over binary scores: ROC with trapezoidal AUC,
//! precision-recall, and F1 as a function of the decision cutoff.
//!
//! A document is predicted positive at threshold `t` when `score >= t`.
//! Curve points are generated at every distinct observed score, so the
//! curves are exact; the F1 sweep adds a uniform grid for smooth plots.

use serde::Serialize;

use crate::metrics::{f1, MetricsError};

/// One curve sample: the generating threshold and the (x, y) coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub threshold: f64,
    pub x: f64,
    pub y: f64,
}

/// An ordered curve plus its scalar summary (AUC for ROC). `degenerate` is
/// set when gold contains a single class, in which case `auc` is `None`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveSeries {
    pub points: Vec<CurvePoint>,
    pub auc: Option<f64>,
    pub degenerate: bool,
}

fn validate(scores: &[f64], gold: &[bool]) -> Result<(), MetricsError> {
    if scores.len() != gold.len() {
        return Err(MetricsError::LengthMismatch {
            gold: gold.len(),
            pred: scores.len(),
        });
    }
    if scores.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    Ok(())
}

/// Scores sorted descending and grouped by equal value, each group carrying
/// its positive and negative counts.
fn threshold_groups(scores: &[f64], gold: &[bool]) -> Vec<(f64, u64, u64)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut groups: Vec<(f64, u64, u64)> = Vec::new();
    for i in order {
        let score = scores[i];
        match groups.last_mut() {
            Some((s, pos, neg)) if *s == score => {
                if gold[i] {
                    *pos += 1;
                } else {
                    *neg += 1;
                }
            }
            _ => groups.push((score, gold[i] as u64, !gold[i] as u64)),
        }
    }
    groups
}

/// ROC curve: (FPR, TPR) at every distinct score plus the (0, 0) endpoint,
/// with AUC by trapezoidal integration. The AUC equals the probability that
/// a random positive outranks a random negative, ties counted half.
pub fn roc_curve(scores: &[f64], gold: &[bool]) -> Result<CurveSeries, MetricsError> {
    validate(scores, gold)?;
    let positives = gold.iter().filter(|g| **g).count() as u64;
    let negatives = gold.len() as u64 - positives;
    let degenerate = positives == 0 || negatives == 0;

    let rate = |n: u64, d: u64| if d == 0 { 0.0 } else { n as f64 / d as f64 };
    let mut points = vec![CurvePoint {
        threshold: f64::INFINITY,
        x: 0.0,
        y: 0.0,
    }];
    let mut tp = 0u64;
    let mut fp = 0u64;
    for (threshold, pos, neg) in threshold_groups(scores, gold) {
        tp += pos;
        fp += neg;
        points.push(CurvePoint {
            threshold,
            x: rate(fp, negatives),
            y: rate(tp, positives),
        });
    }
    let auc = if degenerate {
        None
    } else {
        let mut area = 0.0;
        for pair in points.windows(2) {
            area += (pair[1].x - pair[0].x) * (pair[0].y + pair[1].y) / 2.0;
        }
        Some(area)
    };
    if degenerate {
        log::warn!("ROC over single-class gold: AUC undefined");
    }
    Ok(CurveSeries {
        points,
        auc,
        degenerate,
    })
}

/// Precision-recall curve: (recall, precision) at every distinct score. The
/// recall-zero endpoint takes precision 1 by convention.
pub fn pr_curve(scores: &[f64], gold: &[bool]) -> Result<CurveSeries, MetricsError> {
    validate(scores, gold)?;
    let positives = gold.iter().filter(|g| **g).count() as u64;
    let degenerate = positives == 0 || positives == gold.len() as u64;

    let mut points = vec![CurvePoint {
        threshold: f64::INFINITY,
        x: 0.0,
        y: 1.0,
    }];
    let mut tp = 0u64;
    let mut fp = 0u64;
    for (threshold, pos, neg) in threshold_groups(scores, gold) {
        tp += pos;
        fp += neg;
        let precision = if tp + fp == 0 {
            0.0
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let recall = if positives == 0 {
            0.0
        } else {
            tp as f64 / positives as f64
        };
        points.push(CurvePoint {
            threshold,
            x: recall,
            y: precision,
        });
    }
    Ok(CurveSeries {
        points,
        auc: None,
        degenerate,
    })
}

/// Default cutoff grid for [`f1_vs_threshold`]: 101 uniform points in [0, 1].
pub fn uniform_grid() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 100.0).collect()
}

/// F1 of the positive class at each cutoff. The grid is the union of the
/// provided cutoffs (default: 101 uniform points) and the distinct scores.
pub fn f1_vs_threshold(
    scores: &[f64],
    gold: &[bool],
    grid: Option<&[f64]>,
) -> Result<CurveSeries, MetricsError> {
    validate(scores, gold)?;
    let positives = gold.iter().filter(|g| **g).count() as u64;
    let degenerate = positives == 0 || positives == gold.len() as u64;

    let mut cutoffs: Vec<f64> = match grid {
        Some(g) => g.to_vec(),
        None => uniform_grid(),
    };
    cutoffs.extend(scores.iter().copied());
    cutoffs.sort_by(f64::total_cmp);
    cutoffs.dedup();

    let points = cutoffs
        .into_iter()
        .map(|t| {
            let mut tp = 0u64;
            let mut fp = 0u64;
            for (&score, &is_pos) in scores.iter().zip(gold) {
                if score >= t {
                    if is_pos {
                        tp += 1;
                    } else {
                        fp += 1;
                    }
                }
            }
            let precision = if tp + fp == 0 {
                0.0
            } else {
                tp as f64 / (tp + fp) as f64
            };
            let recall = if positives == 0 {
                0.0
            } else {
                tp as f64 / positives as f64
            };
            CurvePoint {
                threshold: t,
                x: t,
                y: f1(precision, recall),
            }
        })
        .collect();
    Ok(CurveSeries {
        points,
        auc: None,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_ranking_has_auc_one() {
        let scores = [0.9, 0.8, 0.2, 0.1];
        let gold = [true, true, false, false];
        let curve = roc_curve(&scores, &gold).unwrap();
        assert_eq!(curve.auc, Some(1.0));
        assert!(!curve.degenerate);
    }

    #[test]
    fn constant_scores_have_auc_half() {
        let scores = [0.5, 0.5, 0.5, 0.5];
        let gold = [true, false, true, false];
        let curve = roc_curve(&scores, &gold).unwrap();
        assert_eq!(curve.auc, Some(0.5));
    }

    #[test]
    fn four_point_fixture_auc() {
        // Pairwise oracle: 3 of 4 (positive, negative) pairs ordered correctly.
        let scores = [0.9, 0.8, 0.7, 0.6];
        let gold = [true, false, true, false];
        let curve = roc_curve(&scores, &gold).unwrap();
        assert!((curve.auc.unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn roc_has_both_endpoints() {
        let scores = [0.9, 0.1];
        let gold = [true, false];
        let curve = roc_curve(&scores, &gold).unwrap();
        let first = curve.points.first().unwrap();
        let last = curve.points.last().unwrap();
        assert_eq!((first.x, first.y), (0.0, 0.0));
        assert_eq!((last.x, last.y), (1.0, 1.0));
        for pair in curve.points.windows(2) {
            assert!(pair[1].x >= pair[0].x);
        }
    }

    #[test]
    fn degenerate_gold_flags_auc() {
        let scores = [0.9, 0.1];
        let gold = [true, true];
        let curve = roc_curve(&scores, &gold).unwrap();
        assert!(curve.degenerate);
        assert_eq!(curve.auc, None);
    }

    #[test]
    fn pr_curve_passes_through_one_one_for_perfect_scores() {
        let scores = [0.9, 0.8, 0.2, 0.1];
        let gold = [true, true, false, false];
        let curve = pr_curve(&scores, &gold).unwrap();
        assert!(curve
            .points
            .iter()
            .any(|p| (p.x - 1.0).abs() < 1e-12 && (p.y - 1.0).abs() < 1e-12));
        assert_eq!(curve.points[0].y, 1.0); // recall-0 endpoint convention
    }

    #[test]
    fn f1_cutoff_zero_with_all_positive_gold() {
        let scores = [0.3, 0.6];
        let gold = [true, true];
        let curve = f1_vs_threshold(&scores, &gold, None).unwrap();
        let at_zero = curve.points.iter().find(|p| p.threshold == 0.0).unwrap();
        assert_eq!(at_zero.y, 1.0);
    }

    #[test]
    fn f1_curve_matches_hand_enumeration() {
        let scores = [0.9, 0.8, 0.7, 0.6];
        let gold = [true, false, true, false];
        let grid = [0.65, 0.75, 0.85, 0.95];
        let curve = f1_vs_threshold(&scores, &gold, Some(&grid)).unwrap();
        // At 0.65: preds {0.9,0.8,0.7} positive → tp=2, fp=1, fn=0 → P=2/3, R=1 → F1=0.8
        // At 0.75: {0.9,0.8} → tp=1 fp=1 fn=1 → P=0.5 R=0.5 → F1=0.5
        // At 0.85: {0.9} → tp=1 fp=0 fn=1 → P=1 R=0.5 → F1=2/3
        // At 0.95: none → F1=0
        let expected = [0.8, 0.5, 2.0 / 3.0, 0.0];
        let by_threshold: Vec<f64> = grid
            .iter()
            .map(|t| curve.points.iter().find(|p| p.threshold == *t).unwrap().y)
            .collect();
        for (got, want) in by_threshold.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn grid_includes_observed_scores() {
        let scores = [0.13, 0.77];
        let gold = [false, true];
        let curve = f1_vs_threshold(&scores, &gold, None).unwrap();
        assert!(curve.points.iter().any(|p| p.threshold == 0.13));
        assert!(curve.points.iter().any(|p| p.threshold == 0.77));
        assert!(curve.points.len() >= 101);
    }
}
