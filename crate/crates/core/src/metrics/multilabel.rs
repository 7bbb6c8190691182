//! One-vs-rest scoring of the nine attack categories and set-based
//! multi-label metrics.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::metrics::{f1, ratio, MetricsError};
use crate::par;
use crate::taxonomy::{AttackSet, AttackType, CategoryVector, ATTACK_TYPE_COUNT};

/// Binary scores for one attack category treated as its own yes/no task.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TypeBinaryScore {
    pub attack_type: AttackType,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold positives for this category.
    pub support: u64,
}

/// Unweighted means over the nine categories.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MacroScores {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OneVsRestReport {
    pub per_type: Vec<TypeBinaryScore>,
    pub macro_avg: MacroScores,
}

fn check_alignment<A, B>(
    gold: &BTreeMap<String, A>,
    pred: &BTreeMap<String, B>,
) -> Result<(), MetricsError> {
    if gold.len() != pred.len() || !gold.keys().eq(pred.keys()) {
        let missing = gold
            .keys()
            .find(|k| !pred.contains_key(*k))
            .or_else(|| pred.keys().find(|k| !gold.contains_key(*k)))
            .map(|k| k.as_str())
            .unwrap_or("<count mismatch>");
        return Err(MetricsError::MissingDocs(format!(
            "first differing id: {missing} (gold {}, pred {})",
            gold.len(),
            pred.len()
        )));
    }
    if gold.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    Ok(())
}

/// Score each category as an independent binary task: gold is membership in
/// the gold set, predicted is `score >= tau`. Macro averages over the nine
/// categories summarize the table.
pub fn one_vs_rest(
    gold: &BTreeMap<String, AttackSet>,
    pred: &BTreeMap<String, CategoryVector>,
    tau: f64,
) -> Result<OneVsRestReport, MetricsError> {
    check_alignment(gold, pred)?;
    // Flatten to aligned slices once; ids are sorted identically in both maps.
    let pairs: Vec<(&AttackSet, &CategoryVector)> = gold.values().zip(pred.values()).collect();

    let per_type: Vec<TypeBinaryScore> = par::map_indices(ATTACK_TYPE_COUNT, |ordinal| {
        let t = AttackType::from_ordinal(ordinal).unwrap();
        let mut tp = 0u64;
        let mut fp = 0u64;
        let mut fn_ = 0u64;
        let mut tn = 0u64;
        for (gold_set, vector) in &pairs {
            let is_gold = gold_set.contains(t);
            let is_pred = vector.get(t) >= tau;
            match (is_gold, is_pred) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        TypeBinaryScore {
            attack_type: t,
            accuracy: ratio(tp + tn, tp + tn + fp + fn_),
            precision,
            recall,
            f1: f1(precision, recall),
            support: tp + fn_,
        }
    });

    let n = per_type.len() as f64;
    let macro_avg = MacroScores {
        accuracy: per_type.iter().map(|s| s.accuracy).sum::<f64>() / n,
        precision: per_type.iter().map(|s| s.precision).sum::<f64>() / n,
        recall: per_type.iter().map(|s| s.recall).sum::<f64>() / n,
        f1: per_type.iter().map(|s| s.f1).sum::<f64>() / n,
    };
    Ok(OneVsRestReport {
        per_type,
        macro_avg,
    })
}

/// Set-comparison metrics over the nine-category universe.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MultiLabelScores {
    /// Fraction of instances whose predicted set equals the gold set exactly
    /// (empty = empty counts as a match).
    pub subset_accuracy: f64,
    /// Mean fraction of the label universe on which the sets disagree.
    pub hamming_loss: f64,
    /// Fraction of instances whose sets share at least one label; an empty
    /// intersection — including empty vs. empty — is no match.
    pub partial_match: f64,
    pub cardinality_true: f64,
    pub cardinality_pred: f64,
}

/// Compare gold and predicted label sets per instance.
pub fn multilabel(
    gold: &BTreeMap<String, AttackSet>,
    pred: &BTreeMap<String, AttackSet>,
) -> Result<MultiLabelScores, MetricsError> {
    check_alignment(gold, pred)?;
    let n = gold.len() as f64;
    let mut exact = 0u64;
    let mut hamming_sum = 0.0;
    let mut partial = 0u64;
    let mut true_card = 0u64;
    let mut pred_card = 0u64;
    for (g, p) in gold.values().zip(pred.values()) {
        if g == p {
            exact += 1;
        }
        hamming_sum += g.symmetric_difference_len(*p) as f64 / ATTACK_TYPE_COUNT as f64;
        if g.intersects(*p) {
            partial += 1;
        }
        true_card += g.len() as u64;
        pred_card += p.len() as u64;
    }
    Ok(MultiLabelScores {
        subset_accuracy: exact as f64 / n,
        hamming_loss: hamming_sum / n,
        partial_match: partial as f64 / n,
        cardinality_true: true_card as f64 / n,
        cardinality_pred: pred_card as f64 / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(types: &[AttackType]) -> AttackSet {
        types.iter().copied().collect()
    }

    fn vector(entries: &[(AttackType, f64)]) -> CategoryVector {
        let mut v = CategoryVector::zero();
        for (t, p) in entries {
            v.set(*t, *p);
        }
        v
    }

    #[test]
    fn identical_predictions_score_one() {
        let mut gold = BTreeMap::new();
        let mut pred = BTreeMap::new();
        for (i, t) in AttackType::ALL.into_iter().enumerate() {
            gold.insert(format!("d{i}"), set(&[t]));
            pred.insert(format!("d{i}"), vector(&[(t, 1.0)]));
        }
        let report = one_vs_rest(&gold, &pred, 0.5).unwrap();
        assert_eq!(report.macro_avg.accuracy, 1.0);
        assert_eq!(report.macro_avg.f1, 1.0);
    }

    #[test]
    fn all_zero_vectors_have_zero_recall() {
        let mut gold = BTreeMap::new();
        let mut pred = BTreeMap::new();
        for i in 0..4 {
            gold.insert(format!("d{i}"), set(&[AttackType::ArmedAssault]));
            pred.insert(format!("d{i}"), CategoryVector::zero());
        }
        let report = one_vs_rest(&gold, &pred, 0.5).unwrap();
        for score in &report.per_type {
            assert_eq!(score.recall, 0.0);
        }
    }

    #[test]
    fn missing_docs_are_rejected() {
        let mut gold = BTreeMap::new();
        gold.insert("a".to_string(), AttackSet::EMPTY);
        let mut pred = BTreeMap::new();
        pred.insert("b".to_string(), CategoryVector::zero());
        assert!(matches!(
            one_vs_rest(&gold, &pred, 0.5),
            Err(MetricsError::MissingDocs(_))
        ));
    }

    #[test]
    fn five_doc_fixture_matches_counting_oracle() {
        use AttackType::*;
        let gold_sets = [
            set(&[Assassination]),
            set(&[ArmedAssault, BombingExplosion]),
            set(&[]),
            set(&[Hijacking]),
            set(&[BombingExplosion]),
        ];
        let pred_vectors = [
            vector(&[(Assassination, 0.9)]),
            vector(&[(ArmedAssault, 0.6), (Unknown, 0.7)]),
            vector(&[(Hijacking, 0.8)]),
            vector(&[]),
            vector(&[(BombingExplosion, 0.5)]),
        ];
        let gold: BTreeMap<String, AttackSet> = gold_sets
            .iter()
            .enumerate()
            .map(|(i, s)| (format!("d{i}"), *s))
            .collect();
        let pred: BTreeMap<String, CategoryVector> = pred_vectors
            .iter()
            .enumerate()
            .map(|(i, v)| (format!("d{i}"), v.clone()))
            .collect();
        let report = one_vs_rest(&gold, &pred, 0.5).unwrap();

        // Independent per-type counting oracle.
        for score in &report.per_type {
            let t = score.attack_type;
            let mut tp = 0u64;
            let mut fp = 0u64;
            let mut fn_ = 0u64;
            let mut tn = 0u64;
            for (g, v) in gold_sets.iter().zip(&pred_vectors) {
                match (g.contains(t), v.get(t) >= 0.5) {
                    (true, true) => tp += 1,
                    (false, true) => fp += 1,
                    (true, false) => fn_ += 1,
                    (false, false) => tn += 1,
                }
            }
            assert_eq!(score.support, tp + fn_);
            let expect_acc = (tp + tn) as f64 / 5.0;
            assert!((score.accuracy - expect_acc).abs() < 1e-12);
            let expect_precision = if tp + fp == 0 {
                0.0
            } else {
                tp as f64 / (tp + fp) as f64
            };
            assert!((score.precision - expect_precision).abs() < 1e-12);
        }
    }

    #[test]
    fn multilabel_identity() {
        let mut gold = BTreeMap::new();
        gold.insert("a".to_string(), set(&[AttackType::Assassination]));
        gold.insert("b".to_string(), set(&[]));
        let report = multilabel(&gold, &gold).unwrap();
        assert_eq!(report.subset_accuracy, 1.0);
        assert_eq!(report.hamming_loss, 0.0);
        assert_eq!(report.cardinality_true, report.cardinality_pred);
    }

    #[test]
    fn two_doc_hand_enumeration() {
        use AttackType::*;
        let mut gold = BTreeMap::new();
        gold.insert("a".to_string(), set(&[Assassination]));
        gold.insert("b".to_string(), set(&[ArmedAssault, BombingExplosion]));
        let mut pred = BTreeMap::new();
        pred.insert("a".to_string(), set(&[Assassination]));
        pred.insert("b".to_string(), set(&[ArmedAssault]));
        let report = multilabel(&gold, &pred).unwrap();
        assert_eq!(report.subset_accuracy, 0.5);
        assert!((report.hamming_loss - (0.0 + 1.0 / 9.0) / 2.0).abs() < 1e-12);
        assert_eq!(report.partial_match, 1.0);
    }

    #[test]
    fn empty_empty_counts_for_subset_not_partial() {
        let mut gold = BTreeMap::new();
        gold.insert("a".to_string(), AttackSet::EMPTY);
        let report = multilabel(&gold, &gold).unwrap();
        assert_eq!(report.subset_accuracy, 1.0);
        assert_eq!(report.partial_match, 0.0);
    }
}
