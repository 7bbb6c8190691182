//! Property tests for the spec-level invariants that hold for arbitrary
//! inputs, not just fixtures.

use std::collections::BTreeMap;

use proptest::prelude::*;

use evbench_core::backends::{parse_classification_output, render_classification_prompt};
use evbench_core::corpus::{
    parse_conll, resolve_annotations, temporal_split, write_conll, Document, RawEntityAnnotation,
    SplitSpec, TagSequence,
};
use evbench_core::metrics::{
    class_scores, macro_avg, multilabel, roc_curve, weighted_avg, ClassScore, ConfusionCounts,
};
use evbench_core::taxonomy::{AttackSet, AttackType};
use evbench_core::{EntityType, Taxonomy};

fn taxonomy() -> Taxonomy {
    Taxonomy::builtin()
}

// --- strategies -----------------------------------------------------------

fn arb_token() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9.,']{1,10}"
}

fn arb_entity_type() -> impl Strategy<Value = EntityType> {
    prop_oneof![
        Just(EntityType::Person),
        Just(EntityType::Organisation),
        Just(EntityType::Location),
        Just(EntityType::Temporal),
        Just(EntityType::Victim),
    ]
}

/// A well-formed BIO sequence built from a random span layout.
fn arb_tag_sequence() -> impl Strategy<Value = TagSequence> {
    (1usize..24)
        .prop_flat_map(|len| {
            (
                proptest::collection::vec(arb_token(), len),
                proptest::collection::vec((any::<bool>(), arb_entity_type(), 1usize..4), 0..6),
            )
        })
        .prop_map(|(tokens, seeds)| {
            let n = tokens.len();
            let mut tags = vec!["O".to_string(); n];
            let mut cursor = 0usize;
            for (enabled, entity, span_len) in seeds {
                if !enabled || cursor >= n {
                    continue;
                }
                let end = (cursor + span_len).min(n);
                for (offset, tag) in tags[cursor..end].iter_mut().enumerate() {
                    let prefix = if offset == 0 { "B" } else { "I" };
                    *tag = format!("{}-{}", prefix, entity.name());
                }
                cursor = end + 1;
            }
            TagSequence { tokens, tags }
        })
}

fn arb_scores_and_gold() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (2usize..40)
        .prop_flat_map(|n| {
            (
                proptest::collection::vec(0u32..=20, n),
                proptest::collection::vec(any::<bool>(), n),
            )
        })
        .prop_map(|(raw, gold)| {
            let scores = raw.into_iter().map(|r| r as f64 / 20.0).collect();
            (scores, gold)
        })
}

fn arb_attack_set() -> impl Strategy<Value = AttackSet> {
    (0u16..512).prop_map(|bits| {
        AttackType::ALL
            .into_iter()
            .filter(|t| bits & (1 << t.ordinal()) != 0)
            .collect()
    })
}

// --- corpus ---------------------------------------------------------------

proptest! {
    #[test]
    fn conll_round_trip(sequences in proptest::collection::vec(arb_tag_sequence(), 0..6)) {
        let text = write_conll(&sequences);
        let parsed = parse_conll(&text, &taxonomy()).unwrap();
        prop_assert_eq!(parsed, sequences);
    }

    #[test]
    fn resolve_output_never_overlaps_and_ignores_order(
        mut annotations in proptest::collection::vec(
            (0usize..60, 1usize..12, 0u32..=10, 0usize..4),
            0..15,
        ),
        seed in any::<u64>(),
    ) {
        let labels = ["PER", "ORG", "LOC", "DATE"];
        let tax = taxonomy();
        let to_annotations = |items: &[(usize, usize, u32, usize)]| -> Vec<RawEntityAnnotation> {
            items
                .iter()
                .map(|(begin, len, conf, label)| RawEntityAnnotation {
                    doc_id: "d".into(),
                    begin: *begin,
                    end: begin + len,
                    label: labels[*label].into(),
                    confidence: *conf as f64 / 10.0,
                })
                .collect()
        };
        let forward = resolve_annotations(&tax, &to_annotations(&annotations), 0.5);
        for pair in forward.windows(2) {
            prop_assert!(pair[0].end <= pair[1].begin);
        }
        // Any permutation gives the same result; rotate by the seed.
        if !annotations.is_empty() {
            let k = (seed as usize) % annotations.len();
            annotations.rotate_left(k);
        }
        annotations.reverse();
        let permuted = resolve_annotations(&tax, &to_annotations(&annotations), 0.5);
        prop_assert_eq!(forward, permuted);
    }

    #[test]
    fn temporal_split_is_a_partition(years in proptest::collection::vec(proptest::option::of(2000i32..2030), 0..40)) {
        let docs: Vec<Document> = years
            .iter()
            .enumerate()
            .map(|(i, year)| Document {
                id: format!("d{i}"),
                text: String::new(),
                date: year.and_then(|y| chrono::NaiveDate::from_ymd_opt(y, 6, 1)),
                binary_label: None,
                attack_labels: None,
            })
            .collect();
        let total = docs.len();
        let spec = SplitSpec::new(2016, 2020).unwrap();
        let split = temporal_split(docs, &spec);
        prop_assert_eq!(split.train.len() + split.test.len() + split.excluded, total);
        prop_assert!(split.train.iter().all(|d| d.date.unwrap().format("%Y").to_string().parse::<i32>().unwrap() <= 2016));
    }
}

// --- backends -------------------------------------------------------------

proptest! {
    /// Holds for completely arbitrary model text: every parsed vector stays
    /// inside [0, 1] with at most three positive entries.
    #[test]
    fn parsed_vectors_are_bounded(text in ".{0,300}", expected in 1usize..4) {
        let parse = parse_classification_output(&taxonomy(), &text, expected);
        prop_assert_eq!(parse.vectors.len(), expected);
        prop_assert_eq!(parse.failures.len(), expected);
        for vector in &parse.vectors {
            prop_assert!(vector.positive_count() <= 3);
            for p in vector.probs() {
                prop_assert!((0.0..=1.0).contains(p));
            }
        }
    }

    #[test]
    fn prompt_rendering_is_deterministic(events in proptest::collection::vec(".{0,40}", 1..4)) {
        let refs: Vec<&str> = events.iter().map(|s| s.as_str()).collect();
        let a = render_classification_prompt(&refs).unwrap();
        let b = render_classification_prompt(&refs).unwrap();
        prop_assert_eq!(a, b);
    }
}

// --- metrics --------------------------------------------------------------

proptest! {
    /// Trapezoidal AUC only depends on the ranking, so any strictly
    /// increasing transform of the scores leaves it unchanged.
    #[test]
    fn auc_invariant_under_monotone_transform((scores, gold) in arb_scores_and_gold()) {
        prop_assume!(gold.iter().any(|g| *g) && gold.iter().any(|g| !*g));
        let base = roc_curve(&scores, &gold).unwrap().auc.unwrap();
        let transformed: Vec<f64> = scores.iter().map(|s| 0.1 + 0.8 * (s * s * s + s) / 2.0).collect();
        let after = roc_curve(&transformed, &gold).unwrap().auc.unwrap();
        prop_assert!((base - after).abs() < 1e-12);
    }

    /// Macro averages ignore support; weighted averages track it.
    #[test]
    fn macro_invariant_under_support_rescaling(
        rows in proptest::collection::vec((0u64..40, 0u64..40, 0u64..40), 2..6),
        factor in 2u64..5,
    ) {
        let scores: Vec<ClassScore> = rows
            .iter()
            .map(|(tp, fp, fn_)| ClassScore::from_counts(*tp, *fp, *fn_))
            .collect();
        let scaled: Vec<ClassScore> = scores
            .iter()
            .map(|s| ClassScore { support: s.support * factor, ..*s })
            .collect();
        let before = macro_avg(&scores);
        let after = macro_avg(&scaled);
        prop_assert!((before.precision - after.precision).abs() < 1e-12);
        prop_assert!((before.recall - after.recall).abs() < 1e-12);
        prop_assert!((before.f1 - after.f1).abs() < 1e-12);
    }

    /// Per-class F1 always lies between precision and recall when defined.
    #[test]
    fn f1_bounded_by_precision_and_recall(
        gold in proptest::collection::vec(0usize..3, 2..40),
        pred in proptest::collection::vec(0usize..3, 2..40),
    ) {
        let n = gold.len().min(pred.len());
        let counts = ConfusionCounts::from_labels(&gold[..n], &pred[..n], 3).unwrap();
        for score in class_scores(&counts) {
            if score.precision + score.recall > 0.0 {
                let lo = score.precision.min(score.recall);
                let hi = score.precision.max(score.recall);
                prop_assert!(score.f1 >= lo - 1e-12 && score.f1 <= hi + 1e-12);
            } else {
                prop_assert_eq!(score.f1, 0.0);
            }
        }
        // Weighted recall equals accuracy for single-label tasks.
        let weighted = weighted_avg(&class_scores(&counts));
        prop_assert!((weighted.recall - evbench_core::metrics::accuracy(&counts)).abs() < 1e-12);
    }

    /// hamming ∈ [0,1]; perfect prediction forces hamming 0 and makes
    /// partial match the fraction of instances with non-empty gold.
    #[test]
    fn multilabel_relations(sets in proptest::collection::vec(arb_attack_set(), 1..30)) {
        let gold: BTreeMap<String, AttackSet> = sets
            .iter()
            .enumerate()
            .map(|(i, s)| (format!("d{i}"), *s))
            .collect();
        let report = multilabel(&gold, &gold).unwrap();
        prop_assert_eq!(report.subset_accuracy, 1.0);
        prop_assert_eq!(report.hamming_loss, 0.0);
        let non_empty = sets.iter().filter(|s| !s.is_empty()).count() as f64;
        prop_assert!((report.partial_match - non_empty / sets.len() as f64).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&report.hamming_loss));
        prop_assert!(report.cardinality_true <= 9.0);
    }
}
