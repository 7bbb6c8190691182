//! Token- and span-level NER scoring.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::corpus::{EntitySpan, TagSequence};
use crate::metrics::{macro_avg, weighted_avg, ClassScore, MetricsError};

/// Per-tag scores over all tokens, with the O tag scored as its own class.
/// Macro and weighted rows aggregate over the tags present in gold; the tag
/// universe used is recorded so reports can enumerate it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NerTokenReport {
    pub per_tag: BTreeMap<String, ClassScore>,
    pub macro_avg: ClassScore,
    pub weighted_avg: ClassScore,
    pub gold_tags: Vec<String>,
}

/// Score every tag (including `"O"`) as its own class over all tokens of all
/// sequences. Sequences are compared positionally and must align.
pub fn ner_token_metrics(
    gold: &[TagSequence],
    pred: &[TagSequence],
) -> Result<NerTokenReport, MetricsError> {
    if gold.len() != pred.len() {
        return Err(MetricsError::LengthMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    if gold.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    struct TagCounts {
        tp: u64,
        fp: u64,
        fn_: u64,
    }
    let mut counts: BTreeMap<&str, TagCounts> = BTreeMap::new();
    for (g_seq, p_seq) in gold.iter().zip(pred) {
        if g_seq.tags.len() != p_seq.tags.len() {
            return Err(MetricsError::LengthMismatch {
                gold: g_seq.tags.len(),
                pred: p_seq.tags.len(),
            });
        }
        for (g, p) in g_seq.tags.iter().zip(&p_seq.tags) {
            if g == p {
                let entry = counts.entry(g).or_insert(TagCounts {
                    tp: 0,
                    fp: 0,
                    fn_: 0,
                });
                entry.tp += 1;
            } else {
                counts
                    .entry(g)
                    .or_insert(TagCounts {
                        tp: 0,
                        fp: 0,
                        fn_: 0,
                    })
                    .fn_ += 1;
                counts
                    .entry(p)
                    .or_insert(TagCounts {
                        tp: 0,
                        fp: 0,
                        fn_: 0,
                    })
                    .fp += 1;
            }
        }
    }
    let per_tag: BTreeMap<String, ClassScore> = counts
        .iter()
        .map(|(tag, c)| (tag.to_string(), ClassScore::from_counts(c.tp, c.fp, c.fn_)))
        .collect();
    // Aggregates run over tags present in gold (support > 0).
    let gold_tags: Vec<String> = per_tag
        .iter()
        .filter(|(_, s)| s.support > 0)
        .map(|(t, _)| t.clone())
        .collect();
    let gold_scores: Vec<ClassScore> = gold_tags.iter().map(|t| per_tag[t]).collect();
    Ok(NerTokenReport {
        macro_avg: macro_avg(&gold_scores),
        weighted_avg: weighted_avg(&gold_scores),
        per_tag,
        gold_tags,
    })
}

/// Per-type and micro scores on exact (type, begin, end) span matches.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NerSpanReport {
    pub per_type: BTreeMap<String, ClassScore>,
    pub micro: ClassScore,
}

/// Exact-match span scoring: a predicted span is a true positive only when
/// its document, type, and both boundaries match a gold span. A shifted
/// boundary therefore costs one false positive and one false negative.
pub fn ner_span_metrics(gold: &[EntitySpan], pred: &[EntitySpan]) -> NerSpanReport {
    let gold_set: BTreeSet<&EntitySpan> = gold.iter().collect();
    let pred_set: BTreeSet<&EntitySpan> = pred.iter().collect();

    let mut type_names: BTreeSet<&str> = BTreeSet::new();
    for span in gold.iter().chain(pred) {
        type_names.insert(span.entity_type.name());
    }

    let mut per_type = BTreeMap::new();
    let mut total_tp = 0u64;
    let mut total_fp = 0u64;
    let mut total_fn = 0u64;
    for name in type_names {
        let gold_of_type: BTreeSet<&&EntitySpan> = gold_set
            .iter()
            .filter(|s| s.entity_type.name() == name)
            .collect();
        let pred_of_type: BTreeSet<&&EntitySpan> = pred_set
            .iter()
            .filter(|s| s.entity_type.name() == name)
            .collect();
        let tp = gold_of_type.intersection(&pred_of_type).count() as u64;
        let fp = pred_of_type.len() as u64 - tp;
        let fn_ = gold_of_type.len() as u64 - tp;
        total_tp += tp;
        total_fp += fp;
        total_fn += fn_;
        per_type.insert(name.to_string(), ClassScore::from_counts(tp, fp, fn_));
    }
    NerSpanReport {
        per_type,
        micro: ClassScore::from_counts(total_tp, total_fp, total_fn),
    }
}
