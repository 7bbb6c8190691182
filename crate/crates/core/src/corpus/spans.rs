//! Raw span annotations, overlap resolution, and BIO conversion.

use crate::corpus::conll::{split_tag, TagSequence};
use crate::corpus::tokenize::Token;
use crate::taxonomy::{EntityType, Taxonomy};

/// An annotation as it arrives from an annotation tool: character-anchored,
/// unnormalized label, with a confidence score.
#[derive(Clone, Debug, PartialEq)]
pub struct RawEntityAnnotation {
    pub doc_id: String,
    /// Character offsets, half-open.
    pub begin: usize,
    pub end: usize,
    pub label: String,
    pub confidence: f64,
}

/// A typed span anchored to character offsets (half-open).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharSpan {
    pub doc_id: String,
    pub begin: usize,
    pub end: usize,
    pub entity_type: EntityType,
}

impl CharSpan {
    fn overlaps(&self, other: &CharSpan) -> bool {
        self.begin < other.end && other.begin < self.end
    }

    fn len(&self) -> usize {
        self.end - self.begin
    }
}

/// A typed span anchored to token indices (half-open).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntitySpan {
    pub doc_id: String,
    pub begin: usize,
    pub end: usize,
    pub entity_type: EntityType,
}

/// Apply the annotation-cleanup policy to one document's annotations:
/// drop everything below `threshold`, then resolve overlaps by keeping the
/// longest span. Equal lengths break ties by higher confidence, then lower
/// canonical type ordinal, then earlier begin, so the result is a total
/// order and independent of input order.
pub fn resolve_annotations(
    taxonomy: &Taxonomy,
    annotations: &[RawEntityAnnotation],
    threshold: f64,
) -> Vec<CharSpan> {
    let mut candidates: Vec<(CharSpan, f64)> = Vec::new();
    for ann in annotations {
        if ann.confidence < threshold {
            continue;
        }
        if ann.begin >= ann.end {
            log::warn!(
                "dropping empty annotation [{}, {}) in doc {}",
                ann.begin,
                ann.end,
                ann.doc_id
            );
            continue;
        }
        match taxonomy.normalize_entity_label(&ann.label) {
            Ok(entity_type) => candidates.push((
                CharSpan {
                    doc_id: ann.doc_id.clone(),
                    begin: ann.begin,
                    end: ann.end,
                    entity_type,
                },
                ann.confidence,
            )),
            Err(_) => log::warn!(
                "dropping annotation with unknown label `{}` in doc {}",
                ann.label,
                ann.doc_id
            ),
        }
    }

    candidates.sort_by(|(a, ca), (b, cb)| {
        b.len()
            .cmp(&a.len())
            .then(cb.total_cmp(ca))
            .then(
                taxonomy
                    .entity_ordinal(&a.entity_type)
                    .cmp(&taxonomy.entity_ordinal(&b.entity_type)),
            )
            .then(a.begin.cmp(&b.begin))
    });

    let mut kept: Vec<CharSpan> = Vec::new();
    for (span, _) in candidates {
        if kept.iter().all(|k| !k.overlaps(&span)) {
            kept.push(span);
        }
    }
    kept.sort_by_key(|s| (s.begin, s.end));
    kept
}

/// Convert character spans to token spans. A token is claimed by a span when
/// it lies fully inside it, or when the span covers at least half of the
/// token's characters.
pub fn char_spans_to_token_spans(tokens: &[Token], spans: &[CharSpan]) -> Vec<EntitySpan> {
    let mut out = Vec::new();
    for span in spans {
        let mut first: Option<usize> = None;
        let mut last = 0usize;
        for (i, tok) in tokens.iter().enumerate() {
            let overlap_begin = span.begin.max(tok.begin);
            let overlap_end = span.end.min(tok.end);
            if overlap_begin >= overlap_end {
                continue;
            }
            let covered = overlap_end - overlap_begin;
            let token_len = tok.end - tok.begin;
            if covered * 2 >= token_len {
                if first.is_none() {
                    first = Some(i);
                }
                last = i;
            }
        }
        match first {
            Some(begin) => out.push(EntitySpan {
                doc_id: span.doc_id.clone(),
                begin,
                end: last + 1,
                entity_type: span.entity_type.clone(),
            }),
            None => log::warn!(
                "span [{}, {}) in doc {} claims no tokens; dropped",
                span.begin,
                span.end,
                span.doc_id
            ),
        }
    }
    out.sort_by_key(|s| (s.begin, s.end));
    out
}

/// Tag list for non-overlapping token spans over `n_tokens` tokens.
pub fn token_spans_to_tags(n_tokens: usize, spans: &[EntitySpan]) -> Vec<String> {
    let mut tags = vec!["O".to_string(); n_tokens];
    for span in spans {
        let end = span.end.min(n_tokens);
        for (offset, tag) in tags[span.begin..end].iter_mut().enumerate() {
            let prefix = if offset == 0 { "B" } else { "I" };
            *tag = format!("{}-{}", prefix, span.entity_type.name());
        }
    }
    tags
}

/// Convert character spans to a BIO tag sequence over the given tokens.
pub fn spans_to_bio(tokens: &[Token], spans: &[CharSpan]) -> TagSequence {
    let token_spans = char_spans_to_token_spans(tokens, spans);
    let tags = token_spans_to_tags(tokens.len(), &token_spans);
    TagSequence {
        tokens: tokens.iter().map(|t| t.text.clone()).collect(),
        tags,
    }
}

/// Full annotation-to-CoNLL pipeline over a corpus: group annotations by
/// document, resolve each document's set, tokenize, and tag. Documents are
/// processed in parallel and merged back in corpus order.
pub fn resolve_corpus_annotations(
    taxonomy: &Taxonomy,
    docs: &[crate::corpus::Document],
    annotations: &[RawEntityAnnotation],
    threshold: f64,
    tokenizer: &dyn crate::corpus::Tokenizer,
) -> Vec<TagSequence> {
    use std::collections::BTreeMap;
    let mut by_doc: BTreeMap<&str, Vec<&RawEntityAnnotation>> = BTreeMap::new();
    for ann in annotations {
        by_doc.entry(ann.doc_id.as_str()).or_default().push(ann);
    }
    crate::par::map_slice(docs, |doc| {
        let doc_anns: Vec<RawEntityAnnotation> = by_doc
            .get(doc.id.as_str())
            .map(|anns| anns.iter().map(|a| (*a).clone()).collect())
            .unwrap_or_default();
        let spans = resolve_annotations(taxonomy, &doc_anns, threshold);
        let tokens = tokenizer.tokenize(&doc.text);
        spans_to_bio(&tokens, &spans)
    })
}

/// Extract maximal entity runs from a tag sequence. Malformed openings are
/// repaired: an `I-X` with no live `B-X`/`I-X` run of the same type opens a
/// new span, and an `I-Y` following a run of a different type does too.
pub fn bio_to_spans(sequence: &TagSequence, taxonomy: &Taxonomy, doc_id: &str) -> Vec<EntitySpan> {
    let mut spans = Vec::new();
    let mut open: Option<(usize, EntityType)> = None;
    for (i, tag) in sequence.tags.iter().enumerate() {
        let parsed = if tag == "O" {
            None
        } else {
            match split_tag(tag) {
                Some((prefix, name)) => match taxonomy.normalize_entity_label(name) {
                    Ok(t) => Some((prefix, t)),
                    Err(_) => {
                        log::warn!("unknown tag `{tag}` in doc {doc_id}; treated as O");
                        None
                    }
                },
                None => {
                    log::warn!("malformed tag `{tag}` in doc {doc_id}; treated as O");
                    None
                }
            }
        };
        match parsed {
            None => {
                if let Some((begin, t)) = open.take() {
                    spans.push(EntitySpan {
                        doc_id: doc_id.to_string(),
                        begin,
                        end: i,
                        entity_type: t,
                    });
                }
            }
            Some((prefix, t)) => {
                let continues = prefix == 'I'
                    && open
                        .as_ref()
                        .map(|(_, current)| *current == t)
                        .unwrap_or(false);
                if !continues {
                    if let Some((begin, current)) = open.take() {
                        spans.push(EntitySpan {
                            doc_id: doc_id.to_string(),
                            begin,
                            end: i,
                            entity_type: current,
                        });
                    }
                    if prefix == 'I' {
                        log::debug!("repaired I-{} at token {} in doc {}", t.name(), i, doc_id);
                    }
                    open = Some((i, t));
                }
            }
        }
    }
    if let Some((begin, t)) = open {
        spans.push(EntitySpan {
            doc_id: doc_id.to_string(),
            begin,
            end: sequence.tags.len(),
            entity_type: t,
        });
    }
    spans
}
