//! The prompt/output protocol for chat backends: classification prompt
//! rendering, tolerant parsing of model JSON into category vectors, and the
//! NER prompt with surface-string alignment back onto tokens.

use serde_json::Value;

use crate::backends::json_extract::balanced_json_values;
use crate::backends::BackendError;
use crate::corpus::{spans_to_bio, CharSpan, TagSequence, Token};
use crate::taxonomy::{AttackType, CategoryVector, EntityType, Taxonomy};

/// Fixed preamble of the classification prompt: category list, probability
/// instruction, example-format line, and the `Events:` header.
pub const CLASSIFICATION_PROMPT: &str = "Classify each of the following events into up to three of these categories, providing probabilities for each:\nAssassination, Armed Assault, Bombing/Explosion, Hijacking,\nHostage Taking (Barricade Incident), Hostage Taking (Kidnapping),\nFacility/Infrastructure Attack, Unarmed Assault, Unknown\n\nFor each event, return only a JSON object with category names as keys and probabilities as values.\nExample format: {\"Armed Assault\": 0.7, \"Bombing/Explosion\": 0.2, \"Unknown\": 0.1}\n\nEvents:";

/// Render the classification prompt for a batch of event texts, numbered
/// `1.`, `2.`, ... one per line. Byte-deterministic for equal inputs.
pub fn render_classification_prompt(events: &[&str]) -> Result<String, BackendError> {
    if events.is_empty() {
        return Err(BackendError::EmptyBatch);
    }
    let mut prompt = String::from(CLASSIFICATION_PROMPT);
    for (i, event) in events.iter().enumerate() {
        prompt.push('\n');
        prompt.push_str(&format!("{}. {}", i + 1, event));
    }
    Ok(prompt)
}

/// Outcome of parsing a model response for a batch of `expected` events.
/// `failures[i]` marks slots for which no JSON object was found; those carry
/// all-zero vectors and score as "no prediction".
#[derive(Clone, Debug, PartialEq)]
pub struct ClassificationParse {
    pub vectors: Vec<CategoryVector>,
    pub failures: Vec<bool>,
}

impl ClassificationParse {
    pub fn failure_count(&self) -> usize {
        self.failures.iter().filter(|f| **f).count()
    }
}

fn vector_from_object(
    taxonomy: &Taxonomy,
    object: &serde_json::Map<String, Value>,
) -> CategoryVector {
    let mut vector = CategoryVector::zero();
    for (key, value) in object {
        let category = match taxonomy.normalize_attack_label(key) {
            Ok(c) => c,
            Err(_) => {
                log::warn!("dropping unrecognized category key `{key}` in model output");
                continue;
            }
        };
        let prob = match value.as_f64() {
            Some(p) => p.clamp(0.0, 1.0),
            None => {
                log::warn!("dropping non-numeric probability for `{key}` in model output");
                continue;
            }
        };
        vector.set(category, prob);
    }
    cap_positives(&mut vector);
    vector
}

/// Keep at most three strictly positive entries: the top three by
/// probability, ties broken by lower ordinal.
fn cap_positives(vector: &mut CategoryVector) {
    if vector.positive_count() <= 3 {
        return;
    }
    let mut ranked: Vec<(f64, usize)> = vector
        .probs()
        .iter()
        .enumerate()
        .filter(|(_, p)| **p > 0.0)
        .map(|(i, p)| (*p, i))
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for (_, ordinal) in ranked.into_iter().skip(3) {
        vector.set(AttackType::from_ordinal(ordinal).unwrap(), 0.0);
    }
}

/// Extract one category vector per expected event from arbitrary model text.
/// JSON objects are taken in order of appearance; an array contributes its
/// object elements in order. Missing slots become flagged zero vectors.
pub fn parse_classification_output(
    taxonomy: &Taxonomy,
    text: &str,
    expected: usize,
) -> ClassificationParse {
    let mut vectors: Vec<CategoryVector> = Vec::with_capacity(expected);
    'outer: for raw in balanced_json_values(text) {
        let value: Value = match serde_json::from_str(raw) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let candidates: Vec<&serde_json::Map<String, Value>> = match &value {
            Value::Object(map) => vec![map],
            Value::Array(items) => items.iter().filter_map(|v| v.as_object()).collect(),
            _ => continue,
        };
        for object in candidates {
            if vectors.len() == expected {
                log::warn!("model returned more JSON objects than expected; extras ignored");
                break 'outer;
            }
            vectors.push(vector_from_object(taxonomy, object));
        }
    }
    let mut failures = vec![false; vectors.len()];
    while vectors.len() < expected {
        vectors.push(CategoryVector::zero());
        failures.push(true);
    }
    ClassificationParse { vectors, failures }
}

/// Render the NER prompt: a JSON-array instruction restricted to the given
/// entity types.
pub fn render_ner_prompt(text: &str, entity_types: &[EntityType]) -> Result<String, BackendError> {
    if entity_types.is_empty() {
        return Err(BackendError::InvalidTypes);
    }
    if text.trim().is_empty() {
        return Err(BackendError::EmptyText);
    }
    let names: Vec<&str> = entity_types.iter().map(|t| t.name()).collect();
    Ok(format!(
        "Extract the named entities from the following text. Use only these entity types:\n{}\n\nReturn only a JSON array with one object per entity, in the form {{\"text\": \"<surface string copied verbatim from the text>\", \"type\": \"<entity type>\"}}. Return an empty array if there are no entities.\n\nText:\n{}",
        names.join(", "),
        text
    ))
}

/// Pull `(surface, raw type)` pairs out of model NER output: the object
/// elements of any balanced JSON array, or bare objects, with string `text`
/// and `type` fields.
pub fn parse_ner_output(text: &str) -> Vec<(String, String)> {
    let mut extracted = Vec::new();
    for raw in balanced_json_values(text) {
        let value: Value = match serde_json::from_str(raw) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let objects: Vec<&serde_json::Map<String, Value>> = match &value {
            Value::Object(map) => vec![map],
            Value::Array(items) => items.iter().filter_map(|v| v.as_object()).collect(),
            _ => continue,
        };
        for object in objects {
            if let (Some(surface), Some(kind)) = (
                object.get("text").and_then(Value::as_str),
                object.get("type").and_then(Value::as_str),
            ) {
                extracted.push((surface.to_string(), kind.to_string()));
            }
        }
    }
    extracted
}

/// Lowercase one char at a time, keeping a 1:1 position mapping so span
/// offsets stay valid.
fn simple_lowercase(text: &str) -> Vec<char> {
    text.chars()
        .map(|c| c.to_lowercase().next().unwrap_or(c))
        .collect()
}

/// Match each extracted surface string case-insensitively to its first
/// unconsumed occurrence in the document and convert the matched character
/// ranges to BIO tags over `tokens`. Unmatched surfaces are dropped with a
/// warning.
pub fn align_ner_output(
    doc_text: &str,
    tokens: &[Token],
    extracted: &[(String, EntityType)],
) -> TagSequence {
    let haystack = simple_lowercase(doc_text);
    let mut consumed: Vec<(usize, usize)> = Vec::new();
    let mut spans: Vec<CharSpan> = Vec::new();
    for (surface, entity_type) in extracted {
        let needle = simple_lowercase(surface);
        if needle.is_empty() || needle.len() > haystack.len() {
            log::warn!("NER output `{surface}` not found in document; dropped");
            continue;
        }
        let mut found = None;
        for start in 0..=haystack.len() - needle.len() {
            let end = start + needle.len();
            if consumed.iter().any(|(b, e)| start < *e && *b < end) {
                continue;
            }
            if haystack[start..end] == needle[..] {
                found = Some((start, end));
                break;
            }
        }
        match found {
            Some((begin, end)) => {
                consumed.push((begin, end));
                spans.push(CharSpan {
                    doc_id: String::new(),
                    begin,
                    end,
                    entity_type: entity_type.clone(),
                });
            }
            None => log::warn!("NER output `{surface}` not found in document; dropped"),
        }
    }
    spans.sort_by_key(|s| (s.begin, s.end));
    spans_to_bio(tokens, &spans)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Tokenizer, WhitespaceTokenizer};

    #[test]
    fn prompt_contains_appendix_text() {
        let prompt = render_classification_prompt(&["a bombing happened"]).unwrap();
        assert!(prompt.contains(
            "Classify each of the following events into up to three of these categories"
        ));
        assert!(prompt.contains(
            r#"Example format: {"Armed Assault": 0.7, "Bombing/Explosion": 0.2, "Unknown": 0.1}"#
        ));
        assert!(prompt.contains("Events:"));
        assert!(prompt.contains("1. a bombing happened"));
    }

    #[test]
    fn prompt_numbers_every_event() {
        let prompt = render_classification_prompt(&["first", "second"]).unwrap();
        assert!(prompt.contains("\n1. first"));
        assert!(prompt.contains("\n2. second"));
    }

    #[test]
    fn empty_batch_is_rejected() {
        assert!(matches!(
            render_classification_prompt(&[]),
            Err(BackendError::EmptyBatch)
        ));
    }

    #[test]
    fn prompt_is_deterministic() {
        let a = render_classification_prompt(&["x"]).unwrap();
        let b = render_classification_prompt(&["x"]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn parses_example_format_line() {
        let tax = Taxonomy::builtin();
        let parse = parse_classification_output(
            &tax,
            r#"{"Armed Assault": 0.7, "Bombing/Explosion": 0.2, "Unknown": 0.1}"#,
            1,
        );
        assert_eq!(parse.failure_count(), 0);
        let v = &parse.vectors[0];
        assert_eq!(v.get(AttackType::ArmedAssault), 0.7);
        assert_eq!(v.get(AttackType::BombingExplosion), 0.2);
        assert_eq!(v.get(AttackType::Unknown), 0.1);
        assert_eq!(v.positive_count(), 3);
    }

    #[test]
    fn extracts_from_surrounding_prose() {
        let tax = Taxonomy::builtin();
        let parse =
            parse_classification_output(&tax, r#"Sure! Here you go: {"Armed Assault": 1.0}"#, 1);
        assert_eq!(parse.failure_count(), 0);
        assert_eq!(parse.vectors[0].get(AttackType::ArmedAssault), 1.0);
        assert_eq!(parse.vectors[0].positive_count(), 1);
    }

    #[test]
    fn caps_positive_categories_at_three() {
        let tax = Taxonomy::builtin();
        let parse = parse_classification_output(
            &tax,
            r#"{"Assassination": 0.4, "Armed Assault": 0.3, "Hijacking": 0.2, "Unknown": 0.1}"#,
            1,
        );
        let v = &parse.vectors[0];
        assert_eq!(v.positive_count(), 3);
        assert_eq!(v.get(AttackType::Unknown), 0.0);
        assert_eq!(v.get(AttackType::Assassination), 0.4);
    }

    #[test]
    fn missing_json_flags_parse_failure() {
        let tax = Taxonomy::builtin();
        let parse = parse_classification_output(&tax, "no json here", 1);
        assert_eq!(parse.failure_count(), 1);
        assert!(parse.vectors[0].is_zero());
    }

    #[test]
    fn unknown_keys_dropped_and_values_clamped() {
        let tax = Taxonomy::builtin();
        let parse = parse_classification_output(
            &tax,
            r#"{"Cyber Attack": 0.9, "Armed Assault": 7.5, "Unknown": -0.3}"#,
            1,
        );
        let v = &parse.vectors[0];
        assert_eq!(v.get(AttackType::ArmedAssault), 1.0);
        assert_eq!(v.get(AttackType::Unknown), 0.0);
        assert_eq!(v.positive_count(), 1);
    }

    #[test]
    fn batched_output_matches_positionally() {
        let tax = Taxonomy::builtin();
        let text = r#"1. {"Armed Assault": 0.8}
2. {"Unknown": 0.6}"#;
        let parse = parse_classification_output(&tax, text, 2);
        assert_eq!(parse.failure_count(), 0);
        assert_eq!(parse.vectors[0].get(AttackType::ArmedAssault), 0.8);
        assert_eq!(parse.vectors[1].get(AttackType::Unknown), 0.6);
    }

    #[test]
    fn array_output_flattens_to_slots() {
        let tax = Taxonomy::builtin();
        let text = r#"[{"Armed Assault": 0.8}, {"Unknown": 0.6}]"#;
        let parse = parse_classification_output(&tax, text, 2);
        assert_eq!(parse.failure_count(), 0);
        assert_eq!(parse.vectors[1].get(AttackType::Unknown), 0.6);
    }

    #[test]
    fn ner_prompt_mentions_types_and_array() {
        let prompt = render_ner_prompt("some text", &[EntityType::Person]).unwrap();
        assert!(prompt.contains("Person"));
        assert!(prompt.contains("JSON array"));
        assert!(matches!(
            render_ner_prompt("text", &[]),
            Err(BackendError::InvalidTypes)
        ));
        let again = render_ner_prompt("some text", &[EntityType::Person]).unwrap();
        assert_eq!(prompt, again);
    }

    #[test]
    fn align_tags_matched_surface() {
        let text = "Sohail Rasheed died";
        let tokens = WhitespaceTokenizer.tokenize(text);
        let extracted = vec![("Sohail Rasheed".to_string(), EntityType::Person)];
        let seq = align_ner_output(text, &tokens, &extracted);
        assert_eq!(seq.tags, ["B-Person", "I-Person", "O"]);
    }

    #[test]
    fn unmatched_surface_is_dropped() {
        let text = "nothing to see";
        let tokens = WhitespaceTokenizer.tokenize(text);
        let extracted = vec![("Napoleon".to_string(), EntityType::Person)];
        let seq = align_ner_output(text, &tokens, &extracted);
        assert_eq!(seq.tags, ["O", "O", "O"]);
    }

    #[test]
    fn duplicate_surfaces_claim_successive_occurrences() {
        let text = "Karachi fell then Karachi rose";
        let tokens = WhitespaceTokenizer.tokenize(text);
        let extracted = vec![
            ("Karachi".to_string(), EntityType::Location),
            ("Karachi".to_string(), EntityType::Location),
        ];
        let seq = align_ner_output(text, &tokens, &extracted);
        assert_eq!(seq.tags, ["B-Location", "O", "O", "B-Location", "O"]);
    }

    #[test]
    fn alignment_is_case_insensitive() {
        let text = "the secret service acted";
        let tokens = WhitespaceTokenizer.tokenize(text);
        let extracted = vec![("Secret Service".to_string(), EntityType::Organisation)];
        let seq = align_ner_output(text, &tokens, &extracted);
        assert_eq!(seq.tags, ["O", "B-Organisation", "I-Organisation", "O"]);
    }

    #[test]
    fn parse_ner_output_reads_arrays() {
        let text = r#"Here: [{"text": "Karachi", "type": "Location"}, {"text": "MQM", "type": "Organisation"}]"#;
        let pairs = parse_ner_output(text);
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].0, "Karachi");
        assert_eq!(pairs[1].1, "Organisation");
    }
}
