//! CoNLL 2003 reading and writing.
//!
//! Layout: one token per line, whitespace-separated columns with the BIO tag
//! in the final column; blank lines separate sentences; lines starting with
//! `-DOCSTART-` separate documents and are excluded from sentences.

use crate::corpus::CorpusError;
use crate::taxonomy::Taxonomy;

/// A tokenized sentence with one BIO tag per token.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TagSequence {
    pub tokens: Vec<String>,
    pub tags: Vec<String>,
}

impl TagSequence {
    pub fn new(tokens: Vec<String>, tags: Vec<String>) -> Result<TagSequence, CorpusError> {
        if tokens.len() != tags.len() {
            return Err(CorpusError::LengthMismatch {
                tokens: tokens.len(),
                tags: tags.len(),
            });
        }
        Ok(TagSequence { tokens, tags })
    }

    /// All-O sequence over the given tokens.
    pub fn all_outside(tokens: Vec<String>) -> TagSequence {
        let tags = vec!["O".to_string(); tokens.len()];
        TagSequence { tokens, tags }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Split a BIO tag into its prefix and type name. Returns `None` for `"O"`.
pub fn split_tag(tag: &str) -> Option<(char, &str)> {
    let rest = tag.strip_prefix("B-").or_else(|| tag.strip_prefix("I-"))?;
    Some((tag.chars().next().unwrap(), rest))
}

/// Canonicalize one tag against the taxonomy; `line` is for error reporting.
fn canonicalize_tag(taxonomy: &Taxonomy, tag: &str, line: usize) -> Result<String, CorpusError> {
    if tag == "O" {
        return Ok("O".to_string());
    }
    match split_tag(tag) {
        Some((prefix, name)) => {
            let entity =
                taxonomy
                    .normalize_entity_label(name)
                    .map_err(|_| CorpusError::UnknownTag {
                        line,
                        tag: tag.to_string(),
                    })?;
            Ok(format!("{}-{}", prefix, entity.name()))
        }
        None => Err(CorpusError::UnknownTag {
            line,
            tag: tag.to_string(),
        }),
    }
}

/// Parse CoNLL 2003 text into per-sentence tag sequences. Tag names are
/// canonicalized against the taxonomy (`B-ORG` becomes `B-Organisation`).
pub fn parse_conll(text: &str, taxonomy: &Taxonomy) -> Result<Vec<TagSequence>, CorpusError> {
    let mut sentences = Vec::new();
    let mut tokens: Vec<String> = Vec::new();
    let mut tags: Vec<String> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            if !tokens.is_empty() {
                sentences.push(TagSequence {
                    tokens: std::mem::take(&mut tokens),
                    tags: std::mem::take(&mut tags),
                });
            }
            continue;
        }
        if trimmed.starts_with("-DOCSTART-") {
            if !tokens.is_empty() {
                sentences.push(TagSequence {
                    tokens: std::mem::take(&mut tokens),
                    tags: std::mem::take(&mut tags),
                });
            }
            continue;
        }
        let columns: Vec<&str> = trimmed.split_whitespace().collect();
        if columns.len() < 2 {
            return Err(CorpusError::MalformedLine { line: lineno });
        }
        let tag = canonicalize_tag(taxonomy, columns[columns.len() - 1], lineno)?;
        tokens.push(columns[0].to_string());
        tags.push(tag);
    }
    if !tokens.is_empty() {
        sentences.push(TagSequence { tokens, tags });
    }
    Ok(sentences)
}

/// Render sequences back to CoNLL text: `token tag` lines, one blank line
/// after each sentence. `parse_conll(write_conll(s)) == s`.
pub fn write_conll(sequences: &[TagSequence]) -> String {
    let mut out = String::new();
    for seq in sequences {
        for (token, tag) in seq.tokens.iter().zip(&seq.tags) {
            out.push_str(token);
            out.push(' ');
            out.push_str(tag);
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_single_sentence() {
        let tax = Taxonomy::builtin();
        let seqs = parse_conll("John B-Person\n. O\n\n", &tax).unwrap();
        assert_eq!(seqs.len(), 1);
        assert_eq!(seqs[0].tokens, ["John", "."]);
        assert_eq!(seqs[0].tags, ["B-Person", "O"]);
    }

    #[test]
    fn docstart_lines_are_excluded() {
        let tax = Taxonomy::builtin();
        let text = "-DOCSTART- O\n\nJohn B-Person\n\n";
        let seqs = parse_conll(text, &tax).unwrap();
        assert_eq!(seqs.len(), 1);
        assert_eq!(seqs[0].tokens, ["John"]);
    }

    #[test]
    fn unknown_tag_is_rejected() {
        let tax = Taxonomy::builtin();
        let err = parse_conll("x B-Martian\n", &tax).unwrap_err();
        assert!(matches!(err, CorpusError::UnknownTag { line: 1, .. }));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let tax = Taxonomy::builtin();
        let err = parse_conll("ok O\nbroken\n", &tax).unwrap_err();
        assert!(matches!(err, CorpusError::MalformedLine { line: 2 }));
    }

    #[test]
    fn tags_are_canonicalized() {
        let tax = Taxonomy::builtin();
        let seqs = parse_conll("UN B-ORG\ntoday B-DATE\n\n", &tax).unwrap();
        assert_eq!(seqs[0].tags, ["B-Organisation", "B-Temporal"]);
    }

    #[test]
    fn write_conll_examples() {
        assert_eq!(write_conll(&[]), "");
        let seq = TagSequence::new(
            vec!["John".into(), ".".into()],
            vec!["B-Person".into(), "O".into()],
        )
        .unwrap();
        let out = write_conll(std::slice::from_ref(&seq));
        assert_eq!(out.lines().count(), 3); // 2 token lines + 1 blank
        assert_eq!(out, "John B-Person\n. O\n\n");
    }

    #[test]
    fn round_trip_is_identity() {
        let tax = Taxonomy::builtin();
        let text = "John B-Person\n. O\n\nKarachi B-Location\nfell O\n\n";
        let seqs = parse_conll(text, &tax).unwrap();
        assert_eq!(write_conll(&seqs), text);
        let reparsed = parse_conll(&write_conll(&seqs), &tax).unwrap();
        assert_eq!(reparsed, seqs);
    }
}
