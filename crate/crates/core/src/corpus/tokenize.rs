//! Tokenization with recorded character extents.
//!
//! Offsets throughout the corpus layer count Unicode scalar values
//! (characters), half-open, so span arithmetic is independent of encoding.

/// A token with its character extent in the source text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    /// First character index, inclusive.
    pub begin: usize,
    /// Last character index, exclusive.
    pub end: usize,
}

pub trait Tokenizer: Send + Sync {
    fn tokenize(&self, text: &str) -> Vec<Token>;
}

/// Default tokenizer: splits on whitespace and detaches punctuation, so
/// `"died."` becomes `["died", "."]`. Alphanumeric runs stay together;
/// every other non-space character is its own token.
#[derive(Clone, Copy, Debug, Default)]
pub struct SimpleTokenizer;

impl Tokenizer for SimpleTokenizer {
    fn tokenize(&self, text: &str) -> Vec<Token> {
        let mut tokens = Vec::new();
        let mut current = String::new();
        let mut start = 0usize;
        for (i, c) in text.chars().enumerate() {
            if c.is_alphanumeric() || c == '\'' {
                if current.is_empty() {
                    start = i;
                }
                current.push(c);
            } else {
                if !current.is_empty() {
                    tokens.push(Token {
                        text: std::mem::take(&mut current),
                        begin: start,
                        end: i,
                    });
                }
                if !c.is_whitespace() {
                    tokens.push(Token {
                        text: c.to_string(),
                        begin: i,
                        end: i + 1,
                    });
                }
            }
        }
        if !current.is_empty() {
            let end = text.chars().count();
            tokens.push(Token {
                text: current,
                begin: start,
                end,
            });
        }
        tokens
    }
}

/// Splits on whitespace only. Used for text reconstructed from token lists
/// (e.g. CoNLL sentences), where each original token contains no spaces and
/// must survive round-tripping unchanged.
#[derive(Clone, Copy, Debug, Default)]
pub struct WhitespaceTokenizer;

impl Tokenizer for WhitespaceTokenizer {
    fn tokenize(&self, text: &str) -> Vec<Token> {
        let mut tokens = Vec::new();
        let mut current = String::new();
        let mut start = 0usize;
        let mut count = 0usize;
        for (i, c) in text.chars().enumerate() {
            count = i + 1;
            if c.is_whitespace() {
                if !current.is_empty() {
                    tokens.push(Token {
                        text: std::mem::take(&mut current),
                        begin: start,
                        end: i,
                    });
                }
            } else {
                if current.is_empty() {
                    start = i;
                }
                current.push(c);
            }
        }
        if !current.is_empty() {
            tokens.push(Token {
                text: current,
                begin: start,
                end: count,
            });
        }
        tokens
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_tokenizer_splits_punctuation() {
        let toks = SimpleTokenizer.tokenize("Sohail Rasheed died.");
        let texts: Vec<&str> = toks.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, ["Sohail", "Rasheed", "died", "."]);
        assert_eq!(toks[0].begin, 0);
        assert_eq!(toks[0].end, 6);
        assert_eq!(toks[3].begin, 19);
        assert_eq!(toks[3].end, 20);
    }

    #[test]
    fn whitespace_tokenizer_preserves_tokens() {
        let toks = WhitespaceTokenizer.tokenize("U.S. forces arrived");
        let texts: Vec<&str> = toks.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, ["U.S.", "forces", "arrived"]);
    }

    #[test]
    fn extents_are_char_offsets() {
        // Multi-byte characters still count as one position.
        let toks = WhitespaceTokenizer.tokenize("café bar");
        assert_eq!(toks[0].begin, 0);
        assert_eq!(toks[0].end, 4);
        assert_eq!(toks[1].begin, 5);
        assert_eq!(toks[1].end, 8);
    }

    #[test]
    fn empty_text_yields_no_tokens() {
        assert!(SimpleTokenizer.tokenize("").is_empty());
        assert!(WhitespaceTokenizer.tokenize("   ").is_empty());
    }
}
