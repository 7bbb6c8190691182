//! Balanced-brace extraction of JSON values from free-form model text.
//!
//! Models routinely wrap JSON in prose or code fences, so full-text parsing
//! fails; instead we scan for balanced `{...}` / `[...]` regions, honoring
//! string literals and escapes, and hand each candidate to serde.

/// Raw text slices of every top-level balanced JSON object or array, in
/// order of appearance. Unbalanced trailing fragments are ignored.
pub fn balanced_json_values(text: &str) -> Vec<&str> {
    let mut values = Vec::new();
    let mut stack: Vec<char> = Vec::new();
    let mut start = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in text.char_indices() {
        if in_string {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
            continue;
        }
        match c {
            '"' if !stack.is_empty() => in_string = true,
            '{' | '[' => {
                if stack.is_empty() {
                    start = i;
                }
                stack.push(c);
            }
            '}' | ']' => {
                if let Some(open) = stack.pop() {
                    let balanced = (open == '{' && c == '}') || (open == '[' && c == ']');
                    if !balanced {
                        // Mismatched nesting: discard this candidate entirely.
                        stack.clear();
                        continue;
                    }
                    if stack.is_empty() {
                        values.push(&text[start..i + c.len_utf8()]);
                    }
                }
            }
            _ => {}
        }
    }
    values
}
