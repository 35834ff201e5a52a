//! Deterministic word tokenizer.

/// Lowercases, splits on whitespace, splits punctuation off as separate
/// single-character tokens, and keeps apostrophe clitics attached to the
/// apostrophe: `"a man's hat"` -> `["a", "man", "'s", "hat"]`.
pub fn tokenize(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let chars: Vec<char> = lower.chars().collect();
    let mut tokens = Vec::new();
    let mut cur = String::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            if !cur.is_empty() {
                tokens.push(std::mem::take(&mut cur));
            }
        } else if c.is_alphanumeric() {
            cur.push(c);
        } else if c == '\'' && i + 1 < chars.len() && chars[i + 1].is_alphanumeric() {
            if !cur.is_empty() {
                tokens.push(std::mem::take(&mut cur));
            }
            cur.push('\'');
        } else {
            if !cur.is_empty() {
                tokens.push(std::mem::take(&mut cur));
            }
            tokens.push(c.to_string());
        }
        i += 1;
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn splits_trailing_punctuation() {
        assert_eq!(
            toks("What color is the floor?"),
            vec!["what", "color", "is", "the", "floor", "?"]
        );
    }

    #[test]
    fn empty_string_yields_no_tokens() {
        assert!(toks("").is_empty());
        assert!(toks("   \t\n").is_empty());
    }

    #[test]
    fn apostrophe_clitic_stays_attached() {
        assert_eq!(toks("a man's hat"), vec!["a", "man", "'s", "hat"]);
    }

    #[test]
    fn lone_apostrophe_is_punctuation() {
        assert_eq!(toks("dogs' toys"), vec!["dogs", "'", "toys"]);
    }

    #[test]
    fn deterministic_and_idempotent_on_joined_output() {
        let t1 = toks("The CAR, is red!");
        let joined = t1.join(" ");
        assert_eq!(toks(&joined), t1);
    }
}
