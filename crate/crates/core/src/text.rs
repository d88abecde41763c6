//! Word splitting and normalization shared by the string matcher, the coref
//! mock and the n-gram metrics.
//!
//! Documents arrive pre-tokenized; only summaries and free LLM text go
//! through [`words`].

use std::collections::BTreeSet;

/// Default English stopword list, one word per line.
pub const DEFAULT_STOPWORDS: &str = include_str!("../resources/stopwords.txt");
/// Default pronoun list, one word per line.
pub const DEFAULT_PRONOUNS: &str = include_str!("../resources/pronouns.txt");

/// True for ASCII punctuation and the common Unicode punctuation blocks.
pub fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(c,
            '\u{00A1}' | '\u{00A7}' | '\u{00AB}' | '\u{00B6}' | '\u{00B7}' | '\u{00BB}' | '\u{00BF}'
            | '\u{2010}'..='\u{2027}'
            | '\u{2030}'..='\u{205E}'
            | '\u{2E00}'..='\u{2E4F}'
            | '\u{3001}'..='\u{3003}'
            | '\u{3008}'..='\u{3011}'
            | '\u{FF01}'..='\u{FF0F}')
}

/// Strip leading and trailing punctuation from a single token.
pub fn strip_punct(token: &str) -> &str {
    token.trim_matches(is_punct)
}

/// Whitespace split, punctuation trimmed from both ends, empties dropped.
/// Case is preserved.
pub fn words(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(strip_punct)
        .filter(|w| !w.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Whitespace split with leading and trailing punctuation peeled off into
/// one token per character, for feeding free text to a token-level model.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let core = strip_punct(chunk);
        if core.is_empty() {
            out.extend(chunk.chars().map(String::from));
            continue;
        }
        let lead = chunk.find(core).expect("core is a substring");
        out.extend(chunk[..lead].chars().map(String::from));
        out.push(core.to_owned());
        out.extend(chunk[lead + core.len()..].chars().map(String::from));
    }
    out
}

/// Lowercased, punctuation-stripped words (no stopword removal).
pub fn lower_words(text: &str) -> Vec<String> {
    words(text).into_iter().map(|w| w.to_lowercase()).collect()
}

/// Parse a one-word-per-line resource. Blank lines and `#` comments are skipped.
pub fn parse_word_list(src: &str) -> BTreeSet<String> {
    src.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn words_strip_edges_only() {
        assert_eq!(words("Hello, world!  U.S. (Bohr's)"), vec!["Hello", "world", "U.S", "Bohr's"]);
        assert!(words(" . , -- ").is_empty());
    }

    #[test]
    fn tokenize_splits_edge_punctuation() {
        assert_eq!(
            tokenize("Einstein (the physicist) met Bohr... ok?"),
            ["Einstein", "(", "the", "physicist", ")", "met", "Bohr", ".", ".", ".", "ok", "?"]
        );
        assert_eq!(tokenize("U.S. --"), ["U.S", ".", "-", "-"]);
    }

    #[test]
    fn unicode_punct_is_trimmed() {
        assert_eq!(words("\u{201C}quoted\u{201D} \u{00AB}x\u{00BB} dash\u{2014}"), vec!["quoted", "x", "dash"]);
    }

    #[test]
    fn default_lists_are_loaded() {
        let stop = parse_word_list(DEFAULT_STOPWORDS);
        let pron = parse_word_list(DEFAULT_PRONOUNS);
        assert!(stop.len() >= 45 && stop.contains("the"));
        assert!(pron.contains("he") && pron.contains("themselves"));
    }
}
