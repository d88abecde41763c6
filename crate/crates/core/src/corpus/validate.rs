use std::collections::HashSet;
use std::fmt;

use super::{join_surface, Document, Vocabulary, MAX_SUMMARY_CHARS};

/// A broken document invariant and the element it was found on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub invariant: &'static str,
    pub element: String,
}

impl Violation {
    fn new(invariant: &'static str, element: impl Into<String>) -> Self {
        Self {
            invariant,
            element: element.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.invariant, self.element)
    }
}

/// Every invariant violation in `doc`; empty iff the document is well formed.
pub fn validate_document(doc: &Document, vocab: &Vocabulary) -> Vec<Violation> {
    let mut out = Vec::new();

    if vocab.genre_index(&doc.genre).is_none() {
        out.push(Violation::new("unknown genre", doc.genre.clone()));
    }

    if doc.tokens.is_empty() {
        out.push(Violation::new("empty document", doc.id.clone()));
    }
    for (i, pair) in doc.tokens.windows(2).enumerate() {
        if pair[1].doc_index <= pair[0].doc_index {
            out.push(Violation::new("token index not increasing", format!("token {}", i + 1)));
        }
        if pair[1].sentence_index < pair[0].sentence_index {
            out.push(Violation::new("sentence index decreasing", format!("token {}", i + 1)));
        }
    }
    let expected_sentences = doc.tokens.iter().map(|t| t.sentence_index + 1).max().unwrap_or(0);
    if doc.sentence_count != expected_sentences {
        out.push(Violation::new(
            "sentence count mismatch",
            format!("declared {}, tokens imply {}", doc.sentence_count, expected_sentences),
        ));
    }

    let mut ids = HashSet::new();
    let mut positions = HashSet::new();
    for e in &doc.entities {
        if !ids.insert(e.id.as_str()) {
            out.push(Violation::new("duplicate entity id", e.id.clone()));
        }
        if e.position == 0 {
            out.push(Violation::new("invalid entity position", e.id.clone()));
        } else if !positions.insert(e.position) {
            out.push(Violation::new("duplicate entity position", e.id.clone()));
        }
        if vocab.type_index(&e.entity_type).is_none() {
            out.push(Violation::new("unknown entity type", format!("{}: {}", e.id, e.entity_type)));
        }
        if e.mentions.is_empty() {
            out.push(Violation::new("empty mentions", e.id.clone()));
        }
        if let Some(g) = e.gold_score {
            if g as usize > doc.summaries.len() {
                out.push(Violation::new(
                    "gold score exceeds summary count",
                    format!("{}: {g} > {}", e.id, doc.summaries.len()),
                ));
            }
        }
        for w in e.mentions.windows(2) {
            if w[1].span.start < w[0].span.start {
                out.push(Violation::new("mentions not ordered", e.id.clone()));
            }
        }
        for m in &e.mentions {
            let where_ = format!("{} [{},{})", e.id, m.span.start, m.span.end);
            if m.entity_id != e.id {
                out.push(Violation::new("mention entity mismatch", where_.clone()));
            }
            if m.span.start >= m.span.end {
                out.push(Violation::new("empty span", where_));
            } else if m.span.end > doc.tokens.len() {
                out.push(Violation::new("span out of bounds", where_));
            } else if m.surface != join_surface(&doc.tokens[m.span.start..m.span.end]) {
                out.push(Violation::new("mention surface mismatch", where_));
            }
        }
    }

    if doc.summaries.is_empty() {
        out.push(Violation::new("no summaries", doc.id.clone()));
    }
    let mut sids = HashSet::new();
    for s in &doc.summaries {
        if !sids.insert(s.id.as_str()) {
            out.push(Violation::new("duplicate summary id", s.id.clone()));
        }
        if s.char_len != s.text.chars().count() {
            out.push(Violation::new("summary char_len mismatch", s.id.clone()));
        }
        if s.source.is_model() && s.char_len > MAX_SUMMARY_CHARS {
            out.push(Violation::new(
                "summary length",
                format!("{}: {} > {MAX_SUMMARY_CHARS} chars", s.id, s.char_len),
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::{Entity, Mention, Partition, Span, Summary, SummarySource, Token};
    use super::*;

    fn doc() -> Document {
        let tokens: Vec<Token> = ["Ada", "wrote", ".", "Ada", "won", "."]
            .iter()
            .enumerate()
            .map(|(i, s)| Token {
                doc_index: i,
                sentence_index: i / 3,
                surface: s.to_string(),
            })
            .collect();
        let mention = |id: &str, a: usize, b: usize, s: &str| Mention {
            entity_id: id.into(),
            span: Span::new(a, b),
            surface: s.into(),
        };
        Document {
            id: "d".into(),
            genre: "bio".into(),
            partition: Partition::Dev,
            tokens,
            sentence_count: 2,
            entities: vec![
                Entity {
                    id: "ada".into(),
                    entity_type: "person".into(),
                    mentions: vec![mention("ada", 0, 1, "Ada"), mention("ada", 3, 4, "Ada")],
                    position: 1,
                    gold_score: Some(1),
                },
                Entity {
                    id: "win".into(),
                    entity_type: "event".into(),
                    mentions: vec![mention("win", 4, 5, "won")],
                    position: 2,
                    gold_score: None,
                },
            ],
            summaries: vec![Summary::new("s1", SummarySource::Human, "Ada wrote.")],
        }
    }

    fn names(v: &[Violation]) -> Vec<&'static str> {
        v.iter().map(|x| x.invariant).collect()
    }

    #[test]
    fn well_formed_is_clean() {
        assert!(validate_document(&doc(), &Vocabulary::default()).is_empty());
    }

    #[test]
    fn duplicate_position() {
        let mut d = doc();
        d.entities[1].position = 1;
        assert_eq!(names(&validate_document(&d, &Vocabulary::default())), ["duplicate entity position"]);
    }

    #[test]
    fn empty_mentions() {
        let mut d = doc();
        d.entities[1].mentions.clear();
        assert_eq!(names(&validate_document(&d, &Vocabulary::default())), ["empty mentions"]);
    }

    #[test]
    fn surface_and_type_checks() {
        let mut d = doc();
        d.entities[0].mentions[1].surface = "Bob".into();
        d.entities[1].entity_type = "robot".into();
        d.entities[0].gold_score = Some(2);
        let v = names(&validate_document(&d, &Vocabulary::default()));
        assert!(v.contains(&"unknown entity type"));
        assert!(v.contains(&"mention surface mismatch"));
        assert!(v.contains(&"gold score exceeds summary count"));
    }

    #[test]
    fn sentence_count_must_match() {
        let mut d = doc();
        d.sentence_count = 5;
        assert_eq!(names(&validate_document(&d, &Vocabulary::default())), ["sentence count mismatch"]);
    }
}
