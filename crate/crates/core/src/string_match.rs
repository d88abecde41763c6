//! Exact and partial string matching of entity mentions against summaries.
//!
//! Short mentions (up to two tokens) must appear as a contiguous run of
//! content words in the summary. Longer mentions also match when enough
//! distinct content words occur anywhere in the summary. Pronoun-only
//! mentions never match here; coreference covers them.

use std::collections::{BTreeSet, HashSet};

use crate::alignment::{AlignmentRecord, Method};
use crate::corpus::{Document, Entity, Mention, Summary};
use crate::text::{self, parse_word_list, strip_punct};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchConfig {
    pub stopwords: BTreeSet<String>,
    pub pronouns: BTreeSet<String>,
    /// Distinct content-word hits required on the partial path.
    pub partial_min_hits: usize,
    /// Mentions with at least this many tokens may use the partial path.
    pub partial_len_threshold: usize,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            stopwords: parse_word_list(text::DEFAULT_STOPWORDS),
            pronouns: parse_word_list(text::DEFAULT_PRONOUNS),
            partial_min_hits: 3,
            partial_len_threshold: 3,
        }
    }
}

impl MatchConfig {
    pub fn check(&self) -> Result<(), String> {
        if self.partial_min_hits == 0 {
            return Err("partial_min_hits must be at least 1".into());
        }
        if self.stopwords.is_empty() || self.pronouns.is_empty() {
            return Err("stopword and pronoun lists must be non-empty".into());
        }
        Ok(())
    }

    fn is_pronoun(&self, w: &str) -> bool {
        self.pronouns.contains(w)
    }
}

/// Lowercase, strip punctuation, drop stopwords and empties; order is kept.
pub fn normalize<S: AsRef<str>>(tokens: &[S], cfg: &MatchConfig) -> Vec<String> {
    tokens
        .iter()
        .map(|t| strip_punct(t.as_ref()).to_lowercase())
        .filter(|w| !w.is_empty() && !cfg.stopwords.contains(w))
        .collect()
}

/// A summary's normalized word sequence and word-type set, computed once
/// and reused across every mention of a document.
#[derive(Debug, Clone)]
pub struct PreparedSummary {
    seq: Vec<String>,
    types: HashSet<String>,
}

impl PreparedSummary {
    pub fn new(text: &str, cfg: &MatchConfig) -> Self {
        let seq = normalize(&text::words(text), cfg);
        let types = seq.iter().cloned().collect();
        Self { seq, types }
    }
}

fn contains_run(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

/// Match a mention given as its raw tokens.
pub fn tokens_match<S: AsRef<str>>(mention_tokens: &[S], summary: &PreparedSummary, cfg: &MatchConfig) -> bool {
    let lowered: Vec<String> = mention_tokens
        .iter()
        .map(|t| strip_punct(t.as_ref()).to_lowercase())
        .filter(|w| !w.is_empty())
        .collect();
    if lowered.is_empty() || lowered.iter().all(|w| cfg.is_pronoun(w)) {
        return false;
    }
    let content = normalize(mention_tokens, cfg);
    if content.is_empty() {
        return false;
    }
    if contains_run(&summary.seq, &content) {
        return true;
    }
    if mention_tokens.len() < cfg.partial_len_threshold {
        return false;
    }
    let distinct: BTreeSet<&String> = content.iter().collect();
    distinct.into_iter().filter(|w| summary.types.contains(*w)).count() >= cfg.partial_min_hits
}

fn mention_tokens<'a>(doc: &'a Document, m: &Mention) -> Vec<&'a str> {
    doc.span_tokens(m.span).iter().map(|t| t.surface.as_str()).collect()
}

/// Whether a mention (as its surface tokens) appears in the summary.
pub fn mention_matches(mention: &Mention, summary: &Summary, cfg: &MatchConfig) -> bool {
    let toks: Vec<&str> = mention.surface.split(' ').collect();
    tokens_match(&toks, &PreparedSummary::new(&summary.text, cfg), cfg)
}

/// Whether any mention of the entity appears in the prepared text.
pub fn entity_matches(doc: &Document, entity: &Entity, prepared: &PreparedSummary, cfg: &MatchConfig) -> bool {
    entity
        .mentions
        .iter()
        .any(|m| tokens_match(&mention_tokens(doc, m), prepared, cfg))
}

/// One `string` record per entity, in position order.
pub fn align_string(doc: &Document, summary: &Summary, cfg: &MatchConfig) -> Vec<AlignmentRecord> {
    let prepared = PreparedSummary::new(&summary.text, cfg);
    doc.entities_by_position()
        .into_iter()
        .map(|e| {
            AlignmentRecord::new(
                &doc.id,
                &e.id,
                &summary.id,
                Method::String,
                entity_matches(doc, e, &prepared, cfg),
            )
        })
        .collect()
}
