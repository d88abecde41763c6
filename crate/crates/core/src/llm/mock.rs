//! Deterministic stand-in for a chat endpoint. It reads the task prompts
//! back out of the request and answers with simple lexical heuristics, so
//! whole pipeline runs are reproducible without network access.

use std::collections::{HashMap, HashSet};

use super::prompts::Task;
use super::{ChatRequest, Transport, TransportError};
use crate::string_match::{normalize, MatchConfig};
use crate::text;

const SUMMARY_WORDS: usize = 30;
const ABBREVIATED_WORDS: usize = 12;
const PREDICTED_ENTITIES: usize = 5;

#[derive(Debug, Clone, Default)]
pub struct MockTransport {
    cfg: MatchConfig,
}

impl MockTransport {
    pub fn new(cfg: MatchConfig) -> Self {
        Self { cfg }
    }

    fn generate(&self, first_prompt: &str, reprompted: bool) -> String {
        let doc = between(first_prompt, "Document:\n", "\n\nSummary:");
        let n = if reprompted { ABBREVIATED_WORDS } else { SUMMARY_WORDS };
        let words: Vec<String> = text::words(doc).into_iter().take(n).collect();
        format!("{}.", words.join(" "))
    }

    /// "yes" when any content word of the entity occurs in the summary.
    fn align(&self, first_prompt: &str) -> String {
        let summary = first_prompt
            .lines()
            .find_map(|l| l.strip_prefix("Summary: "))
            .unwrap_or_default();
        let in_summary: HashSet<String> = normalize(&text::words(summary), &self.cfg).into_iter().collect();
        let listing = between(first_prompt, "Entities:\n", "\n\n");
        listing
            .lines()
            .filter_map(|l| l.split_once(". "))
            .map(|(i, name)| {
                let hit = normalize(&text::words(name), &self.cfg)
                    .iter()
                    .any(|w| !self.cfg.pronouns.contains(w) && in_summary.contains(w));
                format!("{i}. {}\n", if hit { "yes" } else { "no" })
            })
            .collect()
    }

    /// The most frequent capitalized content words, scored 5 down to 1.
    fn predict(&self, first_prompt: &str) -> String {
        let doc = between(first_prompt, "Document:\n", "\n\nSalient entities:");
        let mut counts: HashMap<String, (usize, usize)> = HashMap::new();
        for (i, w) in text::words(doc).into_iter().enumerate() {
            let lower = w.to_lowercase();
            if !w.chars().next().is_some_and(char::is_uppercase)
                || self.cfg.stopwords.contains(&lower)
                || self.cfg.pronouns.contains(&lower)
            {
                continue;
            }
            counts.entry(w).or_insert((0, i)).0 += 1;
        }
        let mut ranked: Vec<(String, usize, usize)> = counts.into_iter().map(|(w, (c, i))| (w, c, i)).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
        ranked
            .into_iter()
            .take(PREDICTED_ENTITIES)
            .zip((1..=5u32).rev())
            .map(|((w, _, _), s)| format!("{w}: {s}\n"))
            .collect()
    }
}

/// Text after the last `start` marker, up to the next `end` marker.
fn between<'a>(s: &'a str, start: &str, end: &str) -> &'a str {
    let from = s.rfind(start).map_or(0, |i| i + start.len());
    let rest = &s[from..];
    rest.find(end).map_or(rest, |j| &rest[..j])
}

impl Transport for MockTransport {
    fn complete(&self, req: &ChatRequest) -> Result<String, TransportError> {
        let first = req
            .history
            .first()
            .map_or(req.user_prompt.as_str(), |m| m.content.as_str());
        let reply = match Task::of_system_prompt(&req.system_prompt) {
            Some(Task::Generate) => self.generate(first, !req.history.is_empty()),
            Some(Task::Align) => self.align(first),
            Some(Task::Predict) => self.predict(first),
            None => req.user_prompt.clone(),
        };
        Ok(reply)
    }
}
