use super::prompts::{self, render};
use super::{Gateway, LlmError, SamplingParams};
use crate::corpus::{Document, Summary, SummarySource, MAX_SUMMARY_CHARS};

/// In-session re-prompts allowed for an over-long summary.
pub const MAX_REPROMPTS: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenreExample {
    pub document: String,
    pub summary: String,
}

fn sentence_end(c: char) -> bool {
    matches!(c, '.' | '?' | '!')
}

/// Replace every sentence-final `.`, `?` or `!` that is followed by more
/// text with `;`. The final mark is kept.
pub fn fix_sentence_punctuation(text: &str) -> String {
    let text = text.trim();
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    for (i, &c) in chars.iter().enumerate() {
        let internal = sentence_end(c)
            && chars.get(i + 1).is_some_and(|n| n.is_whitespace())
            && chars[i + 1..].iter().any(|n| !n.is_whitespace());
        out.push(if internal { ';' } else { c });
    }
    out
}

/// No sentence-final mark followed by whitespace before the last character.
pub fn is_single_sentence(text: &str) -> bool {
    let chars: Vec<char> = text.trim().chars().collect();
    !chars.windows(2).any(|w| sentence_end(w[0]) && w[1].is_whitespace())
}

fn format_examples(examples: &[GenreExample]) -> String {
    examples
        .iter()
        .map(|e| format!("Document:\n{}\n\nSummary: {}\n\n", e.document.trim(), e.summary.trim()))
        .collect()
}

/// One-sentence summary of `doc` in at most 380 characters. Over-long
/// replies are sent back in the same session with a request to abbreviate.
pub fn generate_summary(
    gw: &Gateway,
    params: SamplingParams,
    doc: &Document,
    examples: &[GenreExample],
    summary_id: &str,
) -> Result<Summary, LlmError> {
    if examples.is_empty() {
        return Err(LlmError::NoExamples(doc.id.clone()));
    }
    let max = MAX_SUMMARY_CHARS.to_string();
    let system = render(prompts::GENERATE_SYSTEM, &[("max_chars", &max)]);
    let user = render(
        prompts::GENERATE_USER,
        &[
            ("genre", &doc.genre),
            ("examples", &format_examples(examples)),
            ("document", &doc.text()),
        ],
    );
    let mut req = gw.request(params, system, user);
    for round in 0..=MAX_REPROMPTS {
        let raw = gw.chat(&req)?;
        let text = fix_sentence_punctuation(&raw);
        let chars = text.chars().count();
        if chars <= MAX_SUMMARY_CHARS {
            if text.is_empty() || !is_single_sentence(&text) {
                return Err(LlmError::NotSingleSentence {
                    document: doc.id.clone(),
                    text,
                });
            }
            return Ok(Summary::new(summary_id, SummarySource::Model(gw.model().to_owned()), text));
        }
        if round == MAX_REPROMPTS {
            return Err(LlmError::GenerationTooLong {
                document: doc.id.clone(),
                chars,
                reprompts: MAX_REPROMPTS,
            });
        }
        let next = render(prompts::GENERATE_ABBREVIATE, &[("chars", &chars.to_string()), ("max_chars", &max)]);
        req = req.follow_up(&raw, next);
    }
    unreachable!("loop returns on its last round")
}
