use std::fmt;
use std::sync::LazyLock;

use regex::Regex;

use super::prompts::{self, render};
use super::{entity_label, Gateway, LlmError, SamplingParams};
use crate::alignment::{AlignmentRecord, Method};
use crate::corpus::{Document, Summary};
use crate::string_match::MatchConfig;

pub const MIN_BATCH_SIZE: usize = 15;
pub const MAX_BATCH_SIZE: usize = 20;
pub const DEFAULT_BATCH_SIZE: usize = 18;

static ANSWER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^\s*(\d+)\s*[.):\-]\s*(yes|no)\b").expect("valid regex"));

/// Problems with a numbered yes/no reply. Indices are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseError {
    Missing(Vec<usize>),
    Duplicate(usize),
    OutOfRange(usize),
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseError::Missing(ix) => write!(f, "no answer for item(s) {ix:?}"),
            ParseError::Duplicate(i) => write!(f, "item {i} answered twice"),
            ParseError::OutOfRange(i) => write!(f, "item {i} is not in the batch"),
        }
    }
}

impl std::error::Error for ParseError {}

/// Read one yes/no per batch entry from lines like `3. yes` or `3) NO, ...`.
/// Lines that do not start with a numbered answer are ignored.
pub fn parse_alignment_reply<S: AsRef<str>>(reply: &str, batch: &[S]) -> Result<Vec<bool>, ParseError> {
    let mut answers: Vec<Option<bool>> = vec![None; batch.len()];
    for line in reply.lines() {
        let Some(c) = ANSWER.captures(line) else { continue };
        let i: usize = c[1].parse().map_err(|_| ParseError::OutOfRange(usize::MAX))?;
        let slot = i
            .checked_sub(1)
            .and_then(|j| answers.get_mut(j))
            .ok_or(ParseError::OutOfRange(i))?;
        if slot.is_some() {
            return Err(ParseError::Duplicate(i));
        }
        *slot = Some(c[2].eq_ignore_ascii_case("yes"));
    }
    let missing: Vec<usize> = answers
        .iter()
        .enumerate()
        .filter(|(_, a)| a.is_none())
        .map(|(i, _)| i + 1)
        .collect();
    if !missing.is_empty() {
        return Err(ParseError::Missing(missing));
    }
    Ok(answers.into_iter().flatten().collect())
}

/// One `llm` record per entity, in position order. Entities are sent in
/// consecutive batches of `batch_size`; the last batch may be shorter.
pub fn align_entities_llm(
    gw: &Gateway,
    params: SamplingParams,
    doc: &Document,
    summary: &Summary,
    batch_size: usize,
    cfg: &MatchConfig,
) -> Result<Vec<AlignmentRecord>, LlmError> {
    if !(MIN_BATCH_SIZE..=MAX_BATCH_SIZE).contains(&batch_size) {
        return Err(LlmError::BatchSize(batch_size));
    }
    let entities = doc.entities_by_position();
    let mut out = Vec::with_capacity(entities.len());
    for (b, batch) in entities.chunks(batch_size).enumerate() {
        let listing: String = batch
            .iter()
            .enumerate()
            .map(|(i, e)| format!("{}. {}\n", i + 1, entity_label(e, cfg)))
            .collect();
        let user = render(
            prompts::ALIGN_USER,
            &[("summary", summary.text.trim()), ("entities", listing.trim_end())],
        );
        let ids: Vec<&str> = batch.iter().map(|e| e.id.as_str()).collect();
        let req = gw.request(params, prompts::ALIGN_SYSTEM, user);
        let reply = gw.chat(&req)?;
        let labels = match parse_alignment_reply(&reply, &ids) {
            Ok(l) => l,
            Err(_) => {
                let strict = render(prompts::ALIGN_STRICT, &[("count", &batch.len().to_string())]);
                let retry = gw.chat(&req.follow_up(&reply, strict))?;
                parse_alignment_reply(&retry, &ids).map_err(|reason| LlmError::BatchUnparseable {
                    document: doc.id.clone(),
                    summary: summary.id.clone(),
                    batch: b,
                    first: batch[0].id.clone(),
                    last: batch[batch.len() - 1].id.clone(),
                    reason,
                })?
            }
        };
        out.extend(
            batch
                .iter()
                .zip(labels)
                .map(|(e, l)| AlignmentRecord::new(&doc.id, &e.id, &summary.id, Method::Llm, l)),
        );
    }
    Ok(out)
}
