use std::collections::BTreeMap;
use std::sync::LazyLock;

use rand::seq::IndexedRandom;
use regex::Regex;

use super::prompts::{self, render};
use super::{entity_label, Gateway, LlmError, SamplingParams};
use crate::corpus::{Document, Entity};
use crate::rng::substream;
use crate::salience::SalienceScore;
use crate::string_match::{entity_matches, normalize, tokens_match, MatchConfig, PreparedSummary};
use crate::text;

/// Top of the graded scale the model is asked to use.
const SCALE_MAX: u32 = 5;

static LINE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^\s*(?:[-*\u{2022}]\s*|\d+[.)]\s+)?(.+?)\s*:\s*\**\s*([1-5])(?:\s*/\s*5)?\s*\**\.?\s*$")
        .expect("valid regex")
});

/// A worked example: a document and its gold scores.
#[derive(Debug, Clone, Copy)]
pub struct Shot<'a> {
    pub document: &'a Document,
    pub gold: &'a [SalienceScore],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    /// One score per entity in position order; unnamed entities score 0.
    pub scores: Vec<SalienceScore>,
    /// Names from the reply that matched no entity, in reply order.
    pub unresolved: Vec<String>,
}

/// `(name, score)` pairs from lines of the form `name: score`.
pub fn parse_prediction_reply(reply: &str) -> Vec<(String, u32)> {
    reply
        .lines()
        .filter_map(|l| LINE.captures(l))
        .filter_map(|c| {
            let name = c[1].trim_matches(|ch: char| ch == '*' || ch == '"' || ch.is_whitespace());
            let score = c[2].parse().ok()?;
            (!name.is_empty()).then(|| (name.to_owned(), score))
        })
        .collect()
}

/// The entity a predicted name refers to, by position order: first an
/// entity with a mention whose content words equal the name's; else one
/// whose mention string-matches the name as if the name were a summary;
/// else one with a mention the name itself string-matches.
pub fn resolve_entity<'a>(doc: &'a Document, name: &str, cfg: &MatchConfig) -> Option<&'a Entity> {
    let entities = doc.entities_by_position();
    let wanted = normalize(&text::words(name), cfg);
    if !wanted.is_empty() {
        let exact = entities.iter().find(|e| {
            e.mentions
                .iter()
                .any(|m| normalize(&text::words(&m.surface), cfg) == wanted)
        });
        if let Some(e) = exact {
            return Some(e);
        }
    }
    let prepared = PreparedSummary::new(name, cfg);
    if let Some(e) = entities.iter().find(|e| entity_matches(doc, e, &prepared, cfg)) {
        return Some(e);
    }
    let name_tokens: Vec<&str> = name.split_whitespace().collect();
    entities.into_iter().find(|e| {
        e.mentions
            .iter()
            .any(|m| tokens_match(&name_tokens, &PreparedSummary::new(&m.surface, cfg), cfg))
    })
}

/// Draw `k` distinct shot documents from `pool`, excluding the target.
/// The draw depends only on the seed and the target id.
pub fn select_shots<'a>(pool: &[&'a Document], target_id: &str, k: usize, seed: u64) -> Vec<&'a Document> {
    let mut candidates: Vec<&'a Document> = pool.iter().copied().filter(|d| d.id != target_id).collect();
    candidates.sort_by(|a, b| a.id.cmp(&b.id));
    let mut rng = substream(seed, &format!("shots/{target_id}"));
    let mut chosen: Vec<&'a Document> = candidates.choose_multiple(&mut rng, k).copied().collect();
    chosen.sort_by(|a, b| a.id.cmp(&b.id));
    chosen
}

fn format_shot(shot: &Shot, cfg: &MatchConfig) -> String {
    let mut named: Vec<(usize, String, u32)> = shot
        .gold
        .iter()
        .filter(|s| s.score >= 1)
        .filter_map(|s| {
            let e = shot.document.entity(&s.entity_id)?;
            Some((e.position, entity_label(e, cfg), s.score))
        })
        .collect();
    named.sort_by(|a, b| b.2.cmp(&a.2).then(a.0.cmp(&b.0)));
    let lines: Vec<String> = named.into_iter().map(|(_, n, s)| format!("{n}: {s}")).collect();
    render(
        prompts::PREDICT_SHOT,
        &[("document", &shot.document.text()), ("entities", &lines.join("\n"))],
    )
}

/// Ask the model for salient entities with 1..5 scores and map the named
/// entities back onto the document. Zero shots means a zero-shot prompt.
pub fn predict_salience_llm(
    gw: &Gateway,
    params: SamplingParams,
    doc: &Document,
    shots: &[Shot],
    seed: u64,
    cfg: &MatchConfig,
) -> Result<Prediction, LlmError> {
    let shot_text: String = shots.iter().map(|s| format_shot(s, cfg)).collect();
    let user = render(prompts::PREDICT_USER, &[("shots", &shot_text), ("document", &doc.text())]);
    let mut req = gw.request(params, prompts::PREDICT_SYSTEM, user);
    req.seed_hint = Some(seed);
    let reply = gw.chat(&req)?;
    let mut pairs = parse_prediction_reply(&reply);
    if pairs.is_empty() {
        let retry = gw.chat(&req.follow_up(&reply, prompts::PREDICT_STRICT))?;
        pairs = parse_prediction_reply(&retry);
        if pairs.is_empty() {
            return Err(LlmError::PredictionUnparseable(doc.id.clone()));
        }
    }

    let mut by_entity: BTreeMap<&str, u32> = BTreeMap::new();
    let mut unresolved = Vec::new();
    for (name, score) in pairs {
        match resolve_entity(doc, &name, cfg) {
            // the first line naming an entity wins
            Some(e) => {
                by_entity.entry(e.id.as_str()).or_insert(score);
            }
            None => unresolved.push(name),
        }
    }
    let scores = doc
        .entities_by_position()
        .into_iter()
        .map(|e| SalienceScore {
            document_id: doc.id.clone(),
            entity_id: e.id.clone(),
            score: by_entity.get(e.id.as_str()).copied().unwrap_or(0),
            n_summaries: SCALE_MAX,
        })
        .collect();
    Ok(Prediction { scores, unresolved })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Mention, Partition, Span, Token};
    use crate::llm::{ResponseCache, ScriptedTransport};
    use std::sync::Arc;

    /// "Albert Einstein met Niels Bohr . Einstein won ."
    fn doc(id: &str) -> Document {
        let words = ["Albert", "Einstein", "met", "Niels", "Bohr", ".", "Einstein", "won", "."];
        let tokens = words
            .iter()
            .enumerate()
            .map(|(i, s)| Token {
                doc_index: i,
                sentence_index: usize::from(i > 5),
                surface: s.to_string(),
            })
            .collect();
        let ent = |id: &str, spans: &[(usize, usize)], pos| Entity {
            id: id.into(),
            entity_type: "person".into(),
            mentions: spans
                .iter()
                .map(|&(s, e)| Mention {
                    entity_id: id.into(),
                    span: Span::new(s, e),
                    surface: words[s..e].join(" "),
                })
                .collect(),
            position: pos,
            gold_score: None,
        };
        Document {
            id: id.into(),
            genre: "news".into(),
            partition: Partition::Dev,
            tokens,
            sentence_count: 2,
            entities: vec![ent("bohr", &[(3, 5)], 2), ent("einstein", &[(0, 2), (6, 7)], 1)],
            summaries: vec![],
        }
    }

    fn predict(replies: Vec<&str>, shots: &[Shot]) -> (Result<Prediction, LlmError>, Vec<crate::llm::ChatRequest>) {
        let script = Arc::new(ScriptedTransport::ok(replies));
        let gw = Gateway::new("mock://", "m", Box::new(script.clone()), ResponseCache::in_memory());
        let r = predict_salience_llm(&gw, SamplingParams::JUDGE, &doc("d"), shots, 7, &MatchConfig::default());
        (r, script.requests())
    }

    fn score_of(p: &Prediction, id: &str) -> u32 {
        p.scores.iter().find(|s| s.entity_id == id).unwrap().score
    }

    #[test]
    fn parse_and_implicit_zero() {
        let (p, _) = predict(vec!["Einstein: 5"], &[]);
        let p = p.unwrap();
        assert_eq!(score_of(&p, "einstein"), 5);
        assert_eq!(score_of(&p, "bohr"), 0);
        assert_eq!(p.scores[0].entity_id, "einstein");
        assert!(p.unresolved.is_empty());
    }

    #[test]
    fn both_named() {
        let (p, _) = predict(vec!["Here you go:\nEinstein: 5\nBohr: 3"], &[]);
        let p = p.unwrap();
        assert_eq!((score_of(&p, "einstein"), score_of(&p, "bohr")), (5, 3));
    }

    #[test]
    fn partial_rule_resolution_and_unresolved() {
        let d = doc("d");
        let cfg = MatchConfig::default();
        // the mention "Niels Bohr" occurs inside the name
        assert_eq!(resolve_entity(&d, "Niels Bohr Institute", &cfg).unwrap().id, "bohr");
        // the mention "Einstein" occurs inside the name
        assert_eq!(resolve_entity(&d, "Professor A. Einstein", &cfg).unwrap().id, "einstein");
        assert_eq!(resolve_entity(&d, "Bohr", &cfg).unwrap().id, "bohr");
        assert_eq!(resolve_entity(&d, "the Einstein", &cfg).unwrap().id, "einstein");
        let (p, _) = predict(vec!["Atlantis: 4\nBohr: 2"], &[]);
        let p = p.unwrap();
        assert_eq!(p.unresolved, ["Atlantis"]);
        assert_eq!(score_of(&p, "bohr"), 2);
    }

    #[test]
    fn reply_formats() {
        let got = parse_prediction_reply("1. **Einstein**: 5\n- Bohr: 3/5\n* Paris : 2.\nnoise\nX: 9");
        assert_eq!(
            got,
            [("Einstein".to_string(), 5), ("Bohr".to_string(), 3), ("Paris".to_string(), 2)]
        );
    }

    #[test]
    fn unparseable_twice_is_an_error() {
        let (r, reqs) = predict(vec!["I cannot", "still cannot"], &[]);
        assert!(matches!(r, Err(LlmError::PredictionUnparseable(_))));
        assert_eq!(reqs.len(), 2);
        let (r, _) = predict(vec!["I cannot", "Bohr: 4"], &[]);
        assert_eq!(score_of(&r.unwrap(), "bohr"), 4);
    }

    #[test]
    fn shots_appear_in_prompt() {
        let shot_doc = doc("shot");
        let gold = vec![
            SalienceScore {
                document_id: "shot".into(),
                entity_id: "einstein".into(),
                score: 4,
                n_summaries: 5,
            },
            SalienceScore {
                document_id: "shot".into(),
                entity_id: "bohr".into(),
                score: 0,
                n_summaries: 5,
            },
        ];
        let (_, reqs) = predict(vec!["Einstein: 5"], &[Shot { document: &shot_doc, gold: &gold }]);
        let prompt = &reqs[0].user_prompt;
        assert!(prompt.contains("Albert Einstein: 4"));
        assert!(!prompt.contains("Bohr: 0"));
        assert_eq!(reqs[0].seed_hint, Some(7));
    }

    #[test]
    fn shot_selection_is_seeded() {
        let docs: Vec<Document> = (0..8).map(|i| doc(&format!("d{i}"))).collect();
        let pool: Vec<&Document> = docs.iter().collect();
        let a = select_shots(&pool, "d3", 3, 7);
        let b = select_shots(&pool, "d3", 3, 7);
        assert_eq!(a.iter().map(|d| &d.id).collect::<Vec<_>>(), b.iter().map(|d| &d.id).collect::<Vec<_>>());
        assert_eq!(a.len(), 3);
        assert!(a.iter().all(|d| d.id != "d3"));
        let differs = (0..20).any(|s| {
            select_shots(&pool, "d3", 3, s).iter().map(|d| &d.id).collect::<Vec<_>>()
                != a.iter().map(|d| &d.id).collect::<Vec<_>>()
        });
        assert!(differs);
        // pool order does not matter
        let rev: Vec<&Document> = docs.iter().rev().collect();
        assert_eq!(
            select_shots(&rev, "d3", 3, 7).iter().map(|d| &d.id).collect::<Vec<_>>(),
            a.iter().map(|d| &d.id).collect::<Vec<_>>()
        );
    }
}
