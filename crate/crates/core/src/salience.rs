//! Graded salience scores: count of summaries that mention an entity.
//!
//! Also hosts the sentence-position baseline and gold-score assembly from
//! manual alignments.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use crate::alignment::{AlignmentRecord, Method};
use crate::corpus::Document;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SalienceScore {
    pub document_id: String,
    pub entity_id: String,
    pub score: u32,
    pub n_summaries: u32,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SalienceError {
    #[error("duplicate record for entity `{entity}` and summary `{summary}`")]
    DuplicatePair { entity: String, summary: String },
    #[error("records mix methods `{0}` and `{1}`")]
    MixedMethods(Method, Method),
    #[error("record for document `{found}` while scoring `{expected}`")]
    WrongDocument { expected: String, found: String },
    #[error("record references unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("record references unknown summary `{0}`")]
    UnknownSummary(String),
    #[error("records span {found} summaries but the document has {n}")]
    TooManySummaries { found: usize, n: usize },
    #[error("no manual alignment records for summary `{0}`")]
    MissingSummary(String),
    #[error("no manual alignment record for entity `{entity}` in summary `{summary}`")]
    MissingPair { entity: String, summary: String },
    #[error("entity `{entity}`: stored gold score {stored} but manual alignments give {aggregate}")]
    GoldMismatch { entity: String, stored: u32, aggregate: u32 },
    #[error("gold scores need `manual` records, got `{0}`")]
    NotManual(Method),
    #[error("invalid segment table: {0}")]
    InvalidTable(String),
}

/// Count positively labelled summaries per entity.
///
/// `records` must come from one document and one method, with at most one
/// record per (entity, summary). Entities without a positive record score 0.
/// Output follows the order of `entity_ids`.
pub fn aggregate(
    document_id: &str,
    entity_ids: &[String],
    n_summaries: usize,
    records: &[AlignmentRecord],
) -> Result<Vec<SalienceScore>, SalienceError> {
    let known: HashSet<&str> = entity_ids.iter().map(String::as_str).collect();
    let mut seen = HashSet::new();
    let mut summaries = BTreeSet::new();
    let mut counts: BTreeMap<&str, u32> = BTreeMap::new();
    let method = records.first().map(|r| r.method);
    for r in records {
        if let Some(m) = method {
            if r.method != m {
                return Err(SalienceError::MixedMethods(m, r.method));
            }
        }
        if r.document_id != document_id {
            return Err(SalienceError::WrongDocument {
                expected: document_id.to_owned(),
                found: r.document_id.clone(),
            });
        }
        if !known.contains(r.entity_id.as_str()) {
            return Err(SalienceError::UnknownEntity(r.entity_id.clone()));
        }
        if !seen.insert((r.entity_id.as_str(), r.summary_id.as_str())) {
            return Err(SalienceError::DuplicatePair {
                entity: r.entity_id.clone(),
                summary: r.summary_id.clone(),
            });
        }
        summaries.insert(r.summary_id.as_str());
        if r.label {
            *counts.entry(r.entity_id.as_str()).or_default() += 1;
        }
    }
    if summaries.len() > n_summaries {
        return Err(SalienceError::TooManySummaries {
            found: summaries.len(),
            n: n_summaries,
        });
    }
    Ok(entity_ids
        .iter()
        .map(|e| SalienceScore {
            document_id: document_id.to_owned(),
            entity_id: e.clone(),
            score: counts.get(e.as_str()).copied().unwrap_or(0),
            n_summaries: n_summaries as u32,
        })
        .collect())
}

fn entity_ids_by_position(doc: &Document) -> Vec<String> {
    doc.entities_by_position().into_iter().map(|e| e.id.clone()).collect()
}

/// [`aggregate`] over a document's entities (position order), additionally
/// rejecting records for summaries the document does not have.
pub fn aggregate_document(doc: &Document, records: &[AlignmentRecord]) -> Result<Vec<SalienceScore>, SalienceError> {
    if let Some(r) = records.iter().find(|r| doc.summary(&r.summary_id).is_none()) {
        return Err(SalienceError::UnknownSummary(r.summary_id.clone()));
    }
    aggregate(&doc.id, &entity_ids_by_position(doc), doc.n_summaries(), records)
}

/// Maps the sentence fraction of an entity's first mention to a score.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentTable {
    entries: Vec<(f64, u32)>,
}

impl Default for SegmentTable {
    /// First 10% of sentences score 5, then 4, 3, 2 for the next three 20%
    /// bands, 1 for the next 10%, and 0 for the last 20%.
    fn default() -> Self {
        Self {
            entries: vec![(0.10, 5), (0.30, 4), (0.50, 3), (0.70, 2), (0.80, 1), (1.00, 0)],
        }
    }
}

impl SegmentTable {
    /// `entries` are (upper bound, score) pairs with strictly increasing
    /// bounds ending at 1.0 and strictly decreasing scores.
    pub fn new(entries: Vec<(f64, u32)>) -> Result<Self, SalienceError> {
        let err = |m: &str| Err(SalienceError::InvalidTable(m.to_owned()));
        if entries.is_empty() {
            return err("empty table");
        }
        if entries.windows(2).any(|w| w[0].0.partial_cmp(&w[1].0) != Some(std::cmp::Ordering::Less)) {
            return err("bounds must be strictly increasing");
        }
        if entries.windows(2).any(|w| w[0].1 <= w[1].1) {
            return err("scores must be strictly decreasing");
        }
        if entries.last().map(|e| e.0) != Some(1.0) {
            return err("final bound must be 1.0");
        }
        if entries[0].0 <= 0.0 {
            return err("bounds must be positive");
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(f64, u32)] {
        &self.entries
    }

    /// Score of the first bound strictly above `fraction`; the final bound
    /// is inclusive.
    pub fn score(&self, fraction: f64) -> u32 {
        self.entries
            .iter()
            .find(|(bound, _)| fraction < *bound)
            .unwrap_or_else(|| self.entries.last().expect("table is non-empty"))
            .1
    }
}

/// Score each entity by the sentence position of its first mention.
pub fn position_baseline(doc: &Document, table: &SegmentTable) -> Vec<SalienceScore> {
    let n = doc.sentence_count.max(1) as f64;
    doc.entities_by_position()
        .into_iter()
        .map(|e| {
            let sentence = doc.first_mention_sentence(e).unwrap_or(0);
            SalienceScore {
                document_id: doc.id.clone(),
                entity_id: e.id.clone(),
                score: table.score(sentence as f64 / n),
                n_summaries: doc.n_summaries() as u32,
            }
        })
        .collect()
}

/// Gold scores from manual records, which must cover every (entity, summary)
/// pair of the document. Stored `gold_score`s are cross-checked.
pub fn gold_scores(doc: &Document, manual: &[AlignmentRecord]) -> Result<Vec<SalienceScore>, SalienceError> {
    if let Some(r) = manual.iter().find(|r| r.method != Method::Manual) {
        return Err(SalienceError::NotManual(r.method));
    }
    let have: HashSet<(&str, &str)> = manual
        .iter()
        .map(|r| (r.entity_id.as_str(), r.summary_id.as_str()))
        .collect();
    for s in &doc.summaries {
        if !manual.iter().any(|r| r.summary_id == s.id) {
            return Err(SalienceError::MissingSummary(s.id.clone()));
        }
        for e in doc.entities_by_position() {
            if !have.contains(&(e.id.as_str(), s.id.as_str())) {
                return Err(SalienceError::MissingPair {
                    entity: e.id.clone(),
                    summary: s.id.clone(),
                });
            }
        }
    }
    let scores = aggregate_document(doc, manual)?;
    for s in &scores {
        let stored = doc.entity(&s.entity_id).and_then(|e| e.gold_score);
        if let Some(stored) = stored {
            if stored != s.score {
                return Err(SalienceError::GoldMismatch {
                    entity: s.entity_id.clone(),
                    stored,
                    aggregate: s.score,
                });
            }
        }
    }
    Ok(scores)
}

/// Gold scores taken from the stored `gold_score` fields, when every entity has one.
pub fn stored_gold_scores(doc: &Document) -> Option<Vec<SalienceScore>> {
    doc.entities_by_position()
        .into_iter()
        .map(|e| {
            e.gold_score.map(|g| SalienceScore {
                document_id: doc.id.clone(),
                entity_id: e.id.clone(),
                score: g,
                n_summaries: doc.n_summaries() as u32,
            })
        })
        .collect()
}

/// One row of a score file.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub document_id: String,
    pub entity_id: String,
    pub method: String,
    pub score: f64,
}

pub const SCORE_TSV_HEADER: &str = "document_id\tentity_id\tmethod\tscore";

/// TSV with header; integral scores print without a decimal point.
pub fn scores_to_tsv(method: &str, scores: &[SalienceScore]) -> String {
    let mut out = String::from(SCORE_TSV_HEADER);
    out.push('\n');
    for s in scores {
        let _ = writeln!(out, "{}\t{}\t{}\t{}", s.document_id, s.entity_id, method, s.score);
    }
    out
}

pub fn parse_scores_tsv(text: &str) -> Result<Vec<ScoreRow>, String> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || (i == 0 && line == SCORE_TSV_HEADER) {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let [doc, ent, method, score] = cols.as_slice() else {
            return Err(format!("line {}: expected 4 tab-separated columns", i + 1));
        };
        let score: f64 = score
            .trim()
            .parse()
            .map_err(|_| format!("line {}: bad score `{score}`", i + 1))?;
        if !score.is_finite() {
            return Err(format!("line {}: non-finite score", i + 1));
        }
        rows.push(ScoreRow {
            document_id: doc.to_string(),
            entity_id: ent.to_string(),
            method: method.to_string(),
            score,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::document_from_json;

    fn recs(method: Method, rows: &[(&str, &str, bool)]) -> Vec<AlignmentRecord> {
        rows.iter()
            .map(|(e, s, l)| AlignmentRecord::new("d", e, s, method, *l))
            .collect()
    }

    fn ids(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn counts_positive_summaries() {
        let r = recs(
            Method::String,
            &[
                ("a", "s1", true),
                ("a", "s2", true),
                ("a", "s3", true),
                ("a", "s4", true),
                ("a", "s5", true),
                ("b", "s1", true),
                ("b", "s3", true),
                ("b", "s4", true),
                ("b", "s2", false),
            ],
        );
        let scores = aggregate("d", &ids(&["a", "b", "c"]), 5, &r).unwrap();
        let got: Vec<u32> = scores.iter().map(|s| s.score).collect();
        assert_eq!(got, [5, 3, 0]);
    }

    #[test]
    fn rejects_bad_records() {
        let dup = recs(Method::Llm, &[("a", "s1", true), ("a", "s1", false)]);
        assert!(matches!(
            aggregate("d", &ids(&["a"]), 5, &dup),
            Err(SalienceError::DuplicatePair { .. })
        ));
        let mut mixed = recs(Method::Llm, &[("a", "s1", true)]);
        mixed.push(AlignmentRecord::new("d", "a", "s2", Method::Coref, true));
        assert!(matches!(aggregate("d", &ids(&["a"]), 5, &mixed), Err(SalienceError::MixedMethods(..))));
        let many = recs(Method::Llm, &[("a", "s1", true), ("a", "s2", true)]);
        assert!(matches!(
            aggregate("d", &ids(&["a"]), 1, &many),
            Err(SalienceError::TooManySummaries { .. })
        ));
    }

    #[test]
    fn segment_table_validation() {
        assert!(SegmentTable::new(vec![(0.5, 1), (1.0, 0)]).is_ok());
        assert!(SegmentTable::new(vec![(0.5, 1), (0.9, 0)]).is_err());
        assert!(SegmentTable::new(vec![(0.5, 0), (1.0, 1)]).is_err());
        assert!(SegmentTable::new(vec![(0.5, 2), (0.5, 1), (1.0, 0)]).is_err());
    }

    fn doc_with_sentences(n: usize, first_sentences: &[usize]) -> Document {
        let tokens: Vec<_> = (0..n)
            .map(|i| serde_json::json!({"s": format!("w{i}"), "sent": i}))
            .collect();
        let entities: Vec<_> = first_sentences
            .iter()
            .enumerate()
            .map(|(k, &s)| serde_json::json!({"id": format!("e{k}"), "type": "object", "mentions": [[s, s + 1]]}))
            .collect();
        document_from_json(
            &serde_json::json!({
                "id": "d", "genre": "news", "partition": "test", "tokens": tokens,
                "entities": entities,
                "summaries": [{"id": "s1", "source": "human", "text": "x"}]
            })
            .to_string(),
            &Default::default(),
        )
        .unwrap()
    }

    #[test]
    fn position_baseline_examples() {
        let doc = doc_with_sentences(20, &[0, 19, 8]);
        let by_id: BTreeMap<_, _> = position_baseline(&doc, &SegmentTable::default())
            .into_iter()
            .map(|s| (s.entity_id, s.score))
            .collect();
        assert_eq!(by_id["e0"], 5);
        assert_eq!(by_id["e1"], 0);
        assert_eq!(by_id["e2"], 3);
    }

    #[test]
    fn single_sentence_document_scores_five() {
        let doc = document_from_json(
            &serde_json::json!({
                "id": "d", "genre": "news", "partition": "test",
                "tokens": [{"s":"A","sent":0},{"s":"b","sent":0},{"s":"C","sent":0}],
                "entities": [
                    {"id":"a","type":"object","mentions":[[0,1]]},
                    {"id":"c","type":"object","mentions":[[2,3]]}
                ],
                "summaries": [{"id":"s1","source":"human","text":"x"}]
            })
            .to_string(),
            &Default::default(),
        )
        .unwrap();
        assert!(position_baseline(&doc, &SegmentTable::default()).iter().all(|s| s.score == 5));
    }

    fn gold_doc(stored: Option<u32>) -> Document {
        let mut ent = serde_json::json!({"id":"a","type":"object","mentions":[[0,1]]});
        if let Some(g) = stored {
            ent["gold_score"] = g.into();
        }
        let summaries: Vec<_> = (1..=5)
            .map(|i| serde_json::json!({"id": format!("s{i}"), "source": "human", "text": "A"}))
            .collect();
        document_from_json(
            &serde_json::json!({
                "id": "d", "genre": "news", "partition": "dev",
                "tokens": [{"s":"A","sent":0}],
                "entities": [ent], "summaries": summaries
            })
            .to_string(),
            &Default::default(),
        )
        .unwrap()
    }

    #[test]
    fn gold_scores_from_manual() {
        let all: Vec<_> = (1..=5).map(|i| ("a", format!("s{i}"), true)).collect();
        let manual: Vec<_> = all
            .iter()
            .map(|(e, s, l)| AlignmentRecord::new("d", e, s, Method::Manual, *l))
            .collect();
        assert_eq!(gold_scores(&gold_doc(Some(5)), &manual).unwrap()[0].score, 5);

        let missing: Vec<_> = manual.iter().filter(|r| r.summary_id != "s4").cloned().collect();
        assert_eq!(
            gold_scores(&gold_doc(None), &missing),
            Err(SalienceError::MissingSummary("s4".into()))
        );

        let mut two = manual.clone();
        for r in two.iter_mut().skip(2) {
            r.label = false;
        }
        assert!(matches!(
            gold_scores(&gold_doc(Some(3)), &two),
            Err(SalienceError::GoldMismatch { stored: 3, aggregate: 2, .. })
        ));
    }

    #[test]
    fn tsv_round_trip() {
        let scores = vec![SalienceScore {
            document_id: "d".into(),
            entity_id: "e".into(),
            score: 4,
            n_summaries: 5,
        }];
        let tsv = scores_to_tsv("baseline", &scores);
        assert_eq!(tsv, "document_id\tentity_id\tmethod\tscore\nd\te\tbaseline\t4\n");
        let rows = parse_scores_tsv(&tsv).unwrap();
        assert_eq!(rows[0].score, 4.0);
        assert!(parse_scores_tsv("a\tb\tc\n").is_err());
    }
}
