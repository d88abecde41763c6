use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    join_surface, validate_document, Corpus, Document, Entity, Mention, Partition, Span, Summary, SummarySource,
    Token, Violation, Vocabulary,
};
use crate::alignment::{self, Method};
use crate::salience;

/// Optional file of human-corrected alignment records inside a corpus directory.
pub const MANUAL_ALIGNMENTS_FILE: &str = "alignments.manual.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: malformed JSON: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("document `{document}`: field `{field}`: {message}")]
    Field { document: String, field: String, message: String },
    #[error("document `{document}`: entity `{entity}` mention [{start},{end}) out of bounds for {len} tokens")]
    SpanOutOfBounds { document: String, entity: String, start: usize, end: usize, len: usize },
    #[error("document `{document}` failed validation: {}", join_violations(.violations))]
    Invalid { document: String, violations: Vec<Violation> },
    #[error("duplicate document id `{0}`")]
    DuplicateDocument(String),
    #[error("{path}: {message}")]
    ManualRecords { path: String, message: String },
    #[error("document `{document}`: gold scores inconsistent with manual alignments: {message}")]
    GoldMismatch { document: String, message: String },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawToken {
    s: String,
    sent: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntity {
    id: String,
    #[serde(rename = "type")]
    entity_type: String,
    mentions: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gold_score: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSummary {
    id: String,
    source: String,
    text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    id: String,
    genre: String,
    partition: String,
    tokens: Vec<RawToken>,
    entities: Vec<RawEntity>,
    summaries: Vec<RawSummary>,
}

fn field_err(doc: &str, field: &str, message: impl Into<String>) -> CorpusError {
    CorpusError::Field {
        document: doc.to_owned(),
        field: field.to_owned(),
        message: message.into(),
    }
}

fn from_raw(raw: RawDocument, vocab: &Vocabulary) -> Result<Document, CorpusError> {
    let partition: Partition = raw.partition.parse().map_err(|m: String| field_err(&raw.id, "partition", m))?;
    let tokens: Vec<Token> = raw
        .tokens
        .into_iter()
        .enumerate()
        .map(|(i, t)| Token {
            doc_index: i,
            sentence_index: t.sent,
            surface: t.s,
        })
        .collect();
    let sentence_count = tokens.iter().map(|t| t.sentence_index + 1).max().unwrap_or(0);

    let mut entities = Vec::with_capacity(raw.entities.len());
    for e in raw.entities {
        let mut mentions = Vec::with_capacity(e.mentions.len());
        for [start, end] in e.mentions {
            if start >= end || end > tokens.len() {
                return Err(CorpusError::SpanOutOfBounds {
                    document: raw.id.clone(),
                    entity: e.id.clone(),
                    start,
                    end,
                    len: tokens.len(),
                });
            }
            mentions.push(Mention {
                entity_id: e.id.clone(),
                span: Span::new(start, end),
                surface: join_surface(&tokens[start..end]),
            });
        }
        mentions.sort_by_key(|m| (m.span.start, m.span.end));
        entities.push(Entity {
            id: e.id,
            entity_type: e.entity_type,
            mentions,
            position: 0,
            gold_score: e.gold_score,
        });
    }
    assign_positions(&mut entities);

    let mut summaries = Vec::with_capacity(raw.summaries.len());
    for s in raw.summaries {
        let source: SummarySource = s
            .source
            .parse()
            .map_err(|m: String| field_err(&raw.id, &format!("summaries[{}].source", s.id), m))?;
        summaries.push(Summary::new(s.id, source, s.text));
    }

    let doc = Document {
        id: raw.id,
        genre: raw.genre,
        partition,
        tokens,
        sentence_count,
        entities,
        summaries,
    };
    let violations = validate_document(&doc, vocab);
    if !violations.is_empty() {
        return Err(CorpusError::Invalid {
            document: doc.id,
            violations,
        });
    }
    Ok(doc)
}

/// Positions follow first-mention order; ties keep file order. Entities
/// without mentions sort last (validation rejects them anyway).
fn assign_positions(entities: &mut [Entity]) {
    let mut order: Vec<usize> = (0..entities.len()).collect();
    order.sort_by_key(|&i| (entities[i].first_mention().map_or(usize::MAX, |m| m.span.start), i));
    for (rank, i) in order.into_iter().enumerate() {
        entities[i].position = rank + 1;
    }
}

fn to_raw(doc: &Document) -> RawDocument {
    RawDocument {
        id: doc.id.clone(),
        genre: doc.genre.clone(),
        partition: serde_json::to_value(doc.partition)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default(),
        tokens: doc
            .tokens
            .iter()
            .map(|t| RawToken {
                s: t.surface.clone(),
                sent: t.sentence_index,
            })
            .collect(),
        entities: doc
            .entities
            .iter()
            .map(|e| RawEntity {
                id: e.id.clone(),
                entity_type: e.entity_type.clone(),
                mentions: e.mentions.iter().map(|m| m.span.into()).collect(),
                gold_score: e.gold_score,
            })
            .collect(),
        summaries: doc
            .summaries
            .iter()
            .map(|s| RawSummary {
                id: s.id.clone(),
                source: s.source.to_string(),
                text: s.text.clone(),
            })
            .collect(),
    }
}

/// Parse and validate one document from its JSON text.
pub fn document_from_json(text: &str, vocab: &Vocabulary) -> Result<Document, CorpusError> {
    let raw: RawDocument = serde_json::from_str(text).map_err(|source| CorpusError::Json {
        path: "<input>".into(),
        source,
    })?;
    from_raw(raw, vocab)
}

/// Canonical JSON form of a document (pretty-printed, mentions sorted by start).
pub fn document_to_json(doc: &Document) -> String {
    let mut s = serde_json::to_string_pretty(&to_raw(doc)).expect("document serializes");
    s.push('\n');
    s
}

fn read(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn load_file(path: &Path, vocab: &Vocabulary) -> Result<Document, CorpusError> {
    let text = read(path)?;
    let raw: RawDocument = serde_json::from_str(&text).map_err(|source| CorpusError::Json {
        path: path.display().to_string(),
        source,
    })?;
    from_raw(raw, vocab)
}

/// Load a corpus from a directory of `*.json` documents (plus an optional
/// [`MANUAL_ALIGNMENTS_FILE`]) or from a single document file.
pub fn load_corpus(path: &Path, vocab: &Vocabulary) -> Result<Corpus, CorpusError> {
    let meta = fs::metadata(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut documents = Vec::new();
    let mut manual = Vec::new();
    if meta.is_dir() {
        let mut files: Vec<_> = fs::read_dir(path)
            .map_err(|source| CorpusError::Io {
                path: path.display().to_string(),
                source,
            })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        for f in files {
            documents.push(load_file(&f, vocab)?);
        }
        let manual_path = path.join(MANUAL_ALIGNMENTS_FILE);
        if manual_path.is_file() {
            manual = alignment::read_jsonl(&manual_path).map_err(|e| CorpusError::ManualRecords {
                path: manual_path.display().to_string(),
                message: e.to_string(),
            })?;
            if let Some(bad) = manual.iter().find(|r| r.method != Method::Manual) {
                return Err(CorpusError::ManualRecords {
                    path: manual_path.display().to_string(),
                    message: format!("record with method `{}` in manual file", bad.method),
                });
            }
        }
    } else {
        documents.push(load_file(path, vocab)?);
    }

    documents.sort_by(|a, b| a.id.cmp(&b.id));
    if let Some(w) = documents.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(CorpusError::DuplicateDocument(w[0].id.clone()));
    }

    let mut by_doc: BTreeMap<&str, Vec<_>> = BTreeMap::new();
    for r in &manual {
        by_doc.entry(r.document_id.as_str()).or_default().push(r.clone());
    }
    for (doc_id, records) in &by_doc {
        let doc = documents
            .iter()
            .find(|d| d.id == *doc_id)
            .ok_or_else(|| CorpusError::ManualRecords {
                path: MANUAL_ALIGNMENTS_FILE.into(),
                message: format!("records for unknown document `{doc_id}`"),
            })?;
        salience::gold_scores(doc, records).map_err(|e| CorpusError::GoldMismatch {
            document: doc.id.clone(),
            message: e.to_string(),
        })?;
    }

    Ok(Corpus {
        documents,
        manual,
        vocabulary: vocab.clone(),
    })
}
