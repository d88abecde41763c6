//! Documents, entities, mentions and summaries.
//!
//! A [`Corpus`] is immutable once loaded. Documents carry their own
//! tokenization; nothing here re-tokenizes document text.

mod load;
mod stats;
mod validate;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::alignment::AlignmentRecord;

pub use load::{document_from_json, document_to_json, load_corpus, CorpusError, MANUAL_ALIGNMENTS_FILE};
pub use stats::{corpus_stats, StatsRow, StatsTable};
pub use validate::{validate_document, Violation};

/// Generated summaries may not exceed this many characters.
pub const MAX_SUMMARY_CHARS: usize = 380;

pub const DEFAULT_ENTITY_TYPES: [&str; 10] = [
    "abstract",
    "animal",
    "event",
    "object",
    "organization",
    "person",
    "place",
    "plant",
    "substance",
    "time",
];

pub const DEFAULT_GENRES: [&str; 12] = [
    "academic",
    "bio",
    "conversation",
    "fiction",
    "interview",
    "news",
    "reddit",
    "speech",
    "textbook",
    "vlog",
    "voyage",
    "wikihow",
];

/// The active entity-type and genre enumerations. Order matters: it fixes
/// the one-hot layout of ensemble features.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub entity_types: Vec<String>,
    pub genres: Vec<String>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self {
            entity_types: DEFAULT_ENTITY_TYPES.iter().map(|s| s.to_string()).collect(),
            genres: DEFAULT_GENRES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl Vocabulary {
    pub fn from_json_file(path: &Path) -> Result<Self, CorpusError> {
        let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| CorpusError::Json {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn type_index(&self, t: &str) -> Option<usize> {
        self.entity_types.iter().position(|x| x == t)
    }

    pub fn genre_index(&self, g: &str) -> Option<usize> {
        self.genres.iter().position(|x| x == g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Train,
    Dev,
    Test,
}

impl FromStr for Partition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Partition::Train),
            "dev" => Ok(Partition::Dev),
            "test" => Ok(Partition::Test),
            other => Err(format!("unknown partition `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub doc_index: usize,
    pub sentence_index: usize,
    pub surface: String,
}

/// Half-open token interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn shift(&self, by: usize) -> Span {
        Span::new(self.start + by, self.end + by)
    }
}

impl From<[usize; 2]> for Span {
    fn from([start, end]: [usize; 2]) -> Self {
        Span { start, end }
    }
}

impl From<Span> for [usize; 2] {
    fn from(s: Span) -> Self {
        [s.start, s.end]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mention {
    pub entity_id: String,
    pub span: Span,
    pub surface: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    pub id: String,
    pub entity_type: String,
    /// Sorted by span start.
    pub mentions: Vec<Mention>,
    /// 1-based order of first mention among all entities of the document.
    pub position: usize,
    pub gold_score: Option<u32>,
}

impl Entity {
    pub fn first_mention(&self) -> Option<&Mention> {
        self.mentions.first()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SummarySource {
    Human,
    Model(String),
}

impl SummarySource {
    pub fn is_model(&self) -> bool {
        matches!(self, SummarySource::Model(_))
    }
}

impl fmt::Display for SummarySource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SummarySource::Human => f.write_str("human"),
            SummarySource::Model(name) => write!(f, "model:{name}"),
        }
    }
}

impl FromStr for SummarySource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "human" => Ok(SummarySource::Human),
            Some(("model", name)) if !name.is_empty() => Ok(SummarySource::Model(name.to_owned())),
            _ => Err(format!("summary source must be `human` or `model:<name>`, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Summary {
    pub id: String,
    pub source: SummarySource,
    pub text: String,
    pub char_len: usize,
}

impl Summary {
    pub fn new(id: impl Into<String>, source: SummarySource, text: impl Into<String>) -> Self {
        let text = text.into();
        Self {
            id: id.into(),
            source,
            char_len: text.chars().count(),
            text,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub genre: String,
    pub partition: Partition,
    pub tokens: Vec<Token>,
    pub sentence_count: usize,
    /// In file order; see [`Entity::position`] for reading order.
    pub entities: Vec<Entity>,
    pub summaries: Vec<Summary>,
}

impl Document {
    pub fn n_summaries(&self) -> usize {
        self.summaries.len()
    }

    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.entities.iter().find(|e| e.id == id)
    }

    pub fn summary(&self, id: &str) -> Option<&Summary> {
        self.summaries.iter().find(|s| s.id == id)
    }

    /// Entities sorted by position.
    pub fn entities_by_position(&self) -> Vec<&Entity> {
        let mut v: Vec<&Entity> = self.entities.iter().collect();
        v.sort_by_key(|e| e.position);
        v
    }

    pub fn token_surfaces(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.surface.clone()).collect()
    }

    pub fn span_tokens(&self, span: Span) -> &[Token] {
        &self.tokens[span.start.min(self.tokens.len())..span.end.min(self.tokens.len())]
    }

    /// Full text, tokens joined by single spaces.
    pub fn text(&self) -> String {
        self.tokens.iter().map(|t| t.surface.as_str()).collect::<Vec<_>>().join(" ")
    }

    /// Sentence index of an entity's first mention.
    pub fn first_mention_sentence(&self, entity: &Entity) -> Option<usize> {
        let m = entity.first_mention()?;
        self.tokens.get(m.span.start).map(|t| t.sentence_index)
    }

    /// Whether the entity's first mention lies in the first half of the
    /// document's sentences.
    pub fn first_mention_in_first_half(&self, entity: &Entity) -> Option<bool> {
        let s = self.first_mention_sentence(entity)?;
        Some((s as f64) / (self.sentence_count.max(1) as f64) < 0.5)
    }
}

/// Surface of a span, single-space joined.
pub fn join_surface(tokens: &[Token]) -> String {
    tokens.iter().map(|t| t.surface.as_str()).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    /// Sorted by id.
    pub documents: Vec<Document>,
    /// Human-corrected alignments (`method = manual`), if shipped with the corpus.
    pub manual: Vec<AlignmentRecord>,
    pub vocabulary: Vocabulary,
}

impl Corpus {
    pub fn document(&self, id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.id == id)
    }

    pub fn manual_for(&self, document_id: &str) -> Vec<AlignmentRecord> {
        self.manual.iter().filter(|r| r.document_id == document_id).cloned().collect()
    }

    pub fn partition(&self, p: Partition) -> impl Iterator<Item = &Document> {
        self.documents.iter().filter(move |d| d.partition == p)
    }
}
