//! Alignment records: one binary judgment per (entity, summary, method).

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Which aligner produced a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    String,
    Coref,
    Llm,
    Ensemble,
    Manual,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::String, Method::Coref, Method::Llm, Method::Ensemble, Method::Manual];

    /// The three base aligners whose labels feed the ensemble.
    pub const BASE: [Method; 3] = [Method::String, Method::Coref, Method::Llm];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::String => "string",
            Method::Coref => "coref",
            Method::Llm => "llm",
            Method::Ensemble => "ensemble",
            Method::Manual => "manual",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown alignment method `{s}`"))
    }
}

/// Identifies the (entity, summary) pair a record judges.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RecordKey {
    pub document_id: String,
    pub entity_id: String,
    pub summary_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlignmentRecord {
    pub document_id: String,
    pub entity_id: String,
    pub summary_id: String,
    pub method: Method,
    pub label: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probability: Option<f64>,
}

impl AlignmentRecord {
    pub fn new(document_id: &str, entity_id: &str, summary_id: &str, method: Method, label: bool) -> Self {
        Self {
            document_id: document_id.to_owned(),
            entity_id: entity_id.to_owned(),
            summary_id: summary_id.to_owned(),
            method,
            label,
            probability: None,
        }
    }

    /// Ensemble record; the label is `probability >= threshold`.
    pub fn ensemble(document_id: &str, entity_id: &str, summary_id: &str, probability: f64, threshold: f64) -> Self {
        Self {
            probability: Some(probability),
            ..Self::new(document_id, entity_id, summary_id, Method::Ensemble, probability >= threshold)
        }
    }

    pub fn key(&self) -> RecordKey {
        RecordKey {
            document_id: self.document_id.clone(),
            entity_id: self.entity_id.clone(),
            summary_id: self.summary_id.clone(),
        }
    }

    /// Checks the probability/method/label invariants.
    pub fn check(&self, threshold: f64) -> Result<(), String> {
        match (self.method, self.probability) {
            (Method::Ensemble, None) => Err("ensemble record without probability".into()),
            (Method::Ensemble, Some(p)) => {
                if !(0.0..=1.0).contains(&p) {
                    Err(format!("probability {p} outside [0,1]"))
                } else if self.label != (p >= threshold) {
                    Err(format!("label {} inconsistent with probability {p}", self.label))
                } else {
                    Ok(())
                }
            }
            (m, Some(_)) => Err(format!("probability present on {m} record")),
            (_, None) => Ok(()),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RecordIoError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}:{line}: {source}")]
    Parse { path: String, line: usize, source: serde_json::Error },
}

/// Render records as JSON lines (trailing newline after each record).
pub fn to_jsonl(records: &[AlignmentRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// Write `contents` to `path` through a sibling temp file and rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

pub fn write_jsonl(path: &Path, records: &[AlignmentRecord]) -> io::Result<()> {
    write_atomic(path, to_jsonl(records).as_bytes())
}

pub fn read_jsonl(path: &Path) -> Result<Vec<AlignmentRecord>, RecordIoError> {
    let display = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| RecordIoError::Io { path: display.clone(), source })?;
    parse_jsonl(&text).map_err(|(line, source)| RecordIoError::Parse { path: display, line, source })
}

pub fn parse_jsonl(text: &str) -> Result<Vec<AlignmentRecord>, (usize, serde_json::Error)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| (i + 1, e)))
        .collect()
}
