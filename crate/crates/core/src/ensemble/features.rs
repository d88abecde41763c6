use std::collections::HashMap;

use sha2::{Digest, Sha256};

use super::EnsembleError;
use crate::alignment::{AlignmentRecord, Method, RecordKey};
use crate::corpus::{Document, Entity, Vocabulary};

/// Ordered feature names plus a short hash of them. Models remember the
/// fingerprint of the layout they were trained on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSchema {
    names: Vec<String>,
    fingerprint: String,
    vocabulary: Option<Vocabulary>,
}

pub fn fingerprint_of(names: &[String]) -> String {
    let mut h = Sha256::new();
    for n in names {
        h.update(n.as_bytes());
        h.update(b"\n");
    }
    hex::encode(&h.finalize()[..8])
}

impl FeatureSchema {
    /// Three aligner labels, entity-type one-hot, genre one-hot, scaled position.
    pub fn new(vocabulary: &Vocabulary) -> Self {
        let mut names: Vec<String> = Method::BASE.iter().map(|m| m.as_str().to_owned()).collect();
        names.extend(vocabulary.entity_types.iter().map(|t| format!("type={t}")));
        names.extend(vocabulary.genres.iter().map(|g| format!("genre={g}")));
        names.push("position".to_owned());
        Self {
            fingerprint: fingerprint_of(&names),
            names,
            vocabulary: Some(vocabulary.clone()),
        }
    }

    /// Unnamed dense features `x0..x{dim-1}`, for models fit outside the pipeline.
    pub fn raw(dim: usize) -> Self {
        let names: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
        Self {
            fingerprint: fingerprint_of(&names),
            names,
            vocabulary: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn vector(&self, values: Vec<f64>) -> Result<FeatureVector, EnsembleError> {
        if values.len() != self.dim() {
            return Err(EnsembleError::Dimension {
                expected: self.dim(),
                got: values.len(),
            });
        }
        Ok(FeatureVector {
            values,
            fingerprint: self.fingerprint.clone(),
        })
    }

    /// Builds the vector for one (entity, summary) pair.
    pub fn extract(&self, doc: &Document, entity: &Entity, labels: [bool; 3]) -> Result<FeatureVector, EnsembleError> {
        let vocab = self.vocabulary.as_ref().ok_or(EnsembleError::RawSchema)?;
        let t = vocab
            .type_index(&entity.entity_type)
            .ok_or_else(|| EnsembleError::UnknownType(entity.entity_type.clone()))?;
        let g = vocab
            .genre_index(&doc.genre)
            .ok_or_else(|| EnsembleError::UnknownGenre(doc.genre.clone()))?;
        let n_types = vocab.entity_types.len();
        let mut v = vec![0.0; self.dim()];
        for (slot, &l) in v.iter_mut().zip(&labels) {
            *slot = f64::from(u8::from(l));
        }
        v[3 + t] = 1.0;
        v[3 + n_types + g] = 1.0;
        *v.last_mut().expect("non-empty") = entity.position as f64 / doc.entities.len().max(1) as f64;
        self.vector(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub fingerprint: String,
}

/// Base-aligner labels keyed by (document, entity, summary).
#[derive(Debug, Default, Clone)]
pub struct LabelIndex {
    labels: HashMap<RecordKey, [Option<bool>; 3]>,
}

impl LabelIndex {
    /// Indexes string/coref/llm records; other methods are ignored.
    pub fn new<'a>(records: impl IntoIterator<Item = &'a AlignmentRecord>) -> Self {
        let mut labels: HashMap<RecordKey, [Option<bool>; 3]> = HashMap::new();
        for r in records {
            if let Some(slot) = Method::BASE.iter().position(|&m| m == r.method) {
                labels.entry(r.key()).or_default()[slot] = Some(r.label);
            }
        }
        Self { labels }
    }

    pub fn get(&self, document_id: &str, entity_id: &str, summary_id: &str) -> Result<[bool; 3], EnsembleError> {
        let key = RecordKey {
            document_id: document_id.to_owned(),
            entity_id: entity_id.to_owned(),
            summary_id: summary_id.to_owned(),
        };
        let found = self.labels.get(&key).copied().unwrap_or_default();
        let mut out = [false; 3];
        for (i, m) in Method::BASE.iter().enumerate() {
            out[i] = found[i].ok_or_else(|| EnsembleError::MissingLabel {
                method: *m,
                document: key.document_id.clone(),
                entity: key.entity_id.clone(),
                summary: key.summary_id.clone(),
            })?;
        }
        Ok(out)
    }
}
