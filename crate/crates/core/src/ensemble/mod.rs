//! Logistic-regression fusion of the base aligners.
//!
//! Features per (entity, summary) pair are the three base labels, one-hot
//! entity type and genre, and the entity's position scaled by the number of
//! entities in its document.

mod features;
mod model;

pub use features::{fingerprint_of, FeatureSchema, FeatureVector, LabelIndex};
pub use model::{nll_and_gradient, sigmoid, train, LogRegModel, TrainParams, TrainSummary, DEFAULT_THRESHOLD};

use crate::alignment::{AlignmentRecord, Method};
use crate::corpus::Document;

#[derive(Debug, thiserror::Error)]
pub enum EnsembleError {
    #[error("no {method} label for entity {entity} in summary {summary} of {document}")]
    MissingLabel {
        method: Method,
        document: String,
        entity: String,
        summary: String,
    },
    #[error("genre `{0}` is not in the vocabulary")]
    UnknownGenre(String),
    #[error("entity type `{0}` is not in the vocabulary")]
    UnknownType(String),
    #[error("raw schemas have no vocabulary to extract features with")]
    RawSchema,
    #[error("expected {expected} features, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("model schema {model} does not match feature schema {features}")]
    SchemaMismatch { model: String, features: String },
    #[error("no training examples")]
    NoExamples,
    #[error("every training example has label {0}; need both classes")]
    SingleClass(bool),
    #[error("loss became non-finite after {0} iterations")]
    NonFiniteLoss(usize),
    #[error("invalid hyperparameters: {0}")]
    BadParams(String),
    #[error("no manual label for entity {entity} in summary {summary} of {document}")]
    MissingGold {
        document: String,
        entity: String,
        summary: String,
    },
    #[error("model file {path}: {message}")]
    Io { path: String, message: String },
}

/// Training pairs for one document: features from the base labels, targets
/// from the manual labels.
pub fn document_examples(
    doc: &Document,
    schema: &FeatureSchema,
    base: &LabelIndex,
    manual: &[AlignmentRecord],
) -> Result<Vec<(FeatureVector, bool)>, EnsembleError> {
    let gold: std::collections::HashMap<(&str, &str), bool> = manual
        .iter()
        .filter(|r| r.method == Method::Manual && r.document_id == doc.id)
        .map(|r| ((r.entity_id.as_str(), r.summary_id.as_str()), r.label))
        .collect();
    let mut out = Vec::new();
    for s in &doc.summaries {
        for e in doc.entities_by_position() {
            let y = *gold.get(&(e.id.as_str(), s.id.as_str())).ok_or_else(|| EnsembleError::MissingGold {
                document: doc.id.clone(),
                entity: e.id.clone(),
                summary: s.id.clone(),
            })?;
            let labels = base.get(&doc.id, &e.id, &s.id)?;
            out.push((schema.extract(doc, e, labels)?, y));
        }
    }
    Ok(out)
}

/// Ensemble records for every (entity, summary) pair of a document, summary
/// by summary, entities in position order.
pub fn align_ensemble(
    doc: &Document,
    schema: &FeatureSchema,
    base: &LabelIndex,
    model: &LogRegModel,
) -> Result<Vec<AlignmentRecord>, EnsembleError> {
    let mut out = Vec::new();
    for s in &doc.summaries {
        for e in doc.entities_by_position() {
            let fv = schema.extract(doc, e, base.get(&doc.id, &e.id, &s.id)?)?;
            let p = model.predict(&fv)?;
            out.push(AlignmentRecord::ensemble(&doc.id, &e.id, &s.id, p, model.threshold));
        }
    }
    Ok(out)
}
