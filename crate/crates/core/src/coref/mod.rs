//! Coreference-based alignment: a summary is appended to its document,
//! an external resolver clusters mentions over the joined token stream, and
//! an entity is aligned when a cluster touches both one of its mentions and
//! the summary.

mod mock;
mod sidecar;

use serde::{Deserialize, Serialize};

pub use mock::MockResolver;
pub use sidecar::{SidecarRequest, SidecarResolver, SidecarResponse, DEFAULT_TIMEOUT};

use crate::alignment::{AlignmentRecord, Method};
use crate::corpus::{Document, Span, Summary};
use crate::text;

/// Placed between document and summary; chosen to be out of vocabulary so a
/// resolver cannot link across it lexically.
pub const SEPARATOR: &str = "<<SAGE_SEP>>";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorefCluster {
    pub spans: Vec<Span>,
}

#[derive(Debug, thiserror::Error)]
pub enum CorefError {
    #[error("cannot start coreference sidecar `{command}`: {message}")]
    Spawn { command: String, message: String },
    #[error("coreference sidecar I/O: {0}")]
    Io(String),
    #[error("coreference sidecar did not answer within {0} s")]
    Timeout(u64),
    #[error("coreference sidecar protocol violation: {0}")]
    Protocol(String),
    #[error("coreference sidecar reported: {0}")]
    Sidecar(String),
    #[error("invalid cluster {cluster}: {message}")]
    InvalidCluster { cluster: usize, message: String },
}

/// Produces coreference clusters over a token sequence.
pub trait Resolver: Send + Sync {
    fn resolve(&self, tokens: &[String]) -> Result<Vec<CorefCluster>, CorefError>;
}

/// Spans in bounds and non-empty; no span repeated within a cluster.
pub fn check_clusters(clusters: &[CorefCluster], n_tokens: usize) -> Result<(), CorefError> {
    for (c, cluster) in clusters.iter().enumerate() {
        let bad = |message: String| CorefError::InvalidCluster { cluster: c, message };
        for (i, s) in cluster.spans.iter().enumerate() {
            if s.start >= s.end || s.end > n_tokens {
                return Err(bad(format!("span [{}, {}) invalid for {n_tokens} tokens", s.start, s.end)));
            }
            if cluster.spans[..i].contains(s) {
                return Err(bad(format!("span [{}, {}) repeated", s.start, s.end)));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConcatOrder {
    #[default]
    DocumentFirst,
    SummaryFirst,
}

/// Where the document and the summary sit in the joined token stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConcatLayout {
    pub order: ConcatOrder,
    pub doc_token_count: usize,
    pub summary_token_count: usize,
    pub separator_len: usize,
    pub doc_offset: usize,
    pub summary_offset: usize,
}

impl ConcatLayout {
    pub fn new(order: ConcatOrder, doc_token_count: usize, summary_token_count: usize) -> Self {
        let separator_len = 1;
        let (doc_offset, summary_offset) = match order {
            ConcatOrder::DocumentFirst => (0, doc_token_count + separator_len),
            ConcatOrder::SummaryFirst => (summary_token_count + separator_len, 0),
        };
        Self {
            order,
            doc_token_count,
            summary_token_count,
            separator_len,
            doc_offset,
            summary_offset,
        }
    }

    pub fn total(&self) -> usize {
        self.doc_token_count + self.separator_len + self.summary_token_count
    }

    /// A document span in joined coordinates.
    pub fn doc_span(&self, span: Span) -> Span {
        span.shift(self.doc_offset)
    }

    /// Joined index of summary token `i`.
    pub fn concat_index(&self, i: usize) -> Option<usize> {
        (i < self.summary_token_count).then_some(self.summary_offset + i)
    }

    /// Summary token index of joined index `j`, if `j` falls in the summary.
    pub fn summary_index(&self, j: usize) -> Option<usize> {
        j.checked_sub(self.summary_offset)
            .filter(|&i| i < self.summary_token_count)
    }

    pub fn touches_summary(&self, span: &Span) -> bool {
        (span.start..span.end).any(|j| self.summary_index(j).is_some())
    }
}

/// Join document and summary tokens around [`SEPARATOR`].
pub fn concatenate(doc_tokens: &[String], summary_tokens: &[String], order: ConcatOrder) -> (Vec<String>, ConcatLayout) {
    let layout = ConcatLayout::new(order, doc_tokens.len(), summary_tokens.len());
    let (first, second) = match order {
        ConcatOrder::DocumentFirst => (doc_tokens, summary_tokens),
        ConcatOrder::SummaryFirst => (summary_tokens, doc_tokens),
    };
    let mut tokens = Vec::with_capacity(layout.total());
    tokens.extend_from_slice(first);
    tokens.push(SEPARATOR.to_owned());
    tokens.extend_from_slice(second);
    (tokens, layout)
}

/// One `coref` record per entity, in position order. An entity is aligned
/// when some cluster has a span overlapping one of its mentions and a span
/// inside the summary.
pub fn align_coref(
    doc: &Document,
    summary: &Summary,
    resolver: &dyn Resolver,
    order: ConcatOrder,
) -> Result<Vec<AlignmentRecord>, CorefError> {
    let summary_tokens = text::tokenize(&summary.text);
    let (tokens, layout) = concatenate(&doc.token_surfaces(), &summary_tokens, order);
    let clusters = resolver.resolve(&tokens)?;
    check_clusters(&clusters, tokens.len())?;
    let linked: Vec<&CorefCluster> = clusters
        .iter()
        .filter(|c| c.spans.iter().any(|s| layout.touches_summary(s)))
        .collect();
    Ok(doc
        .entities_by_position()
        .into_iter()
        .map(|e| {
            let hit = linked.iter().any(|c| {
                c.spans
                    .iter()
                    .any(|s| e.mentions.iter().any(|m| layout.doc_span(m.span).overlaps(s)))
            });
            AlignmentRecord::new(&doc.id, &e.id, &summary.id, Method::Coref, hit)
        })
        .collect())
}
