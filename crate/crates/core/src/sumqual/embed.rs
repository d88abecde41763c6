use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::Duration;

use serde_json::json;
use sha2::{Digest, Sha256};

use crate::llm::{post_json, ResponseCache, TransportError};
use crate::text::lower_words;

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("embedding service: {0}")]
    Transport(#[from] TransportError),
    #[error("embedding service returned {got} vectors for {sent} texts")]
    Count { sent: usize, got: usize },
    #[error("embedding dimension changed from {expected} to {got}")]
    Dimension { expected: usize, got: usize },
    #[error("need at least two summaries, got {0}")]
    TooFew(usize),
    #[error("every pair involved a zero vector")]
    NoComparablePairs,
}

/// Maps texts to fixed-dimension vectors.
pub trait Embedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError>;
}

/// Bag-of-words tf-idf fit on a reference corpus. Raw term counts are
/// weighted by `ln((1 + N) / (1 + df)) + 1`; words outside the fitted
/// vocabulary are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfEmbedder {
    vocab: BTreeMap<String, usize>,
    idf: Vec<f64>,
}

impl TfidfEmbedder {
    pub fn fit<S: AsRef<str>>(corpus: &[S]) -> Self {
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for doc in corpus {
            let uniq: BTreeSet<String> = lower_words(doc.as_ref()).into_iter().collect();
            for w in uniq {
                *df.entry(w).or_insert(0) += 1;
            }
        }
        let n = corpus.len() as f64;
        let idf = df.values().map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0).collect();
        let vocab = df.into_keys().enumerate().map(|(i, w)| (w, i)).collect();
        Self { vocab, idf }
    }

    pub fn dim(&self) -> usize {
        self.idf.len()
    }

    pub fn vector(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        for w in lower_words(text) {
            if let Some(&i) = self.vocab.get(&w) {
                v[i] += self.idf[i];
            }
        }
        v
    }
}

impl Embedder for TfidfEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        Ok(texts.iter().map(|t| self.vector(t)).collect())
    }
}

/// One round trip to an embedding service.
pub trait EmbedBackend: Send + Sync {
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, TransportError>;
}

impl<T: EmbedBackend + ?Sized> EmbedBackend for Arc<T> {
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, TransportError> {
        (**self).embed_batch(texts)
    }
}

/// `POST {"texts": [...]}` answered by `{"vectors": [[...], ...]}`.
pub struct HttpEmbedBackend {
    agent: ureq::Agent,
    url: String,
    api_key: Option<String>,
}

impl HttpEmbedBackend {
    pub fn new(url: &str, api_key: Option<String>, timeout: Duration) -> Self {
        Self {
            agent: ureq::Agent::config_builder().timeout_global(Some(timeout)).build().into(),
            url: url.to_owned(),
            api_key,
        }
    }
}

impl EmbedBackend for HttpEmbedBackend {
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, TransportError> {
        let reply = post_json(&self.agent, &self.url, self.api_key.as_deref(), &json!({ "texts": texts }))?;
        serde_json::from_value(reply["vectors"].clone()).map_err(|e| TransportError::Malformed(format!("vectors: {e}")))
    }
}

/// Remote embeddings with a response cache keyed by endpoint and text.
/// Uncached texts are sent in batches, one request at a time.
pub struct RemoteEmbedder {
    endpoint: String,
    backend: Box<dyn EmbedBackend>,
    cache: ResponseCache,
    batch_size: usize,
}

impl RemoteEmbedder {
    pub fn new(endpoint: &str, backend: Box<dyn EmbedBackend>, cache: ResponseCache, batch_size: usize) -> Self {
        Self {
            endpoint: endpoint.to_owned(),
            backend,
            cache,
            batch_size: batch_size.max(1),
        }
    }

    pub fn cache(&self) -> &ResponseCache {
        &self.cache
    }

    fn key(&self, text: &str) -> String {
        let mut h = Sha256::new();
        h.update(b"embed\0");
        h.update(self.endpoint.as_bytes());
        h.update(b"\0");
        h.update(text.as_bytes());
        hex::encode(h.finalize())
    }
}

impl Embedder for RemoteEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        let mut out: Vec<Option<Vec<f64>>> = texts
            .iter()
            .map(|t| {
                self.cache
                    .get(&self.key(t))
                    .and_then(|s| serde_json::from_str::<Vec<f64>>(&s).ok())
            })
            .collect();
        let missing: Vec<usize> = (0..texts.len()).filter(|&i| out[i].is_none()).collect();
        for chunk in missing.chunks(self.batch_size) {
            let batch: Vec<String> = chunk.iter().map(|&i| texts[i].clone()).collect();
            let vectors = self.backend.embed_batch(&batch)?;
            if vectors.len() != batch.len() {
                return Err(EmbedError::Count {
                    sent: batch.len(),
                    got: vectors.len(),
                });
            }
            for (&i, v) in chunk.iter().zip(vectors) {
                self.cache
                    .insert(&self.key(&texts[i]), &serde_json::to_string(&v).expect("floats serialize"));
                out[i] = Some(v);
            }
        }
        let out: Vec<Vec<f64>> = out.into_iter().map(|v| v.expect("filled")).collect();
        if let Some(first) = out.first() {
            if let Some(bad) = out.iter().find(|v| v.len() != first.len()) {
                return Err(EmbedError::Dimension {
                    expected: first.len(),
                    got: bad.len(),
                });
            }
        }
        Ok(out)
    }
}

/// Cosine similarity; `None` when either vector is all zeros.
pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (na > 0.0 && nb > 0.0).then(|| (dot / (na * nb)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Similarity {
    pub mean: f64,
    pub pairs: usize,
    /// Pairs dropped because one side embedded to a zero vector.
    pub skipped: usize,
}

/// Mean cosine over unordered pairs of summary embeddings.
pub fn pairwise_similarity(summaries: &[String], embedder: &dyn Embedder) -> Result<Similarity, EmbedError> {
    if summaries.len() < 2 {
        return Err(EmbedError::TooFew(summaries.len()));
    }
    let vs = embedder.embed(summaries)?;
    let (mut sum, mut pairs, mut skipped) = (0.0, 0, 0);
    for i in 0..vs.len() {
        for j in i + 1..vs.len() {
            match cosine(&vs[i], &vs[j]) {
                Some(c) => {
                    sum += c;
                    pairs += 1;
                }
                None => skipped += 1,
            }
        }
    }
    if pairs == 0 {
        return Err(EmbedError::NoComparablePairs);
    }
    Ok(Similarity {
        mean: sum / pairs as f64,
        pairs,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn tfidf_hand_built() {
        // corpus: "a b", "a c"; vocab [a, b, c]; df a=2, b=1, c=1; N=2
        let e = TfidfEmbedder::fit(&["a b", "a c"]);
        let ia = (3.0f64 / 3.0).ln() + 1.0;
        let ib = (3.0f64 / 2.0).ln() + 1.0;
        assert_eq!(e.vector("A b b z"), vec![ia, 2.0 * ib, 0.0]);
    }

    #[test]
    fn similarity_identical_and_orthogonal() {
        let same = strings(&["x y", "x y", "x y"]);
        let s = pairwise_similarity(&same, &TfidfEmbedder::fit(&same)).unwrap();
        assert!((s.mean - 1.0).abs() < 1e-12 && s.pairs == 3);
        let orth = strings(&["x", "y"]);
        assert_eq!(pairwise_similarity(&orth, &TfidfEmbedder::fit(&orth)).unwrap().mean, 0.0);
    }

    #[test]
    fn zero_vectors_skipped_and_counted() {
        let fitted = TfidfEmbedder::fit(&["x y"]);
        let s = pairwise_similarity(&strings(&["x", "x y", "unseen"]), &fitted).unwrap();
        assert_eq!((s.pairs, s.skipped), (1, 2));
        assert!(matches!(
            pairwise_similarity(&strings(&["q", "r"]), &fitted),
            Err(EmbedError::NoComparablePairs)
        ));
        assert!(matches!(pairwise_similarity(&strings(&["x"]), &fitted), Err(EmbedError::TooFew(1))));
    }

    struct Counting(AtomicUsize);

    impl EmbedBackend for Counting {
        fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, TransportError> {
            self.0.fetch_add(1, Ordering::SeqCst);
            Ok(texts.iter().map(|t| vec![t.len() as f64, 1.0]).collect())
        }
    }

    #[test]
    fn remote_batches_and_caches() {
        let backend = Arc::new(Counting(AtomicUsize::new(0)));
        let e = RemoteEmbedder::new("http://e", Box::new(backend.clone()), ResponseCache::in_memory(), 2);
        let texts = strings(&["a", "bb", "ccc"]);
        let first = e.embed(&texts).unwrap();
        assert_eq!(first[2], vec![3.0, 1.0]);
        assert_eq!(backend.0.load(Ordering::SeqCst), 2);
        assert_eq!(e.embed(&texts).unwrap(), first);
        assert_eq!(backend.0.load(Ordering::SeqCst), 2);
        assert_eq!(e.cache().hits(), 3);
    }

    struct Short;

    impl EmbedBackend for Short {
        fn embed_batch(&self, _: &[String]) -> Result<Vec<Vec<f64>>, TransportError> {
            Ok(vec![])
        }
    }

    #[test]
    fn remote_count_mismatch_is_an_error() {
        let e = RemoteEmbedder::new("http://e", Box::new(Short), ResponseCache::in_memory(), 8);
        assert!(matches!(e.embed(&strings(&["a"])), Err(EmbedError::Count { .. })));
    }
}
