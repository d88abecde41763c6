use std::fmt::Write as _;
use std::time::Duration;

use serde::Serialize;

use sage_core::corpus::Document;
use sage_core::llm::ResponseCache;
use sage_core::sumqual::{
    pairwise_similarity, rouge_l, rouge_n, self_bleu, EmbedError, Embedder, HttpEmbedBackend, RemoteEmbedder,
    TfidfEmbedder,
};

use super::{args, display, load};
use crate::config::{EmbedderKind, RunConfig};
use crate::error::{CliError, Result};
use crate::run::Run;

pub const EMBED_CACHE_FILE: &str = "embed.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SumqualRow {
    pub document_id: String,
    /// `human` or `model`
    pub group: &'static str,
    pub n: usize,
    /// Mean F of each model summary against each human summary; model rows only.
    pub rouge1_f: Option<f64>,
    pub rouge2_f: Option<f64>,
    pub rouge_l_f: Option<f64>,
    pub self_bleu: Option<f64>,
    pub cosine: Option<f64>,
    pub skipped_pairs: usize,
}

fn mean_over_pairs(cands: &[&str], refs: &[&str], f: impl Fn(&str, &str) -> f64) -> Option<f64> {
    if cands.is_empty() || refs.is_empty() {
        return None;
    }
    let total: f64 = cands.iter().flat_map(|c| refs.iter().map(|r| f(c, r))).sum();
    Some(total / (cands.len() * refs.len()) as f64)
}

fn document_rows(doc: &Document, embedder: &dyn Embedder, warnings: &mut Vec<String>) -> Result<Vec<SumqualRow>> {
    let human: Vec<&str> = doc.summaries.iter().filter(|s| !s.source.is_model()).map(|s| s.text.as_str()).collect();
    let model: Vec<&str> = doc.summaries.iter().filter(|s| s.source.is_model()).map(|s| s.text.as_str()).collect();
    let mut rows = Vec::new();
    for (group, texts) in [("human", &human), ("model", &model)] {
        if texts.is_empty() {
            continue;
        }
        let owned: Vec<String> = texts.iter().map(|s| s.to_string()).collect();
        let (cosine, skipped_pairs) = match pairwise_similarity(&owned, embedder) {
            Ok(s) => (Some(s.mean), s.skipped),
            Err(EmbedError::TooFew(_)) => (None, 0),
            Err(EmbedError::NoComparablePairs) => {
                let n = owned.len() * (owned.len() - 1) / 2;
                warnings.push(format!("{} {group}: every summary pair has a zero embedding", doc.id));
                (None, n)
            }
            Err(e) => return Err(CliError::from(e).context(format!("document {}", doc.id))),
        };
        if skipped_pairs > 0 && cosine.is_some() {
            warnings.push(format!("{} {group}: {skipped_pairs} pairs skipped for zero embeddings", doc.id));
        }
        let rouge = |f: &dyn Fn(&str, &str) -> f64| if group == "model" { mean_over_pairs(&model, &human, f) } else { None };
        rows.push(SumqualRow {
            document_id: doc.id.clone(),
            group,
            n: texts.len(),
            rouge1_f: rouge(&|c, r| rouge_n(c, r, 1).f),
            rouge2_f: rouge(&|c, r| rouge_n(c, r, 2).f),
            rouge_l_f: rouge(&|c, r| rouge_l(c, r).f),
            self_bleu: self_bleu(texts),
            cosine,
            skipped_pairs,
        });
    }
    Ok(rows)
}

fn to_tsv(rows: &[SumqualRow]) -> String {
    let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.6}"));
    let mut out = String::from("document_id\tgroup\tn\trouge1_f\trouge2_f\trougeL_f\tself_bleu\tcosine\tskipped_pairs\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.document_id,
            r.group,
            r.n,
            opt(r.rouge1_f),
            opt(r.rouge2_f),
            opt(r.rouge_l_f),
            opt(r.self_bleu),
            opt(r.cosine),
            r.skipped_pairs
        );
    }
    out
}

pub fn sumqual(cfg: RunConfig) -> Result<()> {
    let corpus = load(&cfg)?;
    let mut run = Run::start("sumqual", cfg.clone(), args(&[("corpus", cfg.corpus.as_deref().map(display))]))?;
    let mut remote = None;
    let embedder: Box<dyn Embedder> = match cfg.embedder.kind {
        EmbedderKind::Tfidf => {
            let all: Vec<&str> = corpus.documents.iter().flat_map(|d| d.summaries.iter().map(|s| s.text.as_str())).collect();
            Box::new(TfidfEmbedder::fit(&all))
        }
        EmbedderKind::Remote => {
            let url = cfg
                .embedder
                .endpoint
                .clone()
                .ok_or_else(|| CliError::Config("the remote embedder needs an endpoint (--embed-endpoint)".into()))?;
            let cache = ResponseCache::open(&cfg.cache_dir().join(EMBED_CACHE_FILE))?;
            let backend = HttpEmbedBackend::new(&url, cfg.api_key(), Duration::from_secs(cfg.llm.timeout_secs));
            let e = std::sync::Arc::new(RemoteEmbedder::new(&url, Box::new(backend), cache, cfg.embedder.batch_size));
            remote = Some(e.clone());
            Box::new(ArcEmbedder(e))
        }
    };

    let mut warnings = Vec::new();
    let mut rows = Vec::new();
    let result = corpus
        .documents
        .iter()
        .try_for_each(|d| document_rows(d, embedder.as_ref(), &mut warnings).map(|r| rows.extend(r)));
    if let Some(e) = &remote {
        e.cache().flush()?;
        run.cache_counts("embed", e.cache().hits(), e.cache().misses());
    }
    result?;
    for w in warnings {
        run.warn(w);
    }

    let tsv = to_tsv(&rows);
    let report = serde_json::json!({
        "metadata": {
            "embedder": cfg.embedder.kind,
            "normalization": "lowercase, edge punctuation stripped, no stopword removal",
            "rouge": "model summaries against each human summary, F averaged over pairs",
            "self_bleu": "ordered pairs, up to 4-grams, brevity penalty, add-one smoothing on 2- to 4-gram precisions",
            "cosine": "unordered pairs; pairs with a zero vector are skipped"
        },
        "rows": rows,
    });
    let mut json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Internal(e.to_string()))?;
    json.push('\n');
    run.write("sumqual.tsv", tsv.as_bytes())?;
    run.write("sumqual.json", json.as_bytes())?;
    print!("{tsv}");
    run.finish()?;
    Ok(())
}

struct ArcEmbedder(std::sync::Arc<RemoteEmbedder>);

impl Embedder for ArcEmbedder {
    fn embed(&self, texts: &[String]) -> std::result::Result<Vec<Vec<f64>>, EmbedError> {
        self.0.embed(texts)
    }
}
