mod align;
mod eval;
mod ingest;
mod score;
mod stats;
mod sumqual;
mod train;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

pub use align::align;
pub use eval::eval;
pub use ingest::ingest;
pub use score::score;
pub use stats::stats;
pub use sumqual::sumqual;
pub use train::train_ensemble;

use sage_core::alignment::{read_jsonl, AlignmentRecord, Method};
use sage_core::coref::{MockResolver, Resolver, SidecarResolver};
use sage_core::corpus::{load_corpus, Corpus, Document, Partition};
use sage_core::llm::{Gateway, HttpTransport, MockTransport, ResponseCache};
use sage_core::salience::{gold_scores, stored_gold_scores, SalienceScore};
use sage_core::string_match::MatchConfig;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::run::Run;

pub const MOCK_ENDPOINT: &str = "mock";
pub const LLM_CACHE_FILE: &str = "llm.jsonl";

pub fn load(cfg: &RunConfig) -> Result<Corpus> {
    Ok(load_corpus(cfg.corpus_path()?, &cfg.vocabulary()?)?)
}

pub fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))
}

pub fn gateway(cfg: &RunConfig, mcfg: &MatchConfig) -> Result<Gateway> {
    let cache = ResponseCache::open(&cfg.cache_dir().join(LLM_CACHE_FILE))?;
    if cfg.mock_llm {
        let mut llm = cfg.llm.clone();
        llm.endpoint = MOCK_ENDPOINT.into();
        return Ok(Gateway::from_config(&llm, Box::new(MockTransport::new(mcfg.clone())), cache));
    }
    let transport = HttpTransport::new(&cfg.llm.endpoint, cfg.api_key(), Duration::from_secs(cfg.llm.timeout_secs));
    Ok(Gateway::from_config(&cfg.llm, Box::new(transport), cache))
}

/// Flush the LLM cache and record its counters.
pub fn close_gateway(run: &mut Run, gw: &Gateway) -> Result<()> {
    gw.cache().flush()?;
    run.cache_counts("llm", gw.cache().hits(), gw.cache().misses());
    Ok(())
}

pub fn resolver(cfg: &RunConfig, mcfg: &MatchConfig) -> Result<Box<dyn Resolver>> {
    if cfg.mock_coref {
        return Ok(Box::new(MockResolver::new(mcfg.clone())));
    }
    let cmd = cfg.coref_command().ok_or_else(|| {
        CliError::Service("no coreference sidecar configured; set SAGE_COREF_CMD or pass --mock-coref".into())
    })?;
    Ok(Box::new(SidecarResolver::spawn(&cmd, Duration::from_secs(cfg.coref.timeout_secs))?))
}

pub fn select_docs(corpus: &Corpus, partition: Option<Partition>) -> Vec<&Document> {
    corpus
        .documents
        .iter()
        .filter(|d| partition.is_none_or(|p| d.partition == p))
        .collect()
}

pub fn alignment_file(method: Method) -> String {
    format!("alignments.{method}.jsonl")
}

pub fn alignment_path(dir: &Path, method: Method) -> PathBuf {
    dir.join(alignment_file(method))
}

pub fn read_alignments(dir: &Path, method: Method) -> Result<Vec<AlignmentRecord>> {
    let path = alignment_path(dir, method);
    if !path.is_file() {
        return Err(CliError::Config(format!("missing {method} alignments: {}", path.display())));
    }
    let recs = read_jsonl(&path).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(r) = recs.iter().find(|r| r.method != method) {
        return Err(CliError::Mismatch(format!(
            "{}: record with method {} in the {method} file",
            path.display(),
            r.method
        )));
    }
    Ok(recs)
}

pub fn group_by_document(records: Vec<AlignmentRecord>) -> BTreeMap<String, Vec<AlignmentRecord>> {
    let mut out: BTreeMap<String, Vec<AlignmentRecord>> = BTreeMap::new();
    for r in records {
        out.entry(r.document_id.clone()).or_default().push(r);
    }
    out
}

/// Gold scores from manual alignments when the corpus has them for this
/// document, else from stored scores.
pub fn gold_for(corpus: &Corpus, doc: &Document) -> Result<Option<Vec<SalienceScore>>> {
    let manual = corpus.manual_for(&doc.id);
    if manual.is_empty() {
        return Ok(stored_gold_scores(doc));
    }
    gold_scores(doc, &manual)
        .map(Some)
        .map_err(|e| CliError::from(e).context(format!("document {}", doc.id)))
}

pub fn args(pairs: &[(&str, Option<String>)]) -> BTreeMap<String, String> {
    pairs
        .iter()
        .filter_map(|(k, v)| v.clone().map(|v| (k.to_string(), v)))
        .collect()
}

pub fn display(p: &Path) -> String {
    p.display().to_string()
}
