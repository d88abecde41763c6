use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;

use sage_core::alignment::{to_jsonl, AlignmentRecord, Method};
use sage_core::coref::align_coref;
use sage_core::corpus::{Corpus, Document};
use sage_core::ensemble::{align_ensemble, FeatureSchema, LabelIndex, LogRegModel};
use sage_core::llm::align_entities_llm;
use sage_core::string_match::align_string;

use super::{alignment_file, args, close_gateway, display, gateway, load, read_alignments, resolver, thread_pool};
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::run::Run;

/// Run `f` on every document with a bounded pool, concatenating the
/// results in document-id order.
pub(crate) fn per_document<F>(pool: &rayon::ThreadPool, docs: &[Document], f: F) -> Result<Vec<AlignmentRecord>>
where
    F: Fn(&Document) -> Result<Vec<AlignmentRecord>> + Sync,
{
    let chunks: Vec<Vec<AlignmentRecord>> = pool.install(|| {
        docs.par_iter()
            .map(|d| f(d).map_err(|e| e.context(format!("document {}", d.id))))
            .collect::<Result<_>>()
    })?;
    Ok(chunks.into_iter().flatten().collect())
}

fn expected_records(corpus: &Corpus) -> usize {
    corpus.documents.iter().map(|d| d.entities.len() * d.n_summaries()).sum()
}

pub fn align(
    mut cfg: RunConfig,
    methods: Option<Vec<Method>>,
    model: Option<PathBuf>,
    alignments: Option<PathBuf>,
) -> Result<()> {
    if let Some(m) = methods {
        cfg.methods = m;
    }
    if model.is_some() {
        cfg.ensemble.model = model;
    }
    cfg.check()?;
    let corpus = load(&cfg)?;
    let mcfg = cfg.match_config()?;
    let pool = thread_pool(cfg.workers)?;
    let methods = cfg.methods.clone();

    let mut run = Run::start(
        "align",
        cfg.clone(),
        args(&[
            ("corpus", cfg.corpus.as_deref().map(display)),
            ("alignments", alignments.as_deref().map(display)),
        ]),
    )?;
    let mut produced: BTreeMap<Method, Vec<AlignmentRecord>> = BTreeMap::new();
    // base methods first so a same-run ensemble can use their labels
    let mut order = methods.clone();
    order.sort();

    for method in order {
        let records = run.stage(method.as_str(), |run| match method {
            Method::String => per_document(&pool, &corpus.documents, |doc| {
                Ok(doc.summaries.iter().flat_map(|s| align_string(doc, s, &mcfg)).collect())
            }),
            Method::Coref => {
                let res = resolver(&cfg, &mcfg)?;
                per_document(&pool, &corpus.documents, |doc| {
                    let mut out = Vec::new();
                    for s in &doc.summaries {
                        out.extend(
                            align_coref(doc, s, res.as_ref(), cfg.coref.order)
                                .map_err(|e| CliError::from(e).context(format!("summary {}", s.id)))?,
                        );
                    }
                    Ok(out)
                })
            }
            Method::Llm => {
                let gw = gateway(&cfg, &mcfg)?;
                let out = per_document(&pool, &corpus.documents, |doc| {
                    let mut out = Vec::new();
                    for s in &doc.summaries {
                        out.extend(
                            align_entities_llm(&gw, cfg.llm.alignment, doc, s, cfg.llm.batch_size, &mcfg)
                                .map_err(|e| CliError::from(e).context(format!("summary {}", s.id)))?,
                        );
                    }
                    Ok(out)
                });
                close_gateway(run, &gw)?;
                out
            }
            Method::Ensemble => {
                let path = cfg.ensemble.model.clone().ok_or_else(|| {
                    CliError::Config("the ensemble method needs a trained model (--model)".into())
                })?;
                let model = LogRegModel::load(&path)?;
                let mut base = Vec::new();
                for m in Method::BASE {
                    match (produced.get(&m), &alignments) {
                        (Some(r), _) => base.extend(r.iter().cloned()),
                        (None, Some(dir)) => base.extend(read_alignments(dir, m)?),
                        (None, None) => {
                            return Err(CliError::Config(format!(
                                "the ensemble method needs {m} labels: align it in the same run or pass --alignments"
                            )))
                        }
                    }
                }
                let labels = LabelIndex::new(&base);
                let schema = FeatureSchema::new(&corpus.vocabulary);
                per_document(&pool, &corpus.documents, |doc| Ok(align_ensemble(doc, &schema, &labels, &model)?))
            }
            Method::Manual => Err(CliError::Config("`manual` records cannot be produced".into())),
        })?;
        let expected = expected_records(&corpus);
        if records.len() != expected {
            return Err(CliError::Internal(format!(
                "{method} produced {} records, expected {expected}",
                records.len()
            )));
        }
        run.write(&alignment_file(method), to_jsonl(&records).as_bytes())?;
        println!("{method}: {} records", records.len());
        produced.insert(method, records);
    }
    run.finish()?;
    Ok(())
}
