use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;

use sage_core::alignment::Method;
use sage_core::corpus::{Document, Partition};
use sage_core::llm::{predict_salience_llm, select_shots, Prediction, Shot};
use sage_core::salience::{aggregate_document, position_baseline, scores_to_tsv, SalienceScore};

use super::{
    args, close_gateway, display, gateway, gold_for, group_by_document, load, read_alignments, select_docs,
    thread_pool,
};
use crate::cli::Predictor;
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::run::Run;

pub fn score_file(p: Predictor) -> String {
    format!("scores.{}.tsv", p.slug())
}

pub fn unresolved_file(p: Predictor) -> String {
    format!("scores.{}.unresolved.tsv", p.slug())
}

pub fn score(cfg: RunConfig, predictor: Predictor, alignments: Option<PathBuf>, partition: Option<Partition>) -> Result<()> {
    let corpus = load(&cfg)?;
    let docs = select_docs(&corpus, partition);
    if docs.is_empty() {
        return Err(CliError::Config("no documents in the selected partition".into()));
    }
    let mut run = Run::start(
        "score",
        cfg.clone(),
        args(&[
            ("corpus", cfg.corpus.as_deref().map(display)),
            ("predictor", Some(predictor.to_string())),
            ("alignments", alignments.as_deref().map(display)),
            ("partition", partition.map(|p| format!("{p:?}").to_lowercase())),
        ]),
    )?;

    let mut scores: Vec<SalienceScore> = Vec::new();
    let mut unresolved: Vec<(String, String)> = Vec::new();
    match predictor {
        Predictor::Aggregate(method) => {
            let records = if method == Method::Manual {
                corpus.manual.clone()
            } else {
                let dir = alignments
                    .as_deref()
                    .ok_or_else(|| CliError::Config(format!("{predictor} needs --alignments")))?;
                read_alignments(dir, method)?
            };
            let mut by_doc = group_by_document(records);
            for doc in &docs {
                let recs = by_doc
                    .remove(&doc.id)
                    .ok_or_else(|| CliError::Mismatch(format!("no {method} records for document {}", doc.id)))?;
                scores.extend(
                    aggregate_document(doc, &recs).map_err(|e| CliError::from(e).context(format!("document {}", doc.id)))?,
                );
            }
        }
        Predictor::Baseline => {
            let table = cfg.segment_table()?;
            for doc in &docs {
                scores.extend(position_baseline(doc, &table));
            }
        }
        Predictor::LlmZero | Predictor::LlmThreeShot => {
            let k = if predictor == Predictor::LlmZero { 0 } else { cfg.shots };
            let mcfg = cfg.match_config()?;
            // shots come from annotated documents outside the test split
            let mut pool_docs: Vec<(&Document, Vec<SalienceScore>)> = Vec::new();
            if k > 0 {
                for d in corpus.documents.iter().filter(|d| d.partition != Partition::Test) {
                    if let Some(g) = gold_for(&corpus, d)? {
                        pool_docs.push((d, g));
                    }
                }
            }
            let pool_refs: Vec<&Document> = pool_docs.iter().map(|(d, _)| *d).collect();
            let mut short = Vec::new();
            let plans: Vec<Vec<Shot>> = docs
                .iter()
                .map(|doc| {
                    let chosen = select_shots(&pool_refs, &doc.id, k, cfg.seed);
                    if chosen.len() < k {
                        short.push(format!("{} has {} of {k} shots", doc.id, chosen.len()));
                    }
                    chosen
                        .into_iter()
                        .map(|d| {
                            let gold = &pool_docs.iter().find(|(p, _)| p.id == d.id).expect("chosen from pool").1;
                            Shot { document: d, gold }
                        })
                        .collect()
                })
                .collect();
            for w in short {
                run.warn(format!("too few annotated documents for shots: {w}"));
            }
            let gw = gateway(&cfg, &mcfg)?;
            let pool = thread_pool(cfg.workers)?;
            let preds: Result<Vec<Prediction>> = pool.install(|| {
                docs.par_iter()
                    .zip(plans.par_iter())
                    .map(|(doc, shots)| {
                        predict_salience_llm(&gw, cfg.llm.prediction, doc, shots, cfg.seed, &mcfg)
                            .map_err(|e| CliError::from(e).context(format!("document {}", doc.id)))
                    })
                    .collect()
            });
            close_gateway(&mut run, &gw)?;
            for (doc, p) in docs.iter().zip(preds?) {
                scores.extend(p.scores);
                unresolved.extend(p.unresolved.into_iter().map(|n| (doc.id.clone(), n)));
            }
            let mut tsv = String::from("document_id\tname\n");
            for (d, n) in &unresolved {
                let _ = writeln!(tsv, "{d}\t{}", n.replace(['\t', '\n'], " "));
            }
            if !unresolved.is_empty() {
                run.warn(format!("{} predicted entities matched nothing in their document", unresolved.len()));
            }
            run.write(&unresolved_file(predictor), tsv.as_bytes())?;
        }
    }

    let expected: usize = docs.iter().map(|d| d.entities.len()).sum();
    if scores.len() != expected {
        return Err(CliError::Internal(format!("{} scores for {expected} entities", scores.len())));
    }
    let path = run.write(&score_file(predictor), scores_to_tsv(&predictor.to_string(), &scores).as_bytes())?;
    println!("{predictor}: {} entity scores in {}", scores.len(), path.display());
    run.finish()?;
    Ok(())
}
