use std::path::Path;

use rand::seq::SliceRandom;
use serde::Serialize;

use sage_core::alignment::{to_jsonl, Method};
use sage_core::corpus::{Document, Partition};
use sage_core::ensemble::{align_ensemble, document_examples, train, FeatureSchema, LabelIndex, LogRegModel};
use sage_core::metrics::{alignment_prf, AlignmentScores};
use sage_core::rng::substream;

use super::{alignment_file, args, display, load, read_alignments};
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::run::Run;

pub const MODEL_FILE: &str = "ensemble.model.json";
pub const DEV_METRICS_FILE: &str = "ensemble.dev_metrics.json";

#[derive(Debug, Serialize)]
struct DevMetrics {
    train_documents: Vec<String>,
    heldout_documents: Vec<String>,
    /// False when there were too few dev documents to hold any out, in
    /// which case the scores are in-sample.
    heldout: bool,
    iterations: usize,
    converged: bool,
    final_loss: f64,
    scores: AlignmentScores,
}

/// Split dev documents into (train, held-out) with a seeded shuffle.
fn holdout_split<'a>(docs: &[&'a Document], fraction: f64, seed: u64) -> (Vec<&'a Document>, Vec<&'a Document>) {
    let n = docs.len();
    if n < 2 || fraction <= 0.0 {
        return (docs.to_vec(), Vec::new());
    }
    let n_hold = ((fraction * n as f64).ceil() as usize).clamp(1, n - 1);
    let mut shuffled = docs.to_vec();
    shuffled.sort_by(|a, b| a.id.cmp(&b.id));
    shuffled.shuffle(&mut substream(seed, "ensemble/holdout"));
    let held = shuffled.split_off(n - n_hold);
    let by_id = |v: &mut Vec<&Document>| v.sort_by(|a, b| a.id.cmp(&b.id));
    let (mut a, mut b) = (shuffled, held);
    by_id(&mut a);
    by_id(&mut b);
    (a, b)
}

pub fn train_ensemble(cfg: RunConfig, alignments: &Path) -> Result<()> {
    let corpus = load(&cfg)?;
    let mut base = Vec::new();
    for m in Method::BASE {
        base.extend(read_alignments(alignments, m)?);
    }
    let labels = LabelIndex::new(&base);
    let schema = FeatureSchema::new(&corpus.vocabulary);
    let hp = cfg.ensemble.train_params();

    let dev: Vec<&Document> = corpus.partition(Partition::Dev).collect();
    if dev.is_empty() {
        return Err(CliError::Mismatch("the corpus has no dev documents to train on".into()));
    }
    if let Some(d) = dev.iter().find(|d| corpus.manual_for(&d.id).is_empty()) {
        return Err(CliError::Mismatch(format!("no manual alignment labels for dev document {}", d.id)));
    }
    let examples_for = |docs: &[&Document]| -> Result<Vec<_>> {
        let mut out = Vec::new();
        for d in docs {
            let m = corpus.manual_for(&d.id);
            out.extend(
                document_examples(d, &schema, &labels, &m).map_err(|e| CliError::from(e).context(format!("document {}", d.id)))?,
            );
        }
        Ok(out)
    };
    let with_threshold = |mut m: LogRegModel| {
        m.threshold = cfg.ensemble.threshold;
        m
    };

    let mut run = Run::start(
        "train-ensemble",
        cfg.clone(),
        args(&[
            ("corpus", cfg.corpus.as_deref().map(display)),
            ("alignments", Some(display(alignments))),
        ]),
    )?;

    let (fit_docs, held_docs) = holdout_split(&dev, cfg.ensemble.holdout_fraction, cfg.seed);
    let heldout = !held_docs.is_empty();
    if !heldout {
        run.warn("too few dev documents for a held-out slice; dev metrics are in-sample");
    }
    let (slice_model, slice_summary) = run.stage("train-heldout", |_| {
        let (m, s) = train(&examples_for(&fit_docs)?, &schema, &hp)?;
        Ok((with_threshold(m), s))
    })?;
    let eval_docs = if heldout { &held_docs } else { &fit_docs };
    let mut pred = Vec::new();
    let mut gold = Vec::new();
    for d in eval_docs {
        pred.extend(align_ensemble(d, &schema, &labels, &slice_model)?);
        gold.extend(corpus.manual_for(&d.id));
    }
    let scores = alignment_prf(&pred, &gold)?;

    let (model, summary) = run.stage("train", |_| {
        let (m, s) = train(&examples_for(&dev)?, &schema, &hp)?;
        Ok((with_threshold(m), s))
    })?;
    if !summary.converged {
        run.warn(format!("training stopped at the iteration cap ({}) before converging", summary.iterations));
    }

    let mut records = Vec::new();
    for d in &corpus.documents {
        records.extend(
            align_ensemble(d, &schema, &labels, &model).map_err(|e| CliError::from(e).context(format!("document {}", d.id)))?,
        );
    }

    let metrics = DevMetrics {
        train_documents: fit_docs.iter().map(|d| d.id.clone()).collect(),
        heldout_documents: held_docs.iter().map(|d| d.id.clone()).collect(),
        heldout,
        iterations: slice_summary.iterations,
        converged: slice_summary.converged,
        final_loss: slice_summary.losses.last().copied().unwrap_or(f64::NAN),
        scores,
    };
    let mut json = serde_json::to_string_pretty(&metrics).map_err(|e| CliError::Internal(e.to_string()))?;
    json.push('\n');
    run.write(MODEL_FILE, model.to_json().as_bytes())?;
    run.write(DEV_METRICS_FILE, json.as_bytes())?;
    run.write(&alignment_file(Method::Ensemble), to_jsonl(&records).as_bytes())?;

    let p = &metrics.scores.positive;
    println!(
        "ensemble {} P {:.4} R {:.4} F {:.4} ({} iterations)",
        if heldout { "held-out" } else { "in-sample" },
        p.precision,
        p.recall,
        p.f1,
        summary.iterations
    );
    run.finish()?;
    Ok(())
}
