use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use sage_core::corpus::{Corpus, Partition};
use sage_core::metrics::{evaluate, EntityRow};
use sage_core::salience::parse_scores_tsv;

use super::{args, display, gold_for, load, select_docs};
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::run::{read_input, Run};

pub const REPORT_FILE: &str = "report.json";

type Key = (String, String);

/// Predictor name and scores of one score file.
fn read_scores(path: &Path) -> Result<(String, BTreeMap<Key, f64>)> {
    let rows = parse_scores_tsv(&read_input(path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let methods: BTreeSet<&str> = rows.iter().map(|r| r.method.as_str()).collect();
    let name = match methods.into_iter().collect::<Vec<_>>().as_slice() {
        [one] => one.to_string(),
        [] => return Err(CliError::Mismatch(format!("{}: no scores", path.display()))),
        many => {
            return Err(CliError::Mismatch(format!(
                "{}: expected one predictor, found {}",
                path.display(),
                many.join(", ")
            )))
        }
    };
    let mut out = BTreeMap::new();
    for r in rows {
        let key = (r.document_id, r.entity_id);
        if out.insert(key.clone(), r.score).is_some() {
            return Err(CliError::Mismatch(format!("{}: duplicate score for {}/{}", path.display(), key.0, key.1)));
        }
    }
    Ok((name, out))
}

fn list(keys: &[&Key]) -> String {
    const SHOWN: usize = 10;
    let mut s: Vec<String> = keys.iter().take(SHOWN).map(|(d, e)| format!("{d}/{e}")).collect();
    if keys.len() > SHOWN {
        s.push(format!("... {} more", keys.len() - SHOWN));
    }
    s.join(", ")
}

/// Pair predictions with gold scores over the selected documents; the two
/// entity sets must be identical.
fn entity_rows(corpus: &Corpus, partition: Option<Partition>, path: &Path, pred: &BTreeMap<Key, f64>) -> Result<Vec<EntityRow>> {
    let docs = select_docs(corpus, partition);
    let selected: BTreeSet<&str> = docs.iter().map(|d| d.id.as_str()).collect();
    let pred: BTreeMap<&Key, f64> = pred
        .iter()
        .filter(|(k, _)| partition.is_none() || selected.contains(k.0.as_str()))
        .map(|(k, v)| (k, *v))
        .collect();

    let mut rows = Vec::new();
    let mut missing = Vec::new();
    let mut gold_keys = Vec::new();
    for doc in &docs {
        let gold = gold_for(corpus, doc)?
            .ok_or_else(|| CliError::Mismatch(format!("document {} has no gold scores", doc.id)))?;
        for g in gold {
            let e = doc.entity(&g.entity_id).expect("gold covers document entities");
            let key = (doc.id.clone(), e.id.clone());
            match pred.get(&key) {
                Some(&p) => rows.push(EntityRow {
                    document_id: doc.id.clone(),
                    entity_id: e.id.clone(),
                    gold: g.score,
                    pred: p,
                    genre: doc.genre.clone(),
                    entity_type: e.entity_type.clone(),
                    first_half: doc.first_mention_in_first_half(e).unwrap_or(false),
                }),
                None => missing.push(key.clone()),
            }
            gold_keys.push(key);
        }
    }
    let gold_set: BTreeSet<&Key> = gold_keys.iter().collect();
    let extra: Vec<&Key> = pred.keys().copied().filter(|k| !gold_set.contains(k)).collect();
    if !missing.is_empty() || !extra.is_empty() {
        let mut msg = format!("{}: predicted entities differ from gold", path.display());
        if !missing.is_empty() {
            msg.push_str(&format!("; missing {}: {}", missing.len(), list(&missing.iter().collect::<Vec<_>>())));
        }
        if !extra.is_empty() {
            msg.push_str(&format!("; not in gold {}: {}", extra.len(), list(&extra)));
        }
        return Err(CliError::Mismatch(msg));
    }
    Ok(rows)
}

/// `scores.x.tsv` -> `scores.x.unresolved.tsv`
fn unresolved_sibling(pred: &Path) -> PathBuf {
    let stem = pred.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    pred.with_file_name(format!("{stem}.unresolved.tsv"))
}

fn unresolved_count(pred: &Path) -> Result<usize> {
    let p = unresolved_sibling(pred);
    if !p.is_file() {
        return Ok(0);
    }
    Ok(read_input(&p)?.lines().skip(1).filter(|l| !l.trim().is_empty()).count())
}

pub fn eval(cfg: RunConfig, pred_path: &Path, compare: Option<&Path>, partition: Option<Partition>) -> Result<()> {
    let corpus = load(&cfg)?;
    let (name, pred) = read_scores(pred_path)?;
    let rows = entity_rows(&corpus, partition, pred_path, &pred)?;
    let other = match compare {
        Some(p) => {
            let (n, s) = read_scores(p)?;
            Some((n, entity_rows(&corpus, partition, p, &s)?))
        }
        None => None,
    };
    let unresolved = unresolved_count(pred_path)?;

    let mut run = Run::start(
        "eval",
        cfg.clone(),
        args(&[
            ("corpus", cfg.corpus.as_deref().map(display)),
            ("pred", Some(display(pred_path))),
            ("compare", compare.map(display)),
            ("partition", partition.map(|p| format!("{p:?}").to_lowercase())),
        ]),
    )?;
    let report = evaluate(
        &name,
        &rows,
        other.as_ref().map(|(n, r)| (n.as_str(), r.as_slice())),
        unresolved,
        &cfg.eval_options(),
    )?;
    for note in &report.metadata.notes {
        run.warn(note.clone());
    }
    if unresolved > 0 {
        run.warn(format!("{unresolved} unresolved predictions"));
    }
    run.write(REPORT_FILE, report.to_json().as_bytes())?;
    for (stem, tsv) in report.breakdowns().tsv_tables() {
        run.write(&format!("{stem}.tsv"), tsv.as_bytes())?;
    }
    let rho = report.spearman.map_or_else(|| "NA".to_string(), |e| format!("{:.4}", e.value));
    println!(
        "{name}: n={} spearman={rho} rmse={:.4} top1-F={:.4} top3-F={:.4}",
        report.n_entities, report.rmse.value, report.prf_top1.f1, report.prf_top3.f1
    );
    if let Some(w) = &report.wilcoxon {
        println!("wilcoxon vs {}: W={} p={:.6} (n={})", w.compared_against, w.statistic, w.p_value, w.n_pairs);
    }
    run.finish()?;
    Ok(())
}
