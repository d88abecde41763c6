use std::collections::BTreeMap;

use serde::Serialize;

use super::bootstrap::{bootstrap_ci, DEFAULT_RESAMPLES};
use super::breakdown::{breakdowns, Breakdowns, EntityRow, GenreStats, HalfCounts, TypeStats};
use super::correlation::{rmse, spearman_rho};
use super::prf::{topk_prf, Prf, Tier};
use super::wilcoxon::wilcoxon_signed_rank;
use super::MetricsError;
use crate::rng::substream_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WilcoxonSummary {
    pub statistic: f64,
    pub p_value: f64,
    pub n_pairs: usize,
    pub exact: bool,
    pub compared_against: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalOptions {
    pub seed: u64,
    pub resamples: usize,
    /// Restrict Spearman and RMSE to entities with gold score >= 1.
    pub salient_only: bool,
    pub confidence: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            resamples: DEFAULT_RESAMPLES,
            salient_only: false,
            confidence: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMetadata {
    pub seed: u64,
    pub resamples: usize,
    pub confidence: f64,
    pub salient_only: bool,
    pub spearman_pooling: &'static str,
    pub wilcoxon_pairing: &'static str,
    pub ci_method: &'static str,
    pub tier_rounding: &'static str,
    pub notes: Vec<String>,
}

/// Everything `eval` reports for one predictor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub predictor: String,
    pub n_entities: usize,
    pub n_documents: usize,
    /// `None` when the pooled correlation is undefined (a constant vector).
    pub spearman: Option<Estimate>,
    pub rmse: Estimate,
    pub prf_top1: Prf,
    pub prf_top3: Prf,
    pub wilcoxon: Option<WilcoxonSummary>,
    pub confusion: Vec<Vec<u64>>,
    pub per_genre: BTreeMap<String, GenreStats>,
    pub per_type: BTreeMap<String, TypeStats>,
    pub fp_fn_by_half: HalfCounts,
    pub unresolved_predictions: usize,
    pub metadata: ReportMetadata,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn breakdowns(&self) -> Breakdowns {
        Breakdowns {
            confusion: self.confusion.clone(),
            per_genre: self.per_genre.clone(),
            per_type: self.per_type.clone(),
            fp_fn_by_half: self.fp_fn_by_half,
        }
    }
}

fn key(r: &EntityRow) -> (String, String) {
    (r.document_id.clone(), r.entity_id.clone())
}

/// Spearman correlation per document, for documents where it is defined.
pub fn per_document_rho(rows: &[EntityRow]) -> BTreeMap<String, f64> {
    let mut by_doc: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in rows {
        let e = by_doc.entry(r.document_id.as_str()).or_default();
        e.0.push(r.pred);
        e.1.push(f64::from(r.gold));
    }
    by_doc
        .into_iter()
        .filter_map(|(d, (p, g))| spearman_rho(&p, &g).ok().map(|rho| (d.to_owned(), rho)))
        .collect()
}

/// Evaluate `rows` against their gold scores. When `comparison` is given,
/// per-document Spearman values of both predictors are paired and compared
/// with a Wilcoxon signed-rank test.
pub fn evaluate(
    predictor: &str,
    rows: &[EntityRow],
    comparison: Option<(&str, &[EntityRow])>,
    unresolved_predictions: usize,
    opts: &EvalOptions,
) -> Result<EvalReport, MetricsError> {
    if rows.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut notes = Vec::new();

    let scored: Vec<&EntityRow> = rows.iter().filter(|r| !opts.salient_only || r.gold >= 1).collect();
    if scored.is_empty() {
        return Err(MetricsError::Empty);
    }
    let pred: Vec<f64> = scored.iter().map(|r| r.pred).collect();
    let gold: Vec<f64> = scored.iter().map(|r| f64::from(r.gold)).collect();

    let pick = |idx: &[usize]| -> (Vec<f64>, Vec<f64>) {
        idx.iter().map(|&i| (pred[i], gold[i])).unzip()
    };

    let rmse_value = rmse(&pred, &gold)?;
    let (lo, hi) = if scored.len() >= 2 {
        bootstrap_ci(
            |idx| {
                let (p, g) = pick(idx);
                rmse(&p, &g).ok()
            },
            scored.len(),
            opts.resamples,
            substream_seed(opts.seed, "bootstrap/rmse"),
            opts.confidence,
        )?
    } else {
        notes.push("fewer than 2 entities: RMSE interval is degenerate".into());
        (rmse_value, rmse_value)
    };
    let rmse_est = Estimate {
        value: rmse_value,
        ci_low: lo,
        ci_high: hi,
    };

    let spearman = match spearman_rho(&pred, &gold) {
        Ok(rho) => {
            let ci = bootstrap_ci(
                |idx| {
                    let (p, g) = pick(idx);
                    spearman_rho(&p, &g).ok()
                },
                scored.len(),
                opts.resamples,
                substream_seed(opts.seed, "bootstrap/spearman"),
                opts.confidence,
            );
            match ci {
                Ok((lo, hi)) => Some(Estimate {
                    value: rho,
                    ci_low: lo,
                    ci_high: hi,
                }),
                Err(e) => {
                    notes.push(format!("spearman interval unavailable: {e}"));
                    Some(Estimate {
                        value: rho,
                        ci_low: f64::NAN,
                        ci_high: f64::NAN,
                    })
                }
            }
        }
        Err(e) => {
            notes.push(format!("pooled spearman undefined: {e}"));
            None
        }
    };

    let pred_map: BTreeMap<_, f64> = rows.iter().map(|r| (key(r), r.pred)).collect();
    let gold_map: BTreeMap<_, u32> = rows.iter().map(|r| (key(r), r.gold)).collect();
    let prf_top1 = topk_prf(&pred_map, &gold_map, Tier::Top1);
    let prf_top3 = topk_prf(&pred_map, &gold_map, Tier::Top3);

    let wilcoxon = match comparison {
        None => None,
        Some((name, other)) => {
            let mine = per_document_rho(rows);
            let theirs = per_document_rho(other);
            let diffs: Vec<f64> = mine
                .iter()
                .filter_map(|(d, a)| theirs.get(d).map(|b| a - b))
                .collect();
            match wilcoxon_signed_rank(&diffs) {
                Ok(w) => Some(WilcoxonSummary {
                    statistic: w.statistic,
                    p_value: w.p_value,
                    n_pairs: w.n,
                    exact: w.exact,
                    compared_against: name.to_owned(),
                }),
                Err(e) => {
                    notes.push(format!("wilcoxon against {name} skipped: {e}"));
                    None
                }
            }
        }
    };

    let b = breakdowns(rows)?;
    let n_documents = rows
        .iter()
        .map(|r| r.document_id.as_str())
        .collect::<std::collections::BTreeSet<_>>()
        .len();

    Ok(EvalReport {
        predictor: predictor.to_owned(),
        n_entities: rows.len(),
        n_documents,
        spearman,
        rmse: rmse_est,
        prf_top1,
        prf_top3,
        wilcoxon,
        confusion: b.confusion,
        per_genre: b.per_genre,
        per_type: b.per_type,
        fp_fn_by_half: b.fp_fn_by_half,
        unresolved_predictions,
        metadata: ReportMetadata {
            seed: opts.seed,
            resamples: opts.resamples,
            confidence: opts.confidence,
            salient_only: opts.salient_only,
            spearman_pooling: "all (document, entity) pairs pooled",
            wilcoxon_pairing: "per-document spearman, documents where both are defined",
            ci_method: "percentile bootstrap over entities (pairs resampled jointly)",
            tier_rounding: "round half up",
            notes,
        },
    })
}
