use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::correlation::{rmse, spearman_rho};
use super::prf::{tier_score, Prf, Tier};
use super::MetricsError;

/// Highest score on the graded scale.
pub const MAX_SCORE: usize = 5;

/// One scored entity with the attributes needed for error analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityRow {
    pub document_id: String,
    pub entity_id: String,
    pub gold: u32,
    pub pred: f64,
    pub genre: String,
    pub entity_type: String,
    /// First mention falls in the first half of the document's sentences.
    pub first_half: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenreStats {
    pub n: usize,
    pub spearman: Option<f64>,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeStats {
    pub n: usize,
    pub top3: Prf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub struct FpFn {
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub struct HalfCounts {
    pub first: FpFn,
    pub second: FpFn,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Breakdowns {
    /// `confusion[gold][pred]` over scores 0..=5.
    pub confusion: Vec<Vec<u64>>,
    pub per_genre: BTreeMap<String, GenreStats>,
    pub per_type: BTreeMap<String, TypeStats>,
    pub fp_fn_by_half: HalfCounts,
}

fn checked_pred(r: &EntityRow) -> Result<usize, MetricsError> {
    let p = tier_score(r.pred);
    if !(0..=MAX_SCORE as i64).contains(&p) {
        return Err(MetricsError::ScoreOutOfRange {
            entity: format!("{}/{}", r.document_id, r.entity_id),
            score: r.pred,
        });
    }
    Ok(p as usize)
}

/// Confusion matrix, per-genre correlation and error, per-type top-3 scores,
/// and top-3 FP/FN counts split by document half.
///
/// Per-type scores and FP/FN counts follow the top-k universe rule (gold 0
/// excluded); the confusion matrix and per-genre statistics use every row.
pub fn breakdowns(rows: &[EntityRow]) -> Result<Breakdowns, MetricsError> {
    let mut confusion = vec![vec![0u64; MAX_SCORE + 1]; MAX_SCORE + 1];
    let mut genres: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    let mut types: BTreeMap<&str, (usize, usize, usize, usize)> = BTreeMap::new();
    let mut halves = HalfCounts::default();

    for r in rows {
        let p = checked_pred(r)?;
        let g = r.gold as usize;
        if g > MAX_SCORE {
            return Err(MetricsError::ScoreOutOfRange {
                entity: format!("{}/{}", r.document_id, r.entity_id),
                score: f64::from(r.gold),
            });
        }
        confusion[g][p] += 1;
        let ge = genres.entry(r.genre.as_str()).or_default();
        ge.0.push(r.pred);
        ge.1.push(f64::from(r.gold));

        if r.gold == 0 {
            continue;
        }
        let in_pred = Tier::Top3.contains(p as i64);
        let in_gold = Tier::Top3.contains(g as i64);
        let t = types.entry(r.entity_type.as_str()).or_default();
        t.0 += 1;
        let bucket = if r.first_half { &mut halves.first } else { &mut halves.second };
        match (in_pred, in_gold) {
            (true, true) => t.1 += 1,
            (true, false) => {
                t.2 += 1;
                bucket.fp += 1;
            }
            (false, true) => {
                t.3 += 1;
                bucket.fn_ += 1;
            }
            (false, false) => {}
        }
    }

    let per_genre = genres
        .into_iter()
        .map(|(g, (pred, gold))| {
            let stats = GenreStats {
                n: pred.len(),
                spearman: spearman_rho(&pred, &gold).ok(),
                rmse: rmse(&pred, &gold).expect("genre has at least one row"),
            };
            (g.to_owned(), stats)
        })
        .collect();
    let per_type = types
        .into_iter()
        .map(|(t, (n, tp, fp, fn_))| {
            let top3 = if tp + fp + fn_ == 0 {
                Prf::PERFECT
            } else {
                Prf::from_counts(tp, fp, fn_)
            };
            (t.to_owned(), TypeStats { n, top3 })
        })
        .collect();
    Ok(Breakdowns {
        confusion,
        per_genre,
        per_type,
        fp_fn_by_half: halves,
    })
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".into(), |v| v.to_string())
}

impl Breakdowns {
    /// Flat tables keyed by file stem.
    pub fn tsv_tables(&self) -> Vec<(&'static str, String)> {
        let mut confusion = String::from("gold\\pred");
        for p in 0..=MAX_SCORE {
            let _ = write!(confusion, "\t{p}");
        }
        confusion.push('\n');
        for (g, row) in self.confusion.iter().enumerate() {
            let _ = write!(confusion, "{g}");
            for c in row {
                let _ = write!(confusion, "\t{c}");
            }
            confusion.push('\n');
        }

        let mut genre = String::from("genre\tn\tspearman\trmse\n");
        for (g, s) in &self.per_genre {
            let _ = writeln!(genre, "{g}\t{}\t{}\t{}", s.n, opt(s.spearman), s.rmse);
        }

        let mut types = String::from("type\tn\tprecision\trecall\tf1\n");
        for (t, s) in &self.per_type {
            let _ = writeln!(types, "{t}\t{}\t{}\t{}\t{}", s.n, s.top3.precision, s.top3.recall, s.top3.f1);
        }

        let h = &self.fp_fn_by_half;
        let halves = format!(
            "half\tfp\tfn\nfirst\t{}\t{}\nsecond\t{}\t{}\n",
            h.first.fp, h.first.fn_, h.second.fp, h.second.fn_
        );
        vec![
            ("confusion", confusion),
            ("per_genre", genre),
            ("per_type", types),
            ("fp_fn_by_half", halves),
        ]
    }
}
