use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::MetricsError;
use crate::alignment::{AlignmentRecord, RecordKey};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub const PERFECT: Prf = Prf {
        precision: 1.0,
        recall: 1.0,
        f1: 1.0,
    };

    /// Undefined ratios count as 0.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        Self {
            precision,
            recall,
            f1: harmonic(precision, recall),
        }
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Top-k tiers over the 0..5 scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    /// Score exactly 5.
    Top1,
    /// Score 3, 4 or 5.
    Top3,
}

impl Tier {
    pub fn contains(self, score: i64) -> bool {
        match self {
            Tier::Top1 => score == 5,
            Tier::Top3 => (3..=5).contains(&score),
        }
    }
}

/// Round half up, for predictors that emit real-valued scores.
pub fn tier_score(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

/// Top-k precision/recall/F1 restricted to salient entities.
///
/// Entities with gold score 0 are dropped from the universe entirely. A
/// universe entity missing from `pred` counts as predicted 0. When both the
/// predicted and the gold tier sets are empty all three values are 1.
pub fn topk_prf<K: Ord>(pred: &BTreeMap<K, f64>, gold: &BTreeMap<K, u32>, tier: Tier) -> Prf {
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (k, &g) in gold.iter().filter(|(_, &g)| g >= 1) {
        let in_pred = tier.contains(tier_score(pred.get(k).copied().unwrap_or(0.0)));
        let in_gold = tier.contains(i64::from(g));
        match (in_pred, in_gold) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    if tp + fp == 0 && tp + fn_ == 0 {
        return Prf::PERFECT;
    }
    Prf::from_counts(tp, fp, fn_)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlignmentScores {
    /// Pooled over both classes.
    pub micro: Prf,
    /// Unweighted mean of per-class precision, recall and F1.
    pub macro_: Prf,
    /// The `true` class alone.
    pub positive: Prf,
    pub counts: Confusion,
}

/// Binary alignment scores of `pred` against `gold`; both must cover the
/// same (document, entity, summary) keys.
pub fn alignment_prf(pred: &[AlignmentRecord], gold: &[AlignmentRecord]) -> Result<AlignmentScores, MetricsError> {
    let index = |recs: &[AlignmentRecord], which: &str| -> Result<BTreeMap<RecordKey, bool>, MetricsError> {
        let mut m = BTreeMap::new();
        for r in recs {
            if m.insert(r.key(), r.label).is_some() {
                return Err(MetricsError::DuplicateKey(format!(
                    "{which}: {}/{}/{}",
                    r.document_id, r.entity_id, r.summary_id
                )));
            }
        }
        Ok(m)
    };
    let p = index(pred, "prediction")?;
    let g = index(gold, "gold")?;
    let pk: BTreeSet<&RecordKey> = p.keys().collect();
    let gk: BTreeSet<&RecordKey> = g.keys().collect();
    if pk != gk {
        let fmt = |k: &&RecordKey| format!("{}/{}/{}", k.document_id, k.entity_id, k.summary_id);
        return Err(MetricsError::KeyMismatch {
            missing_in_pred: gk.difference(&pk).map(fmt).collect(),
            missing_in_gold: pk.difference(&gk).map(fmt).collect(),
        });
    }
    let mut c = Confusion::default();
    for (k, &gl) in &g {
        match (p[k], gl) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    let positive = Prf::from_counts(c.tp, c.fp, c.fn_);
    let negative = Prf::from_counts(c.tn, c.fn_, c.fp);
    // pooling both classes: every error is one FP for one class and one FN for the other
    let micro = Prf::from_counts(c.tp + c.tn, c.fp + c.fn_, c.fp + c.fn_);
    let macro_ = Prf {
        precision: (positive.precision + negative.precision) / 2.0,
        recall: (positive.recall + negative.recall) / 2.0,
        f1: (positive.f1 + negative.f1) / 2.0,
    };
    Ok(AlignmentScores {
        micro,
        macro_,
        positive,
        counts: c,
    })
}
