//! Evaluation statistics for salience predictors and aligners.

mod bootstrap;
mod breakdown;
mod correlation;
mod prf;
mod report;
mod wilcoxon;

pub use bootstrap::{bootstrap_ci, percentile, DEFAULT_RESAMPLES, MAX_REDRAWS};
pub use breakdown::{breakdowns, Breakdowns, EntityRow, FpFn, GenreStats, HalfCounts, TypeStats, MAX_SCORE};
pub use correlation::{average_ranks, rmse, spearman_rho};
pub use prf::{alignment_prf, tier_score, topk_prf, AlignmentScores, Confusion, Prf, Tier};
pub use report::{evaluate, per_document_rho, Estimate, EvalOptions, EvalReport, ReportMetadata, WilcoxonSummary};
pub use wilcoxon::{wilcoxon_signed_rank, WilcoxonResult, EXACT_MAX_N};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {need} items, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("empty input")]
    Empty,
    #[error("correlation undefined: zero variance")]
    UndefinedCorrelation,
    #[error("all differences are zero")]
    AllZeroDifferences,
    #[error("metric undefined on resample {resample} after {MAX_REDRAWS} redraws")]
    BootstrapUndefined { resample: usize },
    #[error("duplicate key {0}")]
    DuplicateKey(String),
    #[error("key sets differ: missing in prediction {missing_in_pred:?}, missing in gold {missing_in_gold:?}")]
    KeyMismatch {
        missing_in_pred: Vec<String>,
        missing_in_gold: Vec<String>,
    },
    #[error("score {score} for {entity} outside 0..=5")]
    ScoreOutOfRange { entity: String, score: f64 },
}
