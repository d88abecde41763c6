use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::MetricsError;

/// Redraws allowed per resample when the metric is undefined on it.
pub const MAX_REDRAWS: usize = 10;

pub const DEFAULT_RESAMPLES: usize = 10_000;

/// Linear interpolation between closest ranks of a sorted sample.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Percentile bootstrap interval for `metric` over `n_items` items.
///
/// `metric` receives the with-replacement sample of item indices and
/// returns `None` when undefined on it; such resamples are redrawn up to
/// [`MAX_REDRAWS`] times. Resample `i` draws from its own ChaCha stream, so
/// the result does not depend on how resamples are split across threads.
pub fn bootstrap_ci<F>(
    metric: F,
    n_items: usize,
    resamples: usize,
    seed: u64,
    level: f64,
) -> Result<(f64, f64), MetricsError>
where
    F: Fn(&[usize]) -> Option<f64> + Sync,
{
    if n_items < 2 {
        return Err(MetricsError::TooFew { need: 2, got: n_items });
    }
    if resamples == 0 {
        return Err(MetricsError::TooFew { need: 1, got: 0 });
    }
    let mut stats: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut sample = vec![0usize; n_items];
            for _ in 0..=MAX_REDRAWS {
                for s in sample.iter_mut() {
                    *s = rng.random_range(0..n_items);
                }
                if let Some(v) = metric(&sample).filter(|v| v.is_finite()) {
                    return Ok(v);
                }
            }
            Err(MetricsError::BootstrapUndefined { resample: i })
        })
        .collect::<Result<_, _>>()?;
    stats.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    Ok((percentile(&stats, alpha), percentile(&stats, 1.0 - alpha)))
}
