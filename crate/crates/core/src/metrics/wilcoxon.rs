use serde::Serialize;
use statrs::function::erf::erfc;

use super::correlation::average_ranks;
use super::MetricsError;

/// Largest number of non-zero differences handled by the exact null distribution.
pub const EXACT_MAX_N: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WilcoxonResult {
    /// Sum of ranks of the positive differences.
    pub statistic: f64,
    pub p_value: f64,
    /// Non-zero differences used.
    pub n: usize,
    pub exact: bool,
}

/// Two-sided Wilcoxon signed-rank test on paired differences.
///
/// Zero differences are dropped and tied magnitudes share average ranks.
/// Up to [`EXACT_MAX_N`] pairs the p-value comes from the exact
/// distribution of the statistic over all sign assignments of the observed
/// ranks; beyond that a normal approximation with tie and continuity
/// corrections is used.
pub fn wilcoxon_signed_rank(diffs: &[f64]) -> Result<WilcoxonResult, MetricsError> {
    let nz: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    if nz.is_empty() {
        return Err(MetricsError::AllZeroDifferences);
    }
    let n = nz.len();
    let ranks = average_ranks(&nz.iter().map(|d| d.abs()).collect::<Vec<_>>());
    let w_plus: f64 = nz.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();

    if n <= EXACT_MAX_N {
        return Ok(WilcoxonResult {
            statistic: w_plus,
            p_value: exact_p(&ranks, w_plus),
            n,
            exact: true,
        });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0;
    let mut sorted = ranks.clone();
    sorted.sort_by(f64::total_cmp);
    for group in sorted.chunk_by(|a, b| a == b) {
        let t = group.len() as f64;
        var -= (t * t * t - t) / 48.0;
    }
    let p_value = if var <= 0.0 {
        1.0
    } else {
        let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
        erfc(z / std::f64::consts::SQRT_2).min(1.0)
    };
    Ok(WilcoxonResult {
        statistic: w_plus,
        p_value,
        n,
        exact: false,
    })
}

/// Exact two-sided p-value by dynamic programming over doubled ranks
/// (average ranks are multiples of 1/2, so doubling makes them integers).
fn exact_p(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0u64; total + 1];
    counts[0] = 1;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] != 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let w = (w_plus * 2.0).round() as usize;
    let all = (1u64 << ranks.len()) as f64;
    let lower: u64 = counts[..=w].iter().sum();
    let upper: u64 = counts[w..].iter().sum();
    (2.0 * lower.min(upper) as f64 / all).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Enumerate all 2^n sign patterns of the observed ranks.
    fn brute_force_p(diffs: &[f64]) -> f64 {
        let nz: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
        let ranks = average_ranks(&nz.iter().map(|d| d.abs()).collect::<Vec<_>>());
        let obs: f64 = nz.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
        let n = ranks.len();
        let (mut le, mut ge) = (0u64, 0u64);
        for mask in 0u64..(1 << n) {
            let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
            if w <= obs + 1e-9 {
                le += 1;
            }
            if w >= obs - 1e-9 {
                ge += 1;
            }
        }
        (2.0 * le.min(ge) as f64 / (1u64 << n) as f64).min(1.0)
    }

    #[test]
    fn three_positive_differences() {
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.statistic, 6.0);
        assert_abs_diff_eq!(r.p_value, 0.25, epsilon = 1e-15);
        assert!(r.exact);
    }

    #[test]
    fn symmetric_pair() {
        let r = wilcoxon_signed_rank(&[1.0, -1.0]).unwrap();
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn zeros_dropped_and_all_zero_rejected() {
        let r = wilcoxon_signed_rank(&[0.0, 1.0, 0.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.n, 3);
        assert!(matches!(wilcoxon_signed_rank(&[0.0, 0.0]), Err(MetricsError::AllZeroDifferences)));
    }

    #[test]
    fn exact_matches_enumeration_with_ties() {
        let cases: [&[f64]; 4] = [
            &[1.0, -1.0, 2.0, 2.0, -3.0],
            &[0.5, 0.5, 0.5, -0.5, 1.5, 2.0, -2.0],
            &[4.0, -1.0, 3.0, 3.0, 3.0, -2.0, 5.0, 6.0],
            &[-1.0, -2.0, -3.0, -4.0, 5.0, 6.0, 7.0, 8.0, 9.0, -9.0, 1.0, 2.0],
        ];
        for d in cases {
            let r = wilcoxon_signed_rank(d).unwrap();
            assert_abs_diff_eq!(r.p_value, brute_force_p(d), epsilon = 1e-12);
        }
    }

    #[test]
    fn normal_approximation_is_monotone() {
        // n = 25 distinct magnitudes; flip the sign of the k smallest
        let mut last: Option<(f64, f64)> = None;
        for k in 0..=12 {
            let diffs: Vec<f64> = (1..=25).map(|i| if i <= k { -(i as f64) } else { i as f64 }).collect();
            let r = wilcoxon_signed_rank(&diffs).unwrap();
            assert!(!r.exact);
            assert!((0.0..=1.0).contains(&r.p_value));
            let dist = (r.statistic - 25.0 * 26.0 / 4.0).abs();
            if let Some((prev_dist, prev_p)) = last {
                assert!(dist < prev_dist);
                assert!(r.p_value >= prev_p);
            }
            last = Some((dist, r.p_value));
        }
    }
}
