use super::MetricsError;

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j averaged
        let avg = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman's rank correlation: Pearson correlation of average ranks.
pub fn spearman_rho(pred: &[f64], gold: &[f64]) -> Result<f64, MetricsError> {
    if pred.len() != gold.len() {
        return Err(MetricsError::LengthMismatch(pred.len(), gold.len()));
    }
    if pred.len() < 2 {
        return Err(MetricsError::TooFew { need: 2, got: pred.len() });
    }
    pearson(&average_ranks(pred), &average_ranks(gold)).ok_or(MetricsError::UndefinedCorrelation)
}

/// Root mean squared difference.
pub fn rmse(pred: &[f64], gold: &[f64]) -> Result<f64, MetricsError> {
    if pred.len() != gold.len() {
        return Err(MetricsError::LengthMismatch(pred.len(), gold.len()));
    }
    if pred.is_empty() {
        return Err(MetricsError::Empty);
    }
    let sq: f64 = pred.iter().zip(gold).map(|(p, g)| (p - g) * (p - g)).sum();
    Ok((sq / pred.len() as f64).sqrt())
}
