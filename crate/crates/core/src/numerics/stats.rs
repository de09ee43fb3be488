//! Set and distribution statistics.

use std::collections::BTreeSet;

use crate::error::{domain_err, Result};

/// Jaccard index |A∩B| / |A∪B|.
///
/// Two empty sets compare as maximally similar (1.0); callers measuring
/// interaction histories never hit that case after the first step, but the
/// convention keeps the metric total.
pub fn jaccard(a: &BTreeSet<u32>, b: &BTreeSet<u32>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

/// Shannon entropy in nats of a probability vector, with 0·ln0 = 0.
pub fn shannon_entropy(p: &[f64]) -> Result<f64> {
    let mut sum = 0.0;
    for &x in p {
        if x < 0.0 {
            return domain_err("entropy: negative probability component");
        }
        sum += x;
    }
    if (sum - 1.0).abs() > 1e-9 {
        return domain_err(format!("entropy: probabilities sum to {sum}, expected 1"));
    }
    let mut h = 0.0;
    for &x in p {
        if x > 0.0 {
            h -= x * x.ln();
        }
    }
    Ok(h)
}

/// Pearson correlation of two equal-length samples. Returns 0 when either
/// side has zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx.sqrt() * syy.sqrt())
}
