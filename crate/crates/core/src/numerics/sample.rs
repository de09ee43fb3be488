//! Distribution sampling: Dirichlet, mean-parameterized Beta, and truncated
//! discrete power-law degree sequences.

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma};

use crate::error::{domain_err, Result};

/// Draw from Dirichlet(alpha) via normalized Gamma draws.
///
/// Components are ≥ 0 and sum to 1 within 1e-12. Very small concentrations
/// can underflow every Gamma draw to zero; in that case the draw is retried,
/// and after repeated underflow the mass is placed on the largest-alpha
/// component (an event with vanishing probability for any usable alpha).
pub fn sample_dirichlet<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if alpha.is_empty() {
        return domain_err("dirichlet: empty concentration vector");
    }
    if alpha.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
        return domain_err("dirichlet: concentrations must be positive and finite");
    }
    let gammas: Vec<Gamma<f64>> = alpha
        .iter()
        .map(|&a| Gamma::new(a, 1.0).expect("alpha validated positive"))
        .collect();
    for _ in 0..100 {
        let draws: Vec<f64> = gammas.iter().map(|g| g.sample(rng)).collect();
        let sum: f64 = draws.iter().sum();
        if sum > 0.0 && sum.is_finite() {
            return Ok(draws.into_iter().map(|x| x / sum).collect());
        }
    }
    let mut out = vec![0.0; alpha.len()];
    let argmax = alpha
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    out[argmax] = 1.0;
    Ok(out)
}

/// Draw from a Beta distribution parameterized by its mean:
/// Beta(mean·ν, (1−mean)·ν). Means of exactly 0 or 1 are degenerate and
/// returned as-is.
pub fn sample_beta_mean<R: Rng + ?Sized>(
    mean: f64,
    concentration: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(concentration > 0.0) || !concentration.is_finite() {
        return domain_err(format!("beta: concentration {concentration} must be > 0"));
    }
    if !(0.0..=1.0).contains(&mean) {
        return domain_err(format!("beta: mean {mean} outside [0,1]"));
    }
    if mean == 0.0 || mean == 1.0 {
        return Ok(mean);
    }
    let beta = Beta::new(mean * concentration, (1.0 - mean) * concentration)
        .expect("parameters validated positive");
    Ok(beta.sample(rng))
}

/// Sampler for the truncated discrete power law P(k) ∝ k^(−α), 1 ≤ k ≤ kmax.
pub struct PowerLawDegrees {
    cdf: Vec<f64>,
}

impl PowerLawDegrees {
    pub fn new(kmax: usize, alpha: f64) -> Result<Self> {
        if alpha <= 1.0 || !alpha.is_finite() {
            return domain_err(format!("power law: alpha {alpha} must be > 1"));
        }
        if kmax < 1 {
            return domain_err("power law: kmax must be at least 1");
        }
        let mut cdf = Vec::with_capacity(kmax);
        let mut acc = 0.0;
        for k in 1..=kmax {
            acc += (k as f64).powf(-alpha);
            cdf.push(acc);
        }
        let total = acc;
        for v in &mut cdf {
            *v /= total;
        }
        Ok(PowerLawDegrees { cdf })
    }

    /// Inverse-CDF draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cdf.partition_point(|&c| c <= u) + 1
    }
}

/// I.i.d. degree sequence from the power law truncated at n−1, with the sum
/// forced even (configuration-model wiring requires it) by incrementing one
/// uniformly chosen node.
pub fn sample_power_law_degrees<R: Rng + ?Sized>(
    n: usize,
    alpha: f64,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if n < 2 {
        return domain_err("power law degrees: need n >= 2");
    }
    let dist = PowerLawDegrees::new(n - 1, alpha)?;
    let mut degrees: Vec<usize> = (0..n).map(|_| dist.sample(rng)).collect();
    if degrees.iter().sum::<usize>() % 2 == 1 {
        let lucky = rng.random_range(0..n);
        degrees[lucky] += 1;
    }
    Ok(degrees)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::RngStream;

    #[test]
    fn dirichlet_is_on_simplex() {
        let mut rng = RngStream::new(1, 0).rng();
        for _ in 0..200 {
            let x = sample_dirichlet(&[0.3, 1.0, 5.0, 0.05], &mut rng).unwrap();
            assert!(x.iter().all(|v| *v >= 0.0));
            assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dirichlet_monte_carlo_means() {
        // Symmetric Dirichlet(10) in 20 dimensions: E[x_i] = 0.05.
        let alpha = vec![10.0; 20];
        let mut rng = RngStream::new(7, 0).rng();
        let mut sums = vec![0.0; 20];
        let n = 10_000;
        for _ in 0..n {
            let x = sample_dirichlet(&alpha, &mut rng).unwrap();
            for (s, v) in sums.iter_mut().zip(&x) {
                *s += v;
            }
        }
        for s in sums {
            let mean = s / n as f64;
            assert!((mean - 0.05).abs() < 0.01, "component mean {mean}");
        }
    }

    #[test]
    fn dirichlet_concentration_limit() {
        let mut alpha = vec![1e-9; 8];
        alpha[0] = 1e6;
        let mut rng = RngStream::new(3, 0).rng();
        let x = sample_dirichlet(&alpha, &mut rng).unwrap();
        assert!(x[0] > 0.999);
    }

    #[test]
    fn dirichlet_fixed_seed_reproducible() {
        let alpha = vec![2.0, 3.0, 4.0];
        let a = sample_dirichlet(&alpha, &mut RngStream::new(11, 4).rng()).unwrap();
        let b = sample_dirichlet(&alpha, &mut RngStream::new(11, 4).rng()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dirichlet_rejects_nonpositive_alpha() {
        let mut rng = RngStream::new(1, 0).rng();
        assert!(sample_dirichlet(&[1.0, 0.0], &mut rng).is_err());
        assert!(sample_dirichlet(&[1.0, -2.0], &mut rng).is_err());
        assert!(sample_dirichlet(&[], &mut rng).is_err());
    }

    #[test]
    fn beta_mean_monte_carlo() {
        let mut rng = RngStream::new(5, 0).rng();
        let n = 10_000;
        let mut acc = 0.0;
        for _ in 0..n {
            acc += sample_beta_mean(0.5, 1000.0, &mut rng).unwrap();
        }
        let mean = acc / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "sample mean {mean}");
    }

    #[test]
    fn beta_mean_degenerate_ends() {
        let mut rng = RngStream::new(5, 0).rng();
        assert_eq!(sample_beta_mean(0.0, 10.0, &mut rng).unwrap(), 0.0);
        assert_eq!(sample_beta_mean(1.0, 10.0, &mut rng).unwrap(), 1.0);
    }

    #[test]
    fn beta_rejects_bad_concentration() {
        let mut rng = RngStream::new(5, 0).rng();
        assert!(sample_beta_mean(0.5, 0.0, &mut rng).is_err());
        assert!(sample_beta_mean(0.5, -1.0, &mut rng).is_err());
    }

    #[test]
    fn power_law_mean_matches_zeta_ratio() {
        // Independent oracle: truncated zeta ratio sum(k^-1.5)/sum(k^-2.5)
        // computed numerically; for kmax = 1e5 this is ≈ 1.9427, within the
        // 2% band around the untruncated ratio 1.947.
        let n = 100_001;
        let kmax = n - 1;
        let num: f64 = (1..=kmax).map(|k| (k as f64).powf(-1.5)).sum();
        let den: f64 = (1..=kmax).map(|k| (k as f64).powf(-2.5)).sum();
        let oracle_mean = num / den;
        assert!((oracle_mean - 1.947).abs() / 1.947 < 0.02);

        let mut rng = RngStream::new(9, 0).rng();
        let dist = PowerLawDegrees::new(kmax, 2.5).unwrap();
        let draws = 1_000_000;
        let sum: usize = (0..draws).map(|_| dist.sample(&mut rng)).sum();
        let mean = sum as f64 / draws as f64;
        assert!(
            (mean - oracle_mean).abs() / oracle_mean < 0.02,
            "sample mean {mean} vs oracle {oracle_mean}"
        );
    }

    #[test]
    fn power_law_steep_exponent_mostly_ones() {
        let mut rng = RngStream::new(13, 0).rng();
        let degrees = sample_power_law_degrees(10_000, 10.0, &mut rng).unwrap();
        let ones = degrees.iter().filter(|d| **d == 1).count();
        assert!(ones as f64 >= 0.99 * degrees.len() as f64);
    }

    #[test]
    fn power_law_sum_is_even_and_reproducible() {
        let a = sample_power_law_degrees(501, 2.1, &mut RngStream::new(2, 8).rng()).unwrap();
        let b = sample_power_law_degrees(501, 2.1, &mut RngStream::new(2, 8).rng()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.iter().sum::<usize>() % 2, 0);
        assert!(a.iter().all(|d| *d >= 1));
    }

    #[test]
    fn power_law_rejects_alpha_at_most_one() {
        let mut rng = RngStream::new(1, 0).rng();
        assert!(sample_power_law_degrees(100, 1.0, &mut rng).is_err());
        assert!(sample_power_law_degrees(100, 0.5, &mut rng).is_err());
    }
}
