//! Interval estimates and distribution comparisons used by the harness.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{domain, Result};

/// Upper `alpha` quantile of the standard normal.
pub fn normal_quantile_upper(alpha: f64) -> f64 {
    Normal::standard().inverse_cdf(1.0 - alpha)
}

/// One-sided Wilson score bounds, each at confidence `1 - alpha`.
pub fn wilson_bounds(successes: u64, trials: u64, alpha: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let m = trials as f64;
    let p = successes as f64 / m;
    let z = normal_quantile_upper(alpha);
    let z2 = z * z;
    let center = p + z2 / (2.0 * m);
    let spread = z * (p * (1.0 - p) / m + z2 / (4.0 * m * m)).sqrt();
    let denom = 1.0 + z2 / m;
    let low = ((center - spread) / denom).max(0.0);
    let high = ((center + spread) / denom).min(1.0);
    (low.min(p), high.max(p))
}

/// Binomial proportion estimate with one-sided Wilson bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub successes: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub alpha: f64,
}

impl TailEstimate {
    pub fn new(successes: u64, trials: u64, alpha: f64) -> Result<Self> {
        if trials == 0 {
            return Err(domain("estimate needs at least one trial"));
        }
        if successes > trials {
            return Err(domain("more successes than trials"));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(domain(format!("alpha = {alpha} must lie in (0, 1)")));
        }
        let (ci_low, ci_high) = wilson_bounds(successes, trials, alpha);
        Ok(Self {
            successes,
            trials,
            p_hat: successes as f64 / trials as f64,
            ci_low,
            ci_high,
            alpha,
        })
    }

    /// `sqrt(p_hat (1 - p_hat) / trials)`
    pub fn std_error(&self) -> f64 {
        (self.p_hat * (1.0 - self.p_hat) / self.trials as f64).sqrt()
    }
}

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub count: u64,
}

impl MeanEstimate {
    /// Two-pass mean and variance over the values in the given order.
    pub fn from_values<I>(values: I) -> Self
    where
        I: IntoIterator<Item = f64>,
        I::IntoIter: Clone,
    {
        let it = values.into_iter();
        let (count, sum) = it.clone().fold((0u64, 0.0), |(c, s), x| (c + 1, s + x));
        if count == 0 {
            return Self {
                mean: f64::NAN,
                std_error: f64::NAN,
                count: 0,
            };
        }
        let mean = sum / count as f64;
        let ss: f64 = it.map(|x| (x - mean) * (x - mean)).sum();
        let var = if count > 1 {
            ss / (count - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            std_error: (var / count as f64).sqrt(),
            count,
        }
    }

    pub fn z_against(&self, target: f64) -> f64 {
        if self.std_error > 0.0 {
            (self.mean - target) / self.std_error
        } else if self.mean == target {
            0.0
        } else {
            f64::INFINITY.copysign(self.mean - target)
        }
    }
}

/// Total variation distance between two distributions on `0..len`.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().max(b.len());
    0.5 * (0..len)
        .map(|i| (a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

/// Empirical pmf of `values` over `0..len` (values `>= len` are dropped).
pub fn empirical_pmf(values: &[u64], len: usize) -> Vec<f64> {
    let mut counts = vec![0u64; len];
    for &v in values {
        if let Some(c) = counts.get_mut(v as usize) {
            *c += 1;
        }
    }
    let m = values.len().max(1) as f64;
    counts.into_iter().map(|c| c as f64 / m).collect()
}

/// `Bin(n, p)` CDF at `0..=upto`, by pmf recurrence from
/// `P(0) = exp(n ln(1 - p))`.
pub fn binomial_cdf(n: u64, p: f64, upto: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity(upto as usize + 1);
    if p == 0.0 || n == 0 {
        out.resize(upto as usize + 1, 1.0);
        return out;
    }
    if p == 1.0 {
        out.extend((0..=upto).map(|k| if k >= n { 1.0 } else { 0.0 }));
        return out;
    }
    let odds = p / (1.0 - p);
    let mut pk = (n as f64 * (-p).ln_1p()).exp();
    let mut cdf = 0.0;
    for k in 0..=upto {
        if k > n {
            out.push(1.0);
            continue;
        }
        cdf += pk;
        out.push(cdf.min(1.0));
        pk *= odds * (n - k) as f64 / (k + 1) as f64;
    }
    out
}

/// `sqrt(ln(2 / alpha) / (2 m))`
pub fn dkw_epsilon(samples: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * samples as f64)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_reference_values() {
        // z_{0.99} = 2.3263478740
        assert!((normal_quantile_upper(0.01) - 2.326_347_874_040_841).abs() < 1e-9);
        let (lo, hi) = wilson_bounds(0, 100, 0.01);
        assert_eq!(lo, 0.0);
        let z2 = 2.326_347_874_040_841f64.powi(2);
        assert!((hi - z2 / (100.0 + z2)).abs() < 1e-12);
        let (lo, hi) = wilson_bounds(100, 100, 0.01);
        assert_eq!(hi, 1.0);
        assert!((lo - 100.0 / (100.0 + z2)).abs() < 1e-12);
        let (lo, hi) = wilson_bounds(50, 100, 0.05);
        assert!(lo < 0.5 && hi > 0.5);
        assert!((0.5 - lo - (hi - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn estimate_invariants() {
        for (s, m) in [(0, 1), (1, 1), (3, 10), (9, 10), (12, 100_000)] {
            let e = TailEstimate::new(s, m, 0.01).unwrap();
            assert!(e.ci_low <= e.p_hat && e.p_hat <= e.ci_high);
            assert!((0.0..=1.0).contains(&e.p_hat));
        }
        assert!(TailEstimate::new(2, 1, 0.01).is_err());
        assert!(TailEstimate::new(0, 0, 0.01).is_err());
        assert!(TailEstimate::new(0, 5, 1.0).is_err());
    }

    #[test]
    fn tv_and_pmf() {
        assert_eq!(total_variation(&[0.5, 0.5], &[0.5, 0.5]), 0.0);
        assert!((total_variation(&[1.0], &[0.0, 1.0]) - 1.0).abs() < 1e-15);
        assert_eq!(empirical_pmf(&[0, 1, 1, 3], 3), vec![0.25, 0.5, 0.0]);
    }

    #[test]
    fn binomial_cdf_against_enumeration() {
        // Bin(4, 1/2): pmf (1, 4, 6, 4, 1) / 16
        let cdf = binomial_cdf(4, 0.5, 6);
        let expect = [1.0, 5.0, 11.0, 15.0, 16.0, 16.0, 16.0].map(|x| x / 16.0);
        for (a, b) in cdf.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(binomial_cdf(10, 0.0, 2), vec![1.0; 3]);
        assert_eq!(binomial_cdf(2, 1.0, 3), vec![0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn mean_estimate() {
        let m = MeanEstimate::from_values([1.0, 2.0, 3.0]);
        assert_eq!(m.mean, 2.0);
        assert!((m.std_error - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(MeanEstimate::from_values([5.0; 4]).z_against(5.0), 0.0);
    }

    #[test]
    fn dkw() {
        // ln(200) = 5.298317366548036
        assert!(
            (dkw_epsilon(1_000_000, 0.01) - (5.298_317_366_548_036f64 / 2e6).sqrt()).abs() < 1e-15
        );
    }
}
