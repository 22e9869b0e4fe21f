//! Seed-addressable random streams and exact discrete samplers.
//!
//! Every Monte Carlo trial owns one [`RngStream`], identified by the pair
//! `(master_seed, stream_index)`. Streams are ChaCha8 keystreams: the key is
//! expanded from the master seed and the 64-bit ChaCha stream id is the trial
//! index, so streams never overlap and can be constructed in any order on any
//! thread.
//!
//! Binomial variates are generated by inversion with a log-space seed,
//! `P(0) = exp(N ln(1 - p))`, which stays finite for `N = 10^9, p = 10^-9`
//! where `(1 - p)^N` computed by repeated multiplication or `powf` would lose
//! accuracy. Only when `N min(p, 1-p) > 30` does the sampler hand over to the
//! BTPE rejection algorithm.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Result};

/// Above this mean the inversion walk gets long; BTPE takes over.
const INVERSION_MEAN_LIMIT: f64 = 30.0;

/// A deterministic random stream for a single trial.
#[derive(Clone, Debug)]
pub struct RngStream {
    master_seed: u64,
    stream_index: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream(stream_index);
        Self {
            master_seed,
            stream_index,
            inner,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `(0, 1]`.
    #[inline]
    pub fn uniform_pos(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, bound)`; `bound` must be positive.
    #[inline]
    pub fn below(&mut self, bound: u64) -> u64 {
        self.inner.random_range(0..bound)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(domain(format!("probability {p} is outside [0, 1]")))
    }
}

/// Binomial sampler for a fixed success probability and a varying trial
/// count, the access pattern of the exploration process.
#[derive(Clone, Copy, Debug)]
pub struct BinomialSampler {
    p: f64,
    /// min(p, 1 - p)
    small: f64,
    flipped: bool,
    /// ln(1 - small)
    ln_q: f64,
    /// small / (1 - small)
    odds: f64,
}

impl BinomialSampler {
    pub fn new(p: f64) -> Result<Self> {
        check_probability(p)?;
        let flipped = p > 0.5;
        let small = if flipped { 1.0 - p } else { p };
        Ok(Self {
            p,
            small,
            flipped,
            ln_q: (-small).ln_1p(),
            odds: small / (1.0 - small),
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Draw from `Binomial(trials, p)`.
    #[inline]
    pub fn sample(&self, trials: u64, rng: &mut RngStream) -> u64 {
        if trials == 0 || self.p == 0.0 {
            return 0;
        }
        if self.p == 1.0 {
            return trials;
        }
        let k = if trials as f64 * self.small > INVERSION_MEAN_LIMIT {
            rand_distr::Binomial::new(trials, self.small)
                .expect("probability validated at construction")
                .sample_with(rng)
        } else {
            self.invert(trials, rng)
        };
        if self.flipped {
            trials - k
        } else {
            k
        }
    }

    #[inline]
    fn invert(&self, trials: u64, rng: &mut RngStream) -> u64 {
        let p0 = (trials as f64 * self.ln_q).exp();
        loop {
            let mut u = rng.uniform();
            let mut pk = p0;
            let mut k = 0u64;
            loop {
                if u < pk {
                    return k;
                }
                u -= pk;
                if k == trials {
                    break;
                }
                pk *= self.odds * (trials - k) as f64 / (k + 1) as f64;
                k += 1;
                if pk == 0.0 {
                    break;
                }
            }
            // u fell into the rounding residue beyond the representable
            // tail (probability ~1e-16); redraw.
        }
    }
}

trait SampleWith {
    fn sample_with(&self, rng: &mut RngStream) -> u64;
}

impl SampleWith for rand_distr::Binomial {
    fn sample_with(&self, rng: &mut RngStream) -> u64 {
        rand_distr::Distribution::sample(self, rng)
    }
}

/// Exact draw from `Binomial(trials, p)`.
pub fn sample_binomial(trials: u64, p: f64, rng: &mut RngStream) -> Result<u64> {
    Ok(BinomialSampler::new(p)?.sample(trials, rng))
}

/// Number of Bernoulli(p) trials up to and including the first success.
pub fn sample_geometric_gap(p: f64, rng: &mut RngStream) -> Result<u64> {
    check_probability(p)?;
    if p == 0.0 {
        return Err(domain("geometric gap needs p > 0"));
    }
    Ok(geometric_gap(p, (-p).ln_1p(), rng))
}

#[inline]
pub(crate) fn geometric_gap(p: f64, ln_q: f64, rng: &mut RngStream) -> u64 {
    if p == 1.0 {
        return 1;
    }
    let failures = (rng.uniform_pos().ln() / ln_q).floor();
    if failures >= u64::MAX as f64 {
        u64::MAX
    } else {
        failures as u64 + 1
    }
}

pub fn sample_bernoulli(p: f64, rng: &mut RngStream) -> Result<bool> {
    check_probability(p)?;
    Ok(rng.uniform() < p)
}

/// Number of marked items among `draws` picked without replacement from a
/// population of `population` items of which `marked` are marked.
///
/// Cost is `O(draws)`; the coupling only ever thins a handful of successes.
pub fn sample_hypergeometric(
    population: u64,
    marked: u64,
    draws: u64,
    rng: &mut RngStream,
) -> Result<u64> {
    if marked > population || draws > population {
        return Err(domain(format!(
            "hypergeometric({population}, {marked}, {draws}) is not a valid law"
        )));
    }
    let mut hits = 0;
    for i in 0..draws {
        if rng.below(population - i) < marked - hits {
            hits += 1;
        }
    }
    Ok(hits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_probabilities() {
        let mut rng = RngStream::new(1, 0);
        for n in [0, 1, 7, 1_000_000_000] {
            assert_eq!(sample_binomial(n, 0.0, &mut rng).unwrap(), 0);
            assert_eq!(sample_binomial(n, 1.0, &mut rng).unwrap(), n);
        }
        assert_eq!(sample_binomial(7, 1.0, &mut rng).unwrap(), 7);
    }

    #[test]
    fn rejects_bad_probability() {
        let mut rng = RngStream::new(1, 0);
        assert!(sample_binomial(5, -0.1, &mut rng).is_err());
        assert!(sample_binomial(5, 1.5, &mut rng).is_err());
        assert!(sample_binomial(5, f64::NAN, &mut rng).is_err());
        assert!(sample_geometric_gap(0.0, &mut rng).is_err());
        assert!(sample_geometric_gap(1.01, &mut rng).is_err());
    }

    #[test]
    fn geometric_certainty() {
        let mut rng = RngStream::new(3, 9);
        for _ in 0..1000 {
            assert_eq!(sample_geometric_gap(1.0, &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let draw = |seed, idx| {
            let mut r = RngStream::new(seed, idx);
            (0..64).map(|_| r.next_u64()).collect::<Vec<_>>()
        };
        assert_eq!(draw(11, 4), draw(11, 4));
        assert_ne!(draw(11, 4), draw(11, 5));
        assert_ne!(draw(11, 4), draw(12, 4));
    }

    #[test]
    fn uniform_ranges() {
        let mut rng = RngStream::new(0, 0);
        for _ in 0..10_000 {
            let u = rng.uniform();
            assert!((0.0..1.0).contains(&u));
            let v = rng.uniform_pos();
            assert!(v > 0.0 && v <= 1.0);
        }
    }

    #[test]
    fn hypergeometric_edges() {
        let mut rng = RngStream::new(5, 5);
        assert_eq!(sample_hypergeometric(10, 10, 4, &mut rng).unwrap(), 4);
        assert_eq!(sample_hypergeometric(10, 0, 4, &mut rng).unwrap(), 0);
        assert_eq!(sample_hypergeometric(10, 3, 10, &mut rng).unwrap(), 3);
        assert!(sample_hypergeometric(10, 11, 1, &mut rng).is_err());
    }

    #[test]
    fn huge_trial_count_small_p_stays_near_mean() {
        let s = BinomialSampler::new(1e-9).unwrap();
        let mut rng = RngStream::new(8, 1);
        let m = 200_000;
        let total: u64 = (0..m).map(|_| s.sample(1_000_000_000, &mut rng)).sum();
        let mean = total as f64 / m as f64;
        // Np = 1, Var ~ 1
        assert!((mean - 1.0).abs() < 4.0 * (1.0 / m as f64).sqrt(), "{mean}");
    }
}
