//! The dominating random walk `S_0 = 1, S_t = S_{t-1} + xi_t - 1` with
//! `xi_t ~ Bin(n, p)` i.i.d., stopped at
//! `gamma = min{t >= 1 : S_t >= H or S_t = 0}` and optionally capped.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::params::{ceil_cube_root, window_probability};
use crate::rng::{sample_hypergeometric, BinomialSampler, RngStream};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkParams {
    /// Trials per increment.
    pub n: u64,
    pub p: f64,
    /// Upper barrier `H`.
    pub barrier: u64,
    /// Optional step cap.
    pub cap: Option<u64>,
}

impl WalkParams {
    pub fn new(n: u64, p: f64, barrier: u64) -> Result<Self> {
        let params = Self {
            n,
            p,
            barrier,
            cap: None,
        };
        params.validate()?;
        Ok(params)
    }

    /// `p = 1/n`.
    pub fn critical(n: u64, barrier: u64) -> Result<Self> {
        if n == 0 {
            return Err(domain("walk needs n >= 1"));
        }
        Self::new(n, 1.0 / n as f64, barrier)
    }

    /// `p = 1/n + lambda n^{-4/3}` with barrier `ceil(n^{1/3})`.
    pub fn window(n: u64, lambda: f64) -> Result<Self> {
        Self::new(n, window_probability(n, lambda)?, ceil_cube_root(n))
    }

    pub fn with_cap(mut self, cap: u64) -> Result<Self> {
        self.cap = Some(cap);
        self.validate()?;
        Ok(self)
    }

    /// Cap at `H^2`, the truncation `gamma* = gamma ^ H^2`.
    pub fn with_square_cap(self) -> Result<Self> {
        let cap = self
            .barrier
            .checked_mul(self.barrier)
            .ok_or_else(|| domain("H^2 overflows"))?;
        self.with_cap(cap)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(domain("walk needs n >= 1"));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(domain(format!("probability {} is outside [0, 1]", self.p)));
        }
        if self.barrier == 0 {
            return Err(domain("barrier H must be >= 1"));
        }
        if self.cap == Some(0) {
            return Err(domain("step cap must be >= 1"));
        }
        if self.barrier >= i64::MAX as u64 / 2 {
            return Err(domain("barrier too large for signed walk arithmetic"));
        }
        Ok(())
    }

    pub fn is_critical(&self) -> bool {
        self.p == 1.0 / self.n as f64
    }

    /// Mean increment `np - 1`, evaluated on the stored probability.
    pub fn drift(&self) -> f64 {
        self.n as f64 * self.p - 1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkOutcome {
    /// Stopping step (`gamma`, or the cap).
    pub gamma: u64,
    pub s_final: i64,
    /// `S_gamma - H` when the barrier was reached.
    pub overshoot: Option<i64>,
    pub hit_top: bool,
    /// Stopped by the cap before `gamma`.
    pub capped: bool,
}

impl WalkOutcome {
    /// The event `{S_{gamma*} > 0}`.
    pub fn positive_at_stop(&self) -> bool {
        self.s_final > 0
    }
}

fn run_with(params: &WalkParams, sampler: &BinomialSampler, rng: &mut RngStream) -> WalkOutcome {
    let h = params.barrier as i64;
    let cap = params.cap.unwrap_or(u64::MAX);
    let mut s: i64 = 1;
    let mut t = 0u64;
    loop {
        let xi = sampler.sample(params.n, rng) as i64;
        s += xi - 1;
        t += 1;
        if s >= h {
            return WalkOutcome {
                gamma: t,
                s_final: s,
                overshoot: Some(s - h),
                hit_top: true,
                capped: false,
            };
        }
        if s == 0 {
            return WalkOutcome {
                gamma: t,
                s_final: 0,
                overshoot: None,
                hit_top: false,
                capped: false,
            };
        }
        if t == cap {
            return WalkOutcome {
                gamma: t,
                s_final: s,
                overshoot: None,
                hit_top: false,
                capped: true,
            };
        }
    }
}

/// Simulate the walk to `gamma`, or to the cap if one is set.
pub fn run_walk(params: &WalkParams, rng: &mut RngStream) -> Result<WalkOutcome> {
    params.validate()?;
    let sampler = BinomialSampler::new(params.p)?;
    Ok(run_with(params, &sampler, rng))
}

/// Simulate `gamma* = gamma ^ H^2` for the critical walk (`p = 1/n`).
pub fn run_walk_capped(params: &WalkParams, rng: &mut RngStream) -> Result<WalkOutcome> {
    if !params.is_critical() {
        return Err(domain("the capped walk is defined for p = 1/n"));
    }
    let capped = params.with_square_cap()?;
    run_walk(&capped, rng)
}

/// Walk with `p = 1/n + lambda n^{-4/3}`; `params.p` is replaced, the barrier
/// and cap are kept.
pub fn run_drift_walk(
    params: &WalkParams,
    lambda: f64,
    rng: &mut RngStream,
) -> Result<WalkOutcome> {
    let drifted = WalkParams {
        p: window_probability(params.n, lambda)?,
        ..*params
    };
    run_walk(&drifted, rng)
}

/// Run `trials` independent walks on streams `(seed, first_stream + i)` and
/// return the outcomes in stream order.
pub fn run_walks(
    params: &WalkParams,
    seed: u64,
    first_stream: u64,
    trials: u64,
) -> Result<Vec<WalkOutcome>> {
    params.validate()?;
    let sampler = BinomialSampler::new(params.p)?;
    Ok((first_stream..first_stream + trials)
        .into_par_iter()
        .map(|i| run_with(params, &sampler, &mut RngStream::new(seed, i)))
        .collect())
}

/// Overshoots `S_gamma - H` of the runs that reached the barrier, in stream
/// order. May be empty.
pub fn collect_overshoots(params: &WalkParams, trials: u64, seed: u64) -> Result<Vec<u64>> {
    collect_overshoots_from(params, seed, 0, trials)
}

pub(crate) fn collect_overshoots_from(
    params: &WalkParams,
    seed: u64,
    first_stream: u64,
    trials: u64,
) -> Result<Vec<u64>> {
    params.validate()?;
    let sampler = BinomialSampler::new(params.p)?;
    Ok((first_stream..first_stream + trials)
        .into_par_iter()
        .filter_map(|i| {
            run_with(params, &sampler, &mut RngStream::new(seed, i))
                .overshoot
                .map(|o| o as u64)
        })
        .collect())
}

/// One step of the coupled pair `(S_t, Y_t)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CoupledStep {
    pub xi: u64,
    pub eta: u64,
    pub walk: i64,
    pub active: u64,
}

/// Drive the walk and the exploration process from shared randomness until
/// the walk stops at `gamma`: `xi_t ~ Bin(n, p)` and `eta_t` counts how many
/// of those `xi_t` successes land among the `N_{t-1}` trials that correspond
/// to neutral vertices (a hypergeometric thinning). Both marginals are exact
/// and `eta_t <= xi_t` on every path.
pub fn run_coupled(n: u64, p: f64, barrier: u64, rng: &mut RngStream) -> Result<Vec<CoupledStep>> {
    let params = WalkParams::new(n, p, barrier)?;
    let sampler = BinomialSampler::new(params.p)?;
    let h = barrier as i64;
    let mut s: i64 = 1;
    let mut y: u64 = 1;
    let mut t: u64 = 0;
    let mut path = Vec::new();
    while t < n {
        let neutral = n - y - t - u64::from(y == 0);
        let xi = sampler.sample(n, rng);
        let eta = sample_hypergeometric(n, neutral, xi, rng)?;
        s += xi as i64 - 1;
        y = if y > 0 { y + eta - 1 } else { eta };
        t += 1;
        path.push(CoupledStep {
            xi,
            eta,
            walk: s,
            active: y,
        });
        if s >= h || s == 0 {
            break;
        }
    }
    Ok(path)
}
