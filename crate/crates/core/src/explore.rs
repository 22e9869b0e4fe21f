//! The exploration process at the level of counts.
//!
//! At time `t` the process holds `Y_t` active vertices, `t` explored vertices
//! and `N_t = n - Y_t - t - [Y_t = 0]` neutral ones. Step `t` explores one
//! vertex `w_t` (the first active one, or a fresh neutral one when `Y_{t-1}`
//! is zero) and activates `eta_t ~ Bin(N_{t-1}, p)` of the neutral vertices:
//!
//! ```text
//! Y_t = Y_{t-1} + eta_t - 1   if Y_{t-1} > 0
//! Y_t = eta_t                 if Y_{t-1} = 0
//! ```
//!
//! Components end exactly at the zeros of `Y`, so component sizes are the
//! gaps between consecutive zeros (with a zero placed at `t = 0`). Vertex
//! identities are never tracked; state is `O(1)`.

use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::params::{ascent_height, floor_two_thirds, GraphParams};
use crate::rng::{BinomialSampler, RngStream};

/// Default cap on recorded trace length.
pub const DEFAULT_TRACE_CAP: usize = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessState {
    pub t: u64,
    pub active: u64,
    pub neutral: u64,
}

/// The exploration process over one realization of `G(n, p)`.
#[derive(Clone, Debug)]
pub struct Exploration {
    n: u64,
    sampler: BinomialSampler,
    t: u64,
    active: u64,
}

impl Exploration {
    /// Start with `Y_0 = 1`.
    pub fn new(params: &GraphParams) -> Result<Self> {
        if params.n == 0 {
            return Err(domain("vertex count must be positive"));
        }
        Ok(Self {
            n: params.n,
            sampler: BinomialSampler::new(params.p)?,
            t: 0,
            active: 1,
        })
    }

    pub fn state(&self) -> ProcessState {
        ProcessState {
            t: self.t,
            active: self.active,
            neutral: self.neutral(),
        }
    }

    #[inline]
    fn neutral(&self) -> u64 {
        self.n - self.active - self.t - u64::from(self.active == 0 && self.t < self.n)
    }

    pub fn is_finished(&self) -> bool {
        self.t == self.n
    }

    /// Perform one step and return `Y_t`. Must not be called once finished.
    #[inline]
    pub fn step(&mut self, rng: &mut RngStream) -> u64 {
        debug_assert!(self.t < self.n);
        let eta = self.sampler.sample(self.neutral(), rng);
        self.active = if self.active > 0 {
            self.active + eta - 1
        } else {
            eta
        };
        self.t += 1;
        self.active
    }
}

/// Result of exploring the component of a single vertex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentRun {
    pub size: u64,
    /// `Y_1, ..., Y_size` when recording was requested.
    pub trace: Option<Vec<u64>>,
    /// The trace hit its cap and holds only a prefix.
    pub trace_truncated: bool,
}

/// Explore the component of a fixed vertex; its size is distributed as
/// `|C(v)|` in `G(n, p)`.
pub fn explore_component(
    params: &GraphParams,
    rng: &mut RngStream,
    record_trace: bool,
) -> Result<ComponentRun> {
    explore_component_capped(params, rng, record_trace.then_some(DEFAULT_TRACE_CAP))
}

pub fn explore_component_capped(
    params: &GraphParams,
    rng: &mut RngStream,
    trace_cap: Option<usize>,
) -> Result<ComponentRun> {
    let mut process = Exploration::new(params)?;
    let mut trace = trace_cap.map(|_| Vec::new());
    let mut truncated = false;
    loop {
        let y = process.step(rng);
        if let (Some(tr), Some(cap)) = (trace.as_mut(), trace_cap) {
            if tr.len() < cap {
                tr.push(y);
            } else {
                truncated = true;
            }
        }
        if y == 0 {
            break;
        }
    }
    Ok(ComponentRun {
        size: process.t,
        trace,
        trace_truncated: truncated,
    })
}

/// Size of the component of a fixed vertex, without allocation.
#[inline]
pub fn component_size(params: &GraphParams, rng: &mut RngStream) -> Result<u64> {
    let mut process = Exploration::new(params)?;
    while process.step(rng) != 0 {}
    Ok(process.t)
}

/// Drive a full sweep, reporting each component size together with the
/// number of vertices not yet explored. The callback may stop the sweep.
pub fn sweep_with<F>(params: &GraphParams, rng: &mut RngStream, mut on_component: F) -> Result<()>
where
    F: FnMut(u64, u64) -> ControlFlow<()>,
{
    let mut process = Exploration::new(params)?;
    let mut last_zero = 0u64;
    while !process.is_finished() {
        if process.step(rng) == 0 {
            let size = process.t - last_zero;
            last_zero = process.t;
            if on_component(size, process.n - process.t).is_break() {
                return Ok(());
            }
        }
    }
    Ok(())
}

/// All component sizes of one realization, in discovery order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepResult {
    pub sizes: Vec<u64>,
    pub largest: u64,
    pub second_largest: u64,
}

impl SweepResult {
    pub fn from_sizes(sizes: Vec<u64>) -> Self {
        let mut top = TopTwo::default();
        sizes.iter().for_each(|&s| top.push(s));
        Self {
            sizes,
            largest: top.first,
            second_largest: top.second,
        }
    }

    pub fn total(&self) -> u64 {
        self.sizes.iter().sum()
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct TopTwo {
    first: u64,
    second: u64,
}

impl TopTwo {
    #[inline]
    fn push(&mut self, s: u64) {
        if s > self.first {
            self.second = self.first;
            self.first = s;
        } else if s > self.second {
            self.second = s;
        }
    }
}

pub fn sweep_components(params: &GraphParams, rng: &mut RngStream) -> Result<SweepResult> {
    let mut sizes = Vec::new();
    sweep_with(params, rng, |s, _| {
        sizes.push(s);
        ControlFlow::Continue(())
    })?;
    Ok(SweepResult::from_sizes(sizes))
}

/// Constant-memory summary of a sweep: the two largest sizes, the component
/// count, and a histogram of sizes in power-of-two bins (bin `k` counts
/// sizes in `[2^k, 2^{k+1})`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub n: u64,
    pub largest: u64,
    pub second_largest: u64,
    pub components: u64,
    pub total: u64,
    pub histogram: Vec<u64>,
}

pub fn sweep_streaming(params: &GraphParams, rng: &mut RngStream) -> Result<SweepSummary> {
    let mut top = TopTwo::default();
    let mut components = 0u64;
    let mut total = 0u64;
    let mut histogram = [0u64; 64];
    sweep_with(params, rng, |s, _| {
        top.push(s);
        components += 1;
        total += s;
        histogram[s.ilog2() as usize] += 1;
        ControlFlow::Continue(())
    })?;
    let used = histogram.iter().rposition(|&c| c > 0).map_or(0, |i| i + 1);
    Ok(SweepSummary {
        n: params.n,
        largest: top.first,
        second_largest: top.second,
        components,
        total,
        histogram: histogram[..used].to_vec(),
    })
}

/// Whether the largest component has at least `threshold` vertices. Stops
/// as soon as the answer is determined; the result equals what a full sweep
/// on the same stream would give.
pub fn largest_at_least(params: &GraphParams, threshold: u64, rng: &mut RngStream) -> Result<bool> {
    if threshold <= 1 {
        return Ok(true);
    }
    let mut found = false;
    sweep_with(params, rng, |size, remaining| {
        if size >= threshold {
            found = true;
            return ControlFlow::Break(());
        }
        if remaining < threshold {
            return ControlFlow::Break(());
        }
        ControlFlow::Continue(())
    })?;
    Ok(found)
}

/// Whether the largest component is smaller than `threshold` vertices.
pub fn largest_below(params: &GraphParams, threshold: u64, rng: &mut RngStream) -> Result<bool> {
    Ok(!largest_at_least(params, threshold, rng)?)
}

/// Ascent height and horizons for the two-stage lower-tail argument.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageParams {
    pub h: u64,
    pub t1: u64,
    pub t2: u64,
    /// Side conditions required by the argument and whether they hold.
    pub conditions: Vec<(String, bool)>,
}

impl StageParams {
    pub fn all_hold(&self) -> bool {
        self.conditions.iter().all(|(_, ok)| *ok)
    }
}

/// `T2 = floor(delta n^{2/3})`, `h = floor(delta^{1/5} n^{1/3} / 24^{1/5})`,
/// `T1 = ceil(n / (8h))`.
pub fn stage_params(delta: f64, n: u64) -> Result<StageParams> {
    if !(delta > 0.0 && delta < 0.1) {
        return Err(domain(format!("delta = {delta} must lie in (0, 1/10)")));
    }
    let n_min = 200.0 / delta.powf(0.6);
    if n as f64 <= n_min {
        return Err(domain(format!(
            "n = {n} must exceed 200 / delta^(3/5) = {n_min:.1}"
        )));
    }
    let t2 = floor_two_thirds(delta, n)?;
    let h = ascent_height(delta, n)?;
    if h == 0 || t2 == 0 {
        return Err(domain("ascent height or horizon rounds to zero"));
    }
    let t1 = n.div_ceil(8 * h);
    let conditions = vec![
        ("h >= 3".to_string(), h >= 3),
        (
            "h < sqrt(n)/4".to_string(),
            16 * (h as u128).pow(2) < n as u128,
        ),
        (
            "T2 <= n/(8h)".to_string(),
            8 * (h as u128) * (t2 as u128) <= n as u128,
        ),
    ];
    Ok(StageParams {
        h,
        t1,
        t2,
        conditions,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoStageOutcome {
    pub tau_h: u64,
    pub reached_h: bool,
    pub tau_0: u64,
    pub survived: bool,
}

impl TwoStageOutcome {
    /// Stage 1 ran out of time below height `h`.
    pub fn ascent_failed(&self) -> bool {
        !self.reached_h
    }
}

/// Run the sweep process through an ascent stage (reach `Y >= h` by time
/// `T1`) and a survival stage (stay positive for `T2` further steps).
pub fn run_two_stage(
    params: &GraphParams,
    h: u64,
    t1: u64,
    t2: u64,
    rng: &mut RngStream,
) -> Result<TwoStageOutcome> {
    if h == 0 || t1 == 0 {
        return Err(domain("two-stage run needs h >= 1 and T1 >= 1"));
    }
    if t1.saturating_add(t2) > params.n {
        return Err(domain(format!(
            "T1 + T2 = {} exceeds n = {}",
            t1 as u128 + t2 as u128,
            params.n
        )));
    }
    let mut process = Exploration::new(params)?;
    let mut tau_h = t1;
    let mut reached_h = false;
    for t in 1..=t1 {
        if process.step(rng) >= h {
            tau_h = t;
            reached_h = true;
            break;
        }
    }
    let mut tau_0 = t2;
    let mut survived = true;
    for s in 0..t2 {
        if process.active == 0 {
            tau_0 = s;
            survived = false;
            break;
        }
        if s + 1 < t2 {
            process.step(rng);
        }
    }
    Ok(TwoStageOutcome {
        tau_h,
        reached_h,
        tau_0,
        survived,
    })
}
