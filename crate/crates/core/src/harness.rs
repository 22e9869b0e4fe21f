//! Monte Carlo experiments with confidence-bounded verdicts.
//!
//! Trial `i` of an experiment always runs on stream `(master_seed, i)`, and
//! every aggregate is either an integer count or a fold over outcomes taken
//! in stream order, so results do not depend on the rayon worker count.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    c1_upper_bound, easy_bound_cv, thm1_bounds, thm2_bound, thm5_bounds, BoundReport,
};
use crate::error::{domain, Error, Result};
use crate::explore::{
    component_size, largest_at_least, run_two_stage, stage_params, sweep_streaming,
};
use crate::oracle::enumerate_exact_f64;
use crate::params::{ceil_cube_root, ceil_two_thirds, floor_two_thirds, GraphParams};
use crate::rng::RngStream;
use crate::stats::{
    binomial_cdf, dkw_epsilon, empirical_pmf, total_variation, MeanEstimate, TailEstimate,
};
use crate::walk::{collect_overshoots_from, run_walks, WalkOutcome, WalkParams};

pub use crate::stats::TailEstimate as Estimate;

/// Default ceiling on the estimated number of process steps per experiment.
pub const DEFAULT_WORK_BUDGET: f64 = 1e11;
/// Default significance level.
pub const DEFAULT_ALPHA: f64 = 0.01;
/// Window bounds hold for "n large enough"; below this size their checks
/// are reported as advisory.
pub const WINDOW_ADVISORY_BELOW: u64 = 1_000_000;
/// Slack, in standard errors, for inequalities checked against point estimates.
pub const SE_SLACK: f64 = 3.0;
/// Limit on `|z|` for martingale identities.
pub const Z_LIMIT: f64 = 4.0;

/// TV tolerance for the oracle comparison: 0.005 at `10^6` trials, widened
/// as `5 / sqrt(trials)` for smaller runs.
pub fn tv_tolerance(trials: u64) -> f64 {
    (5.0 / (trials as f64).sqrt()).max(0.005)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    TailC1,
    TailCv,
    LowerC1,
    WalkIdentity,
    OvershootDominance,
    TwoStage,
    OracleEquivalence,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::TailC1 => "tail_c1",
            Self::TailCv => "tail_cv",
            Self::LowerC1 => "lower_c1",
            Self::WalkIdentity => "walk_identity",
            Self::OvershootDominance => "overshoot_dominance",
            Self::TwoStage => "two_stage",
            Self::OracleEquivalence => "oracle_equivalence",
        }
    }
}

/// How the edge probability is specified.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbSpec {
    /// `p = 1/n`
    Critical,
    /// `p = 1/n + lambda n^{-4/3}`
    Lambda(f64),
    Value(f64),
}

impl ProbSpec {
    pub fn resolve(self, n: u64) -> Result<GraphParams> {
        match self {
            Self::Critical => GraphParams::critical(n),
            Self::Lambda(l) => GraphParams::window(n, l),
            Self::Value(p) => GraphParams::new(n, p),
        }
    }

    fn lambda(self) -> Option<f64> {
        match self {
            Self::Critical => Some(0.0),
            Self::Lambda(l) => Some(l),
            Self::Value(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub n: u64,
    pub prob: ProbSpec,
    /// `A` for upper tails, `delta` for the lower tail and the two-stage run.
    #[serde(default)]
    pub scale: Option<f64>,
    /// Walk barrier `H`.
    #[serde(default)]
    pub barrier: Option<u64>,
    /// Number of trials; for overshoot dominance, the number of conditioned samples.
    pub trials: u64,
    pub master_seed: u64,
    pub alpha: f64,
}

impl ExperimentSpec {
    pub fn new(
        kind: ExperimentKind,
        n: u64,
        prob: ProbSpec,
        trials: u64,
        master_seed: u64,
    ) -> Self {
        Self {
            kind,
            n,
            prob,
            scale: None,
            barrier: None,
            trials,
            master_seed,
            alpha: DEFAULT_ALPHA,
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = Some(scale);
        self
    }

    pub fn with_barrier(mut self, barrier: u64) -> Self {
        self.barrier = Some(barrier);
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(domain("trials must be >= 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(domain(format!("alpha = {} must lie in (0, 1)", self.alpha)));
        }
        let needs_scale = matches!(
            self.kind,
            ExperimentKind::TailC1
                | ExperimentKind::TailCv
                | ExperimentKind::LowerC1
                | ExperimentKind::TwoStage
        );
        if needs_scale && self.scale.is_none() {
            return Err(domain(format!(
                "{} needs a scale (A or delta)",
                self.kind.name()
            )));
        }
        if let Some(s) = self.scale {
            if !(s.is_finite() && s > 0.0) {
                return Err(domain(format!("scale {s} must be positive")));
            }
        }
        match self.kind {
            ExperimentKind::OvershootDominance if self.barrier.is_none() => {
                Err(domain("overshoot_dominance needs a barrier H"))
            }
            ExperimentKind::WalkIdentity
                if self.barrier.is_none() && !matches!(self.prob, ProbSpec::Lambda(_)) =>
            {
                Err(domain(
                    "walk_identity needs a barrier H unless lambda is given",
                ))
            }
            ExperimentKind::OracleEquivalence if self.n > crate::oracle::MAX_ENUMERATION_N => {
                Err(Error::CostGuard {
                    what: "oracle enumeration",
                    estimated: self.n as f64,
                    limit: crate::oracle::MAX_ENUMERATION_N as f64,
                })
            }
            ExperimentKind::TwoStage if self.prob != ProbSpec::Critical => {
                Err(domain("two_stage is defined at p = 1/n"))
            }
            _ => Ok(()),
        }
    }

    /// Rough count of process steps the experiment will take.
    pub fn estimated_work(&self) -> f64 {
        let n = self.n as f64;
        let m = self.trials as f64;
        let h = self.barrier.unwrap_or_else(|| ceil_cube_root(self.n)) as f64;
        match self.kind {
            ExperimentKind::TailC1 | ExperimentKind::LowerC1 => m * n,
            ExperimentKind::TailCv => m * n.powf(2.0 / 3.0).max(1.0),
            ExperimentKind::WalkIdentity => 2.0 * m * 16.0 * h.max(n.cbrt()),
            ExperimentKind::OvershootDominance => m * h * (h + 3.0),
            ExperimentKind::TwoStage => match stage_params(self.scale.unwrap_or(0.0), self.n) {
                Ok(sp) => m * (sp.t1 + sp.t2) as f64,
                Err(_) => m * n,
            },
            ExperimentKind::OracleEquivalence => 2.0 * m * n,
        }
    }
}

/// One inequality or identity checked by an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
    /// Failure is reported but does not fail the verdict.
    pub advisory: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, threshold: f64, advisory: bool) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            pass: value <= threshold,
            advisory,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub master_seed: u64,
    /// Resolved edge probability, printed in shortest round-trip form.
    pub p: f64,
    pub lambda: Option<f64>,
    pub threads: Option<usize>,
    pub wall_time_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub spec: ExperimentSpec,
    pub params: GraphParams,
    /// Integer threshold the event compares against, with its comparator.
    pub threshold: Option<u64>,
    pub comparator: Option<String>,
    pub estimate: Option<TailEstimate>,
    pub bound: Option<BoundReport>,
    pub checks: Vec<Check>,
    /// Every non-advisory check passed.
    pub pass: bool,
    #[serde(default)]
    pub notes: Vec<String>,
    pub manifest: Manifest,
}

impl VerdictReport {
    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

struct Outcome {
    threshold: Option<u64>,
    comparator: Option<String>,
    estimate: Option<TailEstimate>,
    bound: Option<BoundReport>,
    checks: Vec<Check>,
    notes: Vec<String>,
}

impl Outcome {
    fn checks(checks: Vec<Check>) -> Self {
        Self {
            threshold: None,
            comparator: None,
            estimate: None,
            bound: None,
            checks,
            notes: Vec::new(),
        }
    }
}

/// Run an experiment under the default work budget.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<VerdictReport> {
    run_experiment_with_budget(spec, DEFAULT_WORK_BUDGET)
}

pub fn run_experiment_with_budget(spec: &ExperimentSpec, budget: f64) -> Result<VerdictReport> {
    spec.validate()?;
    let estimated = spec.estimated_work();
    if estimated > budget {
        return Err(Error::CostGuard {
            what: "experiment work",
            estimated,
            limit: budget,
        });
    }
    let params = spec.prob.resolve(spec.n)?;
    let started = Instant::now();
    let out = match spec.kind {
        ExperimentKind::TailC1 | ExperimentKind::TailCv => run_upper_tail(spec, &params)?,
        ExperimentKind::LowerC1 => run_lower_tail(spec, &params)?,
        ExperimentKind::WalkIdentity => run_walk_identity(spec, &params)?,
        ExperimentKind::OvershootDominance => run_overshoot(spec, &params, budget)?,
        ExperimentKind::TwoStage => run_two_stage_experiment(spec, &params)?,
        ExperimentKind::OracleEquivalence => run_oracle_equivalence(spec, &params)?,
    };
    let pass = out.checks.iter().all(|c| c.pass || c.advisory);
    Ok(VerdictReport {
        spec: spec.clone(),
        params,
        threshold: out.threshold,
        comparator: out.comparator,
        estimate: out.estimate,
        bound: out.bound,
        checks: out.checks,
        pass,
        notes: out.notes,
        manifest: Manifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed: spec.master_seed,
            p: params.p,
            lambda: params.lambda,
            threads: None,
            wall_time_secs: started.elapsed().as_secs_f64(),
        },
    })
}

fn count_successes<F>(trials: u64, seed: u64, event: F) -> Result<u64>
where
    F: Fn(&mut RngStream) -> Result<bool> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|i| event(&mut RngStream::new(seed, i)).map(u64::from))
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

fn pick_bound(candidates: Vec<BoundReport>) -> Option<BoundReport> {
    let (valid, invalid): (Vec<_>, Vec<_>) = candidates.into_iter().partition(|b| b.valid);
    let by_value = |a: &BoundReport, b: &BoundReport| a.value.total_cmp(&b.value);
    valid
        .into_iter()
        .min_by(by_value)
        .or_else(|| invalid.into_iter().min_by(by_value))
}

fn verdict_check(est: &TailEstimate, bound: &BoundReport, advisory: bool) -> Check {
    Check::at_most(
        format!("ci_low <= {}", bound.name),
        est.ci_low,
        bound.value,
        advisory || !bound.valid,
    )
}

fn window_advisory(params: &GraphParams) -> bool {
    matches!(params.lambda, Some(l) if l != 0.0) && params.n < WINDOW_ADVISORY_BELOW
}

fn run_upper_tail(spec: &ExperimentSpec, params: &GraphParams) -> Result<Outcome> {
    let a = spec.scale.expect("validated");
    let n = spec.n;
    let lambda = spec.prob.lambda();
    let per_vertex = spec.kind == ExperimentKind::TailCv;
    let window = matches!(lambda, Some(l) if l != 0.0);

    // critical bounds speak of "> A n^{2/3}", window bounds of ">= A n^{2/3}"
    let (min_size, threshold, comparator) = if window {
        let t = ceil_two_thirds(a, n)?;
        (t, t, ">=")
    } else {
        let t = floor_two_thirds(a, n)?;
        (t + 1, t, ">")
    };
    let successes = if per_vertex {
        count_successes(spec.trials, spec.master_seed, |rng| {
            Ok(component_size(params, rng)? >= min_size)
        })?
    } else {
        count_successes(spec.trials, spec.master_seed, |rng| {
            largest_at_least(params, min_size, rng)
        })?
    };
    let estimate = TailEstimate::new(successes, spec.trials, spec.alpha)?;

    let bound = match (lambda, per_vertex) {
        (Some(l), true) if l != 0.0 => Some(thm5_bounds(a, l, n)?.0),
        (Some(l), false) if l != 0.0 => Some(thm5_bounds(a, l, n)?.1),
        (Some(_), true) => pick_bound(vec![
            thm1_bounds(a, n)?.0,
            easy_bound_cv(threshold.max(1), n)?,
        ]),
        (Some(_), false) => Some(c1_upper_bound(a, n)?),
        (None, _) => None,
    };
    let mut notes = Vec::new();
    let checks = match &bound {
        Some(b) => vec![verdict_check(&estimate, b, window_advisory(params))],
        None => {
            notes.push("no closed-form bound for an arbitrary p".to_string());
            Vec::new()
        }
    };
    Ok(Outcome {
        threshold: Some(threshold),
        comparator: Some(comparator.to_string()),
        estimate: Some(estimate),
        bound,
        checks,
        notes,
    })
}

fn run_lower_tail(spec: &ExperimentSpec, params: &GraphParams) -> Result<Outcome> {
    let delta = spec.scale.expect("validated");
    let threshold = floor_two_thirds(delta, spec.n)?;
    let successes = count_successes(spec.trials, spec.master_seed, |rng| {
        Ok(!largest_at_least(params, threshold, rng)?)
    })?;
    let estimate = TailEstimate::new(successes, spec.trials, spec.alpha)?;
    let bound = params
        .is_critical()
        .then(|| thm2_bound(delta, spec.n))
        .transpose()?;
    let checks = bound
        .iter()
        .map(|b| verdict_check(&estimate, b, false))
        .collect();
    Ok(Outcome {
        threshold: Some(threshold),
        comparator: Some("<".to_string()),
        estimate: Some(estimate),
        bound,
        checks,
        notes: Vec::new(),
    })
}

/// Stopped-martingale identity to check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityKind {
    /// `E[S_gamma] = 1`
    MeanSGamma,
    /// `E[S_gamma^2 - (1 - 1/n) gamma] = 1`, at `p = 1/n`
    Quadratic,
    /// `E[S_gamma - (np - 1) gamma] = 1`
    DriftLinear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub kind: IdentityKind,
    pub target: f64,
    pub estimate: MeanEstimate,
    pub z: f64,
}

impl IdentityReport {
    pub fn pass(&self) -> bool {
        self.z.abs() <= Z_LIMIT
    }
}

fn identity_from(
    kind: IdentityKind,
    params: &WalkParams,
    outcomes: &[WalkOutcome],
) -> Result<IdentityReport> {
    let n = params.n as f64;
    let mu = params.drift();
    let values = outcomes.iter().map(move |o| {
        let s = o.s_final as f64;
        let g = o.gamma as f64;
        match kind {
            IdentityKind::MeanSGamma => s,
            IdentityKind::Quadratic => s * s - (1.0 - 1.0 / n) * g,
            IdentityKind::DriftLinear => s - mu * g,
        }
    });
    let estimate = MeanEstimate::from_values(values);
    Ok(IdentityReport {
        kind,
        target: 1.0,
        z: estimate.z_against(1.0),
        estimate,
    })
}

/// Estimate a stopped martingale's mean over `trials` uncapped walks on
/// streams `(seed, 0..trials)` and compare with its starting value 1.
pub fn martingale_identity_check(
    kind: IdentityKind,
    params: &WalkParams,
    trials: u64,
    seed: u64,
) -> Result<IdentityReport> {
    if params.cap.is_some() {
        return Err(domain(
            "identities use the walk stopped at gamma, without a cap",
        ));
    }
    if matches!(kind, IdentityKind::MeanSGamma | IdentityKind::Quadratic) && !params.is_critical() {
        return Err(domain("mean and quadratic identities need p = 1/n"));
    }
    if trials == 0 {
        return Err(domain("trials must be >= 1"));
    }
    identity_from(kind, params, &run_walks(params, seed, 0, trials)?)
}

fn proportion(outcomes: &[WalkOutcome], pred: impl Fn(&WalkOutcome) -> bool) -> (f64, f64) {
    let m = outcomes.len() as f64;
    let p = outcomes.iter().filter(|o| pred(o)).count() as f64 / m;
    (p, (p * (1.0 - p) / m).sqrt())
}

fn run_walk_identity(spec: &ExperimentSpec, params: &GraphParams) -> Result<Outcome> {
    let lambda = params.lambda.unwrap_or(f64::NAN);
    let n = spec.n;
    let default_barrier = ceil_cube_root(n);
    let barrier = spec.barrier.unwrap_or(default_barrier);
    let walk = WalkParams::new(n, params.p, barrier)?;
    let outcomes = run_walks(&walk, spec.master_seed, 0, spec.trials)?;
    let (p_top, se_top) = proportion(&outcomes, |o| o.hit_top);
    let gamma = MeanEstimate::from_values(outcomes.iter().map(|o| o.gamma as f64));
    let h = barrier as f64;
    let mut checks = Vec::new();
    let mut notes = Vec::new();

    if walk.is_critical() {
        checks.push(Check::at_most(
            "P(S_gamma >= H) - 3SE <= 1/H",
            p_top - SE_SLACK * se_top,
            1.0 / h,
            false,
        ));
        let bound3_applies = barrier >= 2 && barrier + 3 <= n;
        checks.push(Check::at_most(
            "E[gamma] - 3SE <= H + 3",
            gamma.mean - SE_SLACK * gamma.std_error,
            h + 3.0,
            !bound3_applies,
        ));
        let capped = run_walks(&walk.with_square_cap()?, spec.master_seed, 0, spec.trials)?;
        let (p_pos, se_pos) = proportion(&capped, WalkOutcome::positive_at_stop);
        checks.push(Check::at_most(
            "P(S_gamma* > 0) - 3SE <= 3/H",
            p_pos - SE_SLACK * se_pos,
            3.0 / h,
            false,
        ));
        for kind in [IdentityKind::MeanSGamma, IdentityKind::Quadratic] {
            let id = identity_from(kind, &walk, &outcomes)?;
            checks.push(Check::at_most(
                format!("|z| {kind:?}"),
                id.z.abs(),
                Z_LIMIT,
                false,
            ));
        }
    } else {
        if !lambda.is_finite() || lambda == 0.0 {
            return Err(domain("walk_identity needs p = 1/n or a nonzero lambda"));
        }
        let advisory = n < WINDOW_ADVISORY_BELOW || barrier != default_barrier;
        if barrier != default_barrier {
            notes.push(format!(
                "window inequalities assume H = ceil(n^(1/3)) = {default_barrier}"
            ));
        }
        let n13 = (n as f64).cbrt();
        let (top_bound, gamma_bound) = if lambda > 0.0 {
            (4.0 * lambda / n13 / (-(-4.0 * lambda).exp_m1()), 16.0 * n13)
        } else {
            (
                -2.0 * lambda / n13 / (-lambda).exp_m1(),
                5.0f64.min(-1.0 / lambda) * n13,
            )
        };
        checks.push(Check::at_most(
            "P(S_gamma >= H) - 3SE <= window bound",
            p_top - SE_SLACK * se_top,
            top_bound,
            advisory,
        ));
        checks.push(Check::at_most(
            "E[gamma] - 3SE <= window bound",
            gamma.mean - SE_SLACK * gamma.std_error,
            gamma_bound,
            advisory,
        ));
        let id = identity_from(IdentityKind::DriftLinear, &walk, &outcomes)?;
        checks.push(Check::at_most(
            "|z| DriftLinear",
            id.z.abs(),
            Z_LIMIT,
            false,
        ));
    }
    Ok(Outcome {
        threshold: Some(barrier),
        comparator: Some(">=".to_string()),
        estimate: Some(TailEstimate::new(
            outcomes.iter().filter(|o| o.hit_top).count() as u64,
            spec.trials,
            spec.alpha,
        )?),
        bound: None,
        checks,
        notes,
    })
}

/// Result of the one-sided dominance test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceVerdict {
    /// `None` when the sample is empty.
    pub pass: Option<bool>,
    /// `max_k (F_ref(k) - F_emp(k))`, clipped below at 0.
    pub max_violation: f64,
    pub epsilon: f64,
    pub samples: usize,
}

/// Test whether `sample` is stochastically dominated by `Bin(n, p)`:
/// pass iff `F_emp(k) >= F_bin(k) - eps` for all `k` in `0..=max(sample)`,
/// with `eps = sqrt(ln(2/alpha) / (2m))`.
pub fn dominance_verdict(sample: &[u64], n: u64, p: f64, alpha: f64) -> Result<DominanceVerdict> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(domain(format!("probability {p} is outside [0, 1]")));
    }
    let Some(&max) = sample.iter().max() else {
        return Ok(DominanceVerdict {
            pass: None,
            max_violation: 0.0,
            epsilon: f64::INFINITY,
            samples: 0,
        });
    };
    let m = sample.len();
    let mut counts = vec![0u64; max as usize + 1];
    for &x in sample {
        counts[x as usize] += 1;
    }
    let reference = binomial_cdf(n, p, max);
    let mut running = 0u64;
    let mut max_violation = 0.0f64;
    for (k, c) in counts.iter().enumerate() {
        running += c;
        let emp = running as f64 / m as f64;
        max_violation = max_violation.max(reference[k] - emp);
    }
    let epsilon = dkw_epsilon(m, alpha);
    Ok(DominanceVerdict {
        pass: Some(max_violation <= epsilon),
        max_violation,
        epsilon,
        samples: m,
    })
}

/// Runs walks in fixed-size batches of streams until `target` overshoot
/// samples exist, then keeps the first `target` in stream order.
pub fn collect_overshoot_samples(
    params: &WalkParams,
    target: u64,
    seed: u64,
    max_runs: u64,
) -> Result<(Vec<u64>, u64)> {
    const BATCH: u64 = 1 << 18;
    let mut samples = Vec::new();
    let mut runs = 0u64;
    while (samples.len() as u64) < target && runs < max_runs {
        let batch = BATCH.min(max_runs - runs);
        samples.extend(collect_overshoots_from(params, seed, runs, batch)?);
        runs += batch;
    }
    samples.truncate(target as usize);
    Ok((samples, runs))
}

fn run_overshoot(spec: &ExperimentSpec, params: &GraphParams, budget: f64) -> Result<Outcome> {
    let barrier = spec.barrier.expect("validated");
    let walk = WalkParams::new(spec.n, params.p, barrier)?;
    let steps_per_run = (barrier as f64 + 3.0).max(1.0);
    let max_runs = (budget / steps_per_run).min(u64::MAX as f64) as u64;
    let (sample, runs) = collect_overshoot_samples(&walk, spec.trials, spec.master_seed, max_runs)?;
    let verdict = dominance_verdict(&sample, spec.n, params.p, spec.alpha)?;
    let mut notes = vec![format!(
        "{runs} walks for {} conditioned samples",
        sample.len()
    )];
    let mut checks = vec![Check::at_most(
        "max(F_bin - F_emp) <= DKW epsilon",
        verdict.max_violation,
        verdict.epsilon,
        false,
    )];
    if (sample.len() as u64) < spec.trials {
        notes.push("sample short of target".to_string());
        checks.push(Check::at_most(
            "missing samples",
            (spec.trials - sample.len() as u64) as f64,
            0.0,
            false,
        ));
    }
    if verdict.pass.is_none() {
        notes.push("empty sample: verdict indeterminate".to_string());
    }
    let mut out = Outcome::checks(checks);
    out.threshold = Some(barrier);
    out.notes = notes;
    Ok(out)
}

fn run_two_stage_experiment(spec: &ExperimentSpec, params: &GraphParams) -> Result<Outcome> {
    let delta = spec.scale.expect("validated");
    let sp = stage_params(delta, spec.n)?;
    let outcomes: Vec<_> = (0..spec.trials)
        .into_par_iter()
        .map(|i| {
            run_two_stage(
                params,
                sp.h,
                sp.t1,
                sp.t2,
                &mut RngStream::new(spec.master_seed, i),
            )
        })
        .collect::<Result<_>>()?;
    let ascent_failures = outcomes.iter().filter(|o| o.ascent_failed()).count() as u64;
    let early_zero = outcomes.iter().filter(|o| !o.survived).count() as u64;
    let ascent = TailEstimate::new(ascent_failures, spec.trials, spec.alpha)?;
    let survival = TailEstimate::new(early_zero, spec.trials, spec.alpha)?;
    let n = spec.n as f64;
    let h = sp.h as f64;
    let step1 = 32.0 * h.powi(3) / n;
    let step2 = step1 + 2.0 * sp.t2 as f64 / (h * h);
    let checks = vec![
        Check::at_most(
            "P(ascent fails) - 3SE <= 32h^3/n",
            ascent.p_hat - SE_SLACK * ascent.std_error(),
            step1,
            false,
        ),
        Check::at_most(
            "P(tau_0 < T2) - 3SE <= 32h^3/n + 2T2/h^2",
            survival.p_hat - SE_SLACK * survival.std_error(),
            step2,
            false,
        ),
    ];
    let notes = std::iter::once(format!("h = {}, T1 = {}, T2 = {}", sp.h, sp.t1, sp.t2))
        .chain(sp.conditions.iter().map(|(c, ok)| format!("{c}: {ok}")))
        .collect();
    Ok(Outcome {
        threshold: Some(sp.t2),
        comparator: Some("<".to_string()),
        estimate: Some(survival),
        bound: None,
        checks,
        notes,
    })
}

fn run_oracle_equivalence(spec: &ExperimentSpec, params: &GraphParams) -> Result<Outcome> {
    let n = spec.n;
    let (exact_cv, exact_c1) = enumerate_exact_f64(n, params.p)?;
    let sizes: Vec<(u64, u64)> = (0..spec.trials)
        .into_par_iter()
        .map(|i| {
            let cv = component_size(params, &mut RngStream::new(spec.master_seed, 2 * i))?;
            let c1 =
                sweep_streaming(params, &mut RngStream::new(spec.master_seed, 2 * i + 1))?.largest;
            Ok((cv - 1, c1 - 1))
        })
        .collect::<Result<_>>()?;
    let (cv, c1): (Vec<u64>, Vec<u64>) = sizes.into_iter().unzip();
    let tol = tv_tolerance(spec.trials);
    let tv_cv = total_variation(&empirical_pmf(&cv, n as usize), &exact_cv.to_f64());
    let tv_c1 = total_variation(&empirical_pmf(&c1, n as usize), &exact_c1.to_f64());
    Ok(Outcome::checks(vec![
        Check::at_most("TV(|C(v)|, exact)", tv_cv, tol, false),
        Check::at_most("TV(|C1|, exact)", tv_c1, tol, false),
    ]))
}

/// Output format for [`write_results`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    JsonLines,
    CsvSummary,
}

pub const CSV_HEADER: [&str; 15] = [
    "kind",
    "n",
    "p",
    "lambda",
    "scale",
    "barrier",
    "threshold",
    "trials",
    "successes",
    "p_hat",
    "ci_low",
    "ci_high",
    "bound_name",
    "bound",
    "pass",
];

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Persist reports as JSON lines (full reports) or a CSV summary (one row
/// per report).
pub fn write_results(reports: &[VerdictReport], path: &Path, format: OutputFormat) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    match format {
        OutputFormat::JsonLines => {
            for r in reports {
                let line = serde_json::to_string(r).map_err(|e| Error::Parse(e.to_string()))?;
                writeln!(out, "{line}").map_err(io_err(path))?;
            }
        }
        OutputFormat::CsvSummary => {
            let mut w = csv::Writer::from_writer(&mut out);
            let csv_err = |e: csv::Error| Error::Io {
                path: path.to_path_buf(),
                source: std::io::Error::other(e),
            };
            w.write_record(CSV_HEADER).map_err(csv_err)?;
            for r in reports {
                let est = r.estimate.as_ref();
                w.write_record([
                    r.spec.kind.name().to_string(),
                    r.params.n.to_string(),
                    r.params.p.to_string(),
                    opt(r.params.lambda),
                    opt(r.spec.scale),
                    opt(r.spec.barrier),
                    opt(r.threshold),
                    r.spec.trials.to_string(),
                    opt(est.map(|e| e.successes)),
                    opt(est.map(|e| e.p_hat)),
                    opt(est.map(|e| e.ci_low)),
                    opt(est.map(|e| e.ci_high)),
                    opt(r.bound.as_ref().map(|b| b.name.clone())),
                    opt(r.bound.as_ref().map(|b| b.value)),
                    r.pass.to_string(),
                ])
                .map_err(csv_err)?;
            }
            w.flush().map_err(io_err(path))?;
        }
    }
    out.flush().map_err(io_err(path))
}

/// Read reports written in [`OutputFormat::JsonLines`].
pub fn read_results_jsonl(path: &Path) -> Result<Vec<VerdictReport>> {
    let file = File::open(path).map_err(io_err(path))?;
    BufReader::new(file)
        .lines()
        .filter(|l| !matches!(l, Ok(s) if s.trim().is_empty()))
        .map(|line| {
            let line = line.map_err(io_err(path))?;
            serde_json::from_str(&line)
                .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
        })
        .collect()
}

/// The default verification grid. `quick` keeps `n <= 10^4` and at most
/// `10^5` trials per experiment.
pub fn default_suite(quick: bool, seed: u64) -> Vec<ExperimentSpec> {
    use ExperimentKind::*;
    let s = |kind, n, prob, trials| ExperimentSpec::new(kind, n, prob, trials, seed);
    let mut suite = Vec::new();
    if quick {
        suite.push(s(OracleEquivalence, 3, ProbSpec::Critical, 100_000));
        suite.push(s(OracleEquivalence, 4, ProbSpec::Value(0.25), 100_000));
        for a in [2.0, 4.0, 9.0] {
            suite.push(s(TailC1, 10_000, ProbSpec::Critical, 10_000).with_scale(a));
        }
        suite.push(s(TailCv, 10_000, ProbSpec::Critical, 100_000).with_scale(9.0));
        suite.push(s(LowerC1, 10_000, ProbSpec::Critical, 10_000).with_scale(0.05));
        suite.push(s(WalkIdentity, 1_000, ProbSpec::Critical, 100_000).with_barrier(10));
        suite.push(s(OvershootDominance, 1_000, ProbSpec::Critical, 100_000).with_barrier(5));
        suite.push(s(TwoStage, 10_000, ProbSpec::Critical, 10_000).with_scale(0.05));
        for l in [1.0, -1.0] {
            suite.push(s(WalkIdentity, 10_000, ProbSpec::Lambda(l), 100_000));
            suite.push(s(TailC1, 10_000, ProbSpec::Lambda(l), 10_000).with_scale(10.0));
        }
    } else {
        for (n, p) in [
            (3, ProbSpec::Critical),
            (4, ProbSpec::Critical),
            (5, ProbSpec::Critical),
            (5, ProbSpec::Value(0.3)),
        ] {
            suite.push(s(OracleEquivalence, n, p, 1_000_000));
        }
        for n in [10_000, 100_000] {
            for a in [2.0, 4.0, 9.0] {
                suite.push(s(TailC1, n, ProbSpec::Critical, 10_000).with_scale(a));
            }
            suite.push(s(TailCv, n, ProbSpec::Critical, 100_000).with_scale(9.0));
        }
        for n in [100_000, 1_000_000] {
            for d in [0.001, 0.01] {
                suite.push(s(LowerC1, n, ProbSpec::Critical, 10_000).with_scale(d));
            }
        }
        suite.push(s(WalkIdentity, 1_000_000, ProbSpec::Critical, 100_000).with_barrier(100));
        suite.push(s(WalkIdentity, 1_000, ProbSpec::Critical, 1_000_000).with_barrier(10));
        suite.push(s(OvershootDominance, 1_000, ProbSpec::Critical, 100_000).with_barrier(5));
        suite.push(s(OvershootDominance, 1_000_000, ProbSpec::Critical, 100_000).with_barrier(50));
        suite.push(s(TwoStage, 1_000_000, ProbSpec::Critical, 100_000).with_scale(0.01));
        for l in [1.0, -1.0] {
            suite.push(s(WalkIdentity, 1_000_000, ProbSpec::Lambda(l), 100_000));
            suite.push(s(TailC1, 1_000_000, ProbSpec::Lambda(l), 10_000).with_scale(10.0));
            suite.push(s(TailCv, 1_000_000, ProbSpec::Lambda(l), 10_000).with_scale(10.0));
        }
    }
    suite
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation() {
        let base = ExperimentSpec::new(ExperimentKind::TailC1, 1000, ProbSpec::Critical, 10, 1);
        assert!(base.validate().is_err());
        assert!(base.clone().with_scale(2.0).validate().is_ok());
        assert!(base
            .clone()
            .with_scale(2.0)
            .with_alpha(0.0)
            .validate()
            .is_err());
        let mut zero = base.clone().with_scale(2.0);
        zero.trials = 0;
        assert!(zero.validate().is_err());
        let od = ExperimentSpec::new(
            ExperimentKind::OvershootDominance,
            1000,
            ProbSpec::Critical,
            10,
            1,
        );
        assert!(od.validate().is_err());
        let oe = ExperimentSpec::new(
            ExperimentKind::OracleEquivalence,
            9,
            ProbSpec::Critical,
            10,
            1,
        );
        assert!(matches!(oe.validate(), Err(Error::CostGuard { .. })));
    }

    #[test]
    fn budget_guard_refuses_with_estimate() {
        let spec = ExperimentSpec::new(
            ExperimentKind::TailC1,
            1_000_000_000,
            ProbSpec::Critical,
            1_000,
            1,
        )
        .with_scale(2.0);
        match run_experiment(&spec) {
            Err(Error::CostGuard {
                estimated, limit, ..
            }) => {
                assert_eq!(estimated, 1e12);
                assert_eq!(limit, DEFAULT_WORK_BUDGET);
            }
            other => panic!("expected guard, got {other:?}"),
        }
    }

    #[test]
    fn dominance_self_and_degenerate() {
        let v = dominance_verdict(&[0; 1000], 10, 0.5, 0.01).unwrap();
        assert_eq!(v.pass, Some(true));
        assert_eq!(v.max_violation, 0.0);
        let v = dominance_verdict(&[], 10, 0.5, 0.01).unwrap();
        assert_eq!(v.pass, None);
        // a sample shifted far above Bin(10, 0.1) is not dominated
        let v = dominance_verdict(&[8; 1000], 10, 0.1, 0.01).unwrap();
        assert_eq!(v.pass, Some(false));
    }

    #[test]
    fn dominance_of_binomial_draws_by_itself() {
        let sampler = crate::rng::BinomialSampler::new(0.001).unwrap();
        let mut rng = RngStream::new(12, 0);
        let sample: Vec<u64> = (0..1_000_000)
            .map(|_| sampler.sample(1000, &mut rng))
            .collect();
        let v = dominance_verdict(&sample, 1000, 0.001, 0.01).unwrap();
        assert_eq!(v.pass, Some(true), "{v:?}");
    }

    #[test]
    fn oracle_equivalence_small() {
        let spec = ExperimentSpec::new(
            ExperimentKind::OracleEquivalence,
            4,
            ProbSpec::Value(0.25),
            200_000,
            3,
        );
        let r = run_experiment(&spec).unwrap();
        assert!(r.pass, "{:?}", r.checks);
    }

    #[test]
    fn tail_report_shape() {
        let spec = ExperimentSpec::new(ExperimentKind::TailC1, 2000, ProbSpec::Critical, 500, 5)
            .with_scale(2.0);
        let r = run_experiment(&spec).unwrap();
        assert_eq!(r.threshold, Some(floor_two_thirds(2.0, 2000).unwrap()));
        assert_eq!(r.comparator.as_deref(), Some(">"));
        assert_eq!(r.bound.as_ref().unwrap().name, "easy_c1");
        let e = r.estimate.unwrap();
        assert!(e.ci_low <= e.p_hat && e.p_hat <= e.ci_high);
        assert_eq!(r.manifest.master_seed, 5);
    }

    #[test]
    fn window_tail_uses_ceiling_threshold() {
        let spec = ExperimentSpec::new(ExperimentKind::TailC1, 1000, ProbSpec::Lambda(1.0), 200, 5)
            .with_scale(10.0);
        let r = run_experiment(&spec).unwrap();
        assert_eq!(r.threshold, Some(1000));
        assert_eq!(r.comparator.as_deref(), Some(">="));
        assert_eq!(r.bound.as_ref().unwrap().name, "thm5_c1");
        assert!(r.checks.iter().all(|c| c.advisory));
    }

    #[test]
    fn identity_rejects_capped_or_off_critical() {
        let capped = WalkParams::critical(100, 5).unwrap().with_cap(10).unwrap();
        assert!(martingale_identity_check(IdentityKind::MeanSGamma, &capped, 10, 0).is_err());
        let off = WalkParams::new(100, 0.02, 5).unwrap();
        assert!(martingale_identity_check(IdentityKind::Quadratic, &off, 10, 0).is_err());
        assert!(martingale_identity_check(IdentityKind::DriftLinear, &off, 10, 0).is_ok());
    }

    #[test]
    fn tolerance_schedule() {
        assert_eq!(tv_tolerance(1_000_000), 0.005);
        assert_eq!(tv_tolerance(4_000_000), 0.005);
        assert!((tv_tolerance(100_000) - 5.0 / 316.227_766_016_837_94).abs() < 1e-12);
    }

    #[test]
    fn suites_are_valid_and_quick_is_small() {
        for spec in default_suite(true, 1) {
            spec.validate().unwrap();
            assert!(spec.n <= 10_000 && spec.trials <= 100_000, "{spec:?}");
        }
        for spec in default_suite(false, 1) {
            spec.validate().unwrap();
            assert!(spec.estimated_work() <= DEFAULT_WORK_BUDGET);
        }
    }
}
