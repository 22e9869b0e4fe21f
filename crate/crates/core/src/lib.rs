//! Simulation of the component exploration process of `G(n, p)` near the
//! critical point `p = 1/n`, the coupled lazy random walk, explicit tail
//! bounds for the largest component, and a Monte Carlo harness that checks
//! the bounds against simulation with confidence-bounded verdicts.
//!
//! All randomness flows through [`RngStream`], a counter-based stream keyed
//! by `(master_seed, stream_index)`, so every trial is reproducible on its
//! own and parallel runs match sequential ones.

pub mod bounds;
pub mod error;
pub mod explore;
pub mod harness;
pub mod oracle;
pub mod params;
pub mod rng;
pub mod stats;
pub mod walk;

pub use error::{Error, Result};
pub use explore::{
    component_size, explore_component, largest_at_least, run_two_stage, stage_params,
    sweep_components, sweep_streaming, ComponentRun, Exploration, StageParams, SweepResult,
    SweepSummary, TwoStageOutcome,
};
pub use harness::{run_experiment, ExperimentKind, ExperimentSpec, ProbSpec, VerdictReport};
pub use params::GraphParams;
pub use rng::RngStream;
pub use walk::{run_walk, run_walk_capped, WalkOutcome, WalkParams};
