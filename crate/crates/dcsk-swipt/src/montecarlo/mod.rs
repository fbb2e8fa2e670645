//! Monte Carlo simulation of the relay protocols and baselines.

use rayon::prelude::*;

pub mod engine;
pub mod params;
pub mod sim;

pub use engine::{BitEngine, Hop};
pub use params::{db_to_linear, Engine, ParamError, SystemParams, TapProfile};
pub use sim::{
    baseline_trial, protocol_trial, run_baseline_sim, run_protocol_sim, run_protocol_traced, Baseline, Protocol,
    RunResult, Tally,
};

/// Splits `params.slots` over `trials` independent RNG streams, runs them on
/// the current rayon pool and merges the counters in trial order.
pub fn run_protocol_parallel(params: &SystemParams, protocol: Protocol, trials: u64) -> Result<RunResult, ParamError> {
    let tallies = run_split(params, trials, |p, t| protocol_trial(p, protocol, t))?;
    Ok(RunResult::from_tally(merge(tallies), protocol.silent_boundaries(), true))
}

/// Baseline counterpart of [`run_protocol_parallel`].
pub fn run_baseline_parallel(params: &SystemParams, baseline: Baseline, trials: u64) -> Result<RunResult, ParamError> {
    let tallies = run_split(params, trials, |p, t| baseline_trial(p, baseline, t))?;
    Ok(RunResult::from_tally(merge(tallies), false, false))
}

fn run_split(
    params: &SystemParams,
    trials: u64,
    f: impl Fn(&SystemParams, u64) -> Result<Tally, ParamError> + Sync,
) -> Result<Vec<Tally>, ParamError> {
    let trials = trials.max(1);
    let per = params.slots / trials;
    let extra = params.slots % trials;
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut p = params.clone();
            p.slots = per + u64::from(t < extra);
            f(&p, t)
        })
        .collect()
}

fn merge(tallies: Vec<Tally>) -> Tally {
    let mut it = tallies.into_iter();
    let mut acc = it.next().unwrap_or_default();
    for t in it {
        acc.merge(&t);
    }
    acc
}
