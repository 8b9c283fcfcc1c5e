//! Batch evaluation over many scenarios and policies.
//!
//! Episodes are independent, so they fan out over a fixed-size worker pool.
//! Results are collected in job order, which keeps every report identical no
//! matter how many workers ran it.

use std::path::{Path, PathBuf};

use intersim_core::metrics::{episode_metrics, MetricsError};
use intersim_core::{
    run_episode, Engine, EngineError, EpisodeResult, OverrideRegistry, PerturbedParams,
    PlannerSpec, ResolutionPolicy, Scenario,
};
use rayon::prelude::*;
use thiserror::Error;

use crate::io::IoError;
use crate::report::{
    episodes_csv, policy_label, summarize, summary_csv, write_csv, write_json, EpisodeRow,
    SummaryRow,
};

/// Planner family; per-episode parameters are drawn from the episode seed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PlannerChoice {
    Replay,
    Perturbed { lateral_sigma: f64 },
    Slowdown { decel: f64 },
}

impl PlannerChoice {
    pub fn spec(&self, seed: u64) -> PlannerSpec {
        match *self {
            PlannerChoice::Replay => PlannerSpec::Replay,
            PlannerChoice::Perturbed { lateral_sigma } => PlannerSpec::Perturbed(PerturbedParams {
                lateral_sigma,
                ..PerturbedParams::sampled(seed)
            }),
            PlannerChoice::Slowdown { decel } => PlannerSpec::Slowdown { decel },
        }
    }
}

#[derive(Clone, Debug)]
pub struct BatchConfig {
    pub policies: Vec<ResolutionPolicy>,
    pub planner: PlannerChoice,
    pub seed: u64,
    pub workers: usize,
    pub overrides: OverrideRegistry,
}

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("nothing to run: {0}")]
    Empty(&'static str),
    #[error("worker count must be at least 1")]
    NoWorkers,
    #[error("scenario `{scenario}` under {policy}: {source}")]
    Episode {
        scenario: String,
        policy: String,
        source: EngineError,
    },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("cannot start the worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error(transparent)]
    Io(#[from] IoError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchOutput {
    pub episodes: Vec<EpisodeRow>,
    pub summary: Vec<SummaryRow>,
}

/// Seed of the `index`-th scenario of a batch.
pub fn episode_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add(index as u64)
}

/// One episode with the oracle relation predictor and the given overrides.
pub fn run_one(
    scenario: &Scenario,
    policy: ResolutionPolicy,
    planner: &PlannerSpec,
    overrides: &OverrideRegistry,
    seed: u64,
) -> Result<EpisodeResult, EngineError> {
    let engine = Engine::new(scenario, policy).with_overrides(overrides);
    run_episode(&engine, planner, seed)
}

pub fn run_batch(scenarios: &[Scenario], config: &BatchConfig) -> Result<BatchOutput, BatchError> {
    if scenarios.is_empty() {
        return Err(BatchError::Empty("no scenarios"));
    }
    if config.policies.is_empty() {
        return Err(BatchError::Empty("no policies"));
    }
    if config.workers == 0 {
        return Err(BatchError::NoWorkers);
    }
    let jobs: Vec<(ResolutionPolicy, usize)> = config
        .policies
        .iter()
        .flat_map(|&p| (0..scenarios.len()).map(move |i| (p, i)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()?;
    let results: Vec<Result<EpisodeRow, BatchError>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(policy, i)| {
                let scenario = &scenarios[i];
                let seed = episode_seed(config.seed, i);
                let planner = config.planner.spec(seed);
                let label = policy_label(&policy);
                let result = run_one(scenario, policy, &planner, &config.overrides, seed).map_err(
                    |source| BatchError::Episode {
                        scenario: scenario.id.clone(),
                        policy: label.clone(),
                        source,
                    },
                )?;
                Ok(EpisodeRow {
                    scenario_id: scenario.id.clone(),
                    policy: label,
                    seed,
                    metrics: episode_metrics(&result, scenario),
                    resolutions: result.resolutions,
                    overshoot_agents: result.overshoot_agents().len(),
                })
            })
            .collect()
    });
    let episodes = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let summary = summarize(&episodes)?;
    Ok(BatchOutput { episodes, summary })
}

/// Writes `episodes.csv`, `report.csv` and `report.json` into `dir`.
pub fn write_outputs(output: &BatchOutput, dir: &Path) -> Result<Vec<PathBuf>, IoError> {
    let paths = [
        dir.join("episodes.csv"),
        dir.join("report.csv"),
        dir.join("report.json"),
    ];
    write_csv(&episodes_csv(&output.episodes), &paths[0])?;
    write_csv(&summary_csv(&output.summary), &paths[1])?;
    write_json(&output.summary, &paths[2])?;
    Ok(paths.to_vec())
}
