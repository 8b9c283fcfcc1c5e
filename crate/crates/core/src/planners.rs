//! Ego planners: log replay, perturbed replay and constant deceleration.
//!
//! Each planner derives one full-horizon plan from the scenario and hands out
//! its tail at every step, so an unchanged plan is resubmitted as-is.

use alloc::vec::Vec;

#[allow(unused_imports)] // inherent methods once std is linked
use num_traits::Float;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::{AgentState, Scenario, Trajectory};
use crate::trajectory::replay_rollout;

/// Deceleration of the slowing-down ego, m/s^2.
pub const DEFAULT_SLOWDOWN_DECEL: f64 = 1.5;
pub const DEFAULT_LATERAL_SIGMA: f64 = 0.3;
/// Step-to-step correlation of the lateral jitter.
const LATERAL_CORRELATION: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("invalid planner parameters: {0}")]
    InvalidParams(&'static str),
    #[error("step {step} is past the {horizon}-step horizon")]
    StepOutOfRange { step: usize, horizon: usize },
}

pub trait Planner {
    /// Ego plan from `step` to the end of the horizon.
    fn plan(&self, scenario: &Scenario, step: usize) -> Result<Trajectory, PlanError>;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbedParams {
    pub speed_scale: f64,
    pub lateral_sigma: f64,
    pub seed: u64,
}

impl PerturbedParams {
    /// Default surrogate: speed scale drawn from [0.85, 1.15] and 0.3 m of
    /// lateral jitter.
    pub fn sampled(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            speed_scale: rng.random_range(0.85..1.15),
            lateral_sigma: DEFAULT_LATERAL_SIGMA,
            seed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlannerSpec {
    Replay,
    Perturbed(PerturbedParams),
    Slowdown { decel: f64 },
}

impl PlannerSpec {
    pub fn validate(&self) -> Result<(), PlanError> {
        match *self {
            PlannerSpec::Replay => Ok(()),
            PlannerSpec::Perturbed(p) => {
                if !(p.speed_scale > 0.0 && p.speed_scale.is_finite()) {
                    Err(PlanError::InvalidParams("speed_scale must be positive"))
                } else if !(p.lateral_sigma >= 0.0 && p.lateral_sigma.is_finite()) {
                    Err(PlanError::InvalidParams("lateral_sigma must be non-negative"))
                } else {
                    Ok(())
                }
            }
            PlannerSpec::Slowdown { decel } => {
                if decel > 0.0 && decel.is_finite() {
                    Ok(())
                } else {
                    Err(PlanError::InvalidParams("decel must be positive"))
                }
            }
        }
    }
}

impl Planner for PlannerSpec {
    fn plan(&self, scenario: &Scenario, step: usize) -> Result<Trajectory, PlanError> {
        self.validate()?;
        let horizon = scenario.horizon_steps();
        if step > horizon {
            return Err(PlanError::StepOutOfRange { step, horizon });
        }
        Ok(match *self {
            PlannerSpec::Replay => replay_plan(scenario, step),
            PlannerSpec::Perturbed(p) => perturbed_plan(scenario, step, &p),
            PlannerSpec::Slowdown { decel } => slowdown_plan(scenario, step, decel),
        })
    }
}

fn tail(full: Vec<AgentState>, step: usize) -> Trajectory {
    Trajectory::new(0, full).tail(step)
}

pub fn replay_plan(scenario: &Scenario, step: usize) -> Trajectory {
    replay_rollout(scenario.ego(), step).expect("step within the validated horizon")
}

/// Ego log re-timed by `speed_scale` along its own path, with smooth lateral
/// jitter clamped to two standard deviations.
pub fn perturbed_plan(scenario: &Scenario, step: usize, params: &PerturbedParams) -> Trajectory {
    if params.speed_scale == 1.0 && params.lateral_sigma == 0.0 {
        return replay_plan(scenario, step);
    }
    let ego = scenario.ego();
    let path = ego.reference_path();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let sigma = params.lateral_sigma;
    let innovation = (1.0 - LATERAL_CORRELATION * LATERAL_CORRELATION).sqrt();
    let mut jitter = 0.0;
    let mut arc = 0.0;
    let mut prev = ego.current().position();
    let full = ego
        .reference_future
        .iter()
        .map(|st| {
            arc += prev.distance(st.position());
            prev = st.position();
            let noise: f64 = rng.sample(StandardNormal);
            jitter = LATERAL_CORRELATION * jitter + innovation * noise;
            let lateral = (sigma * jitter).clamp(-2.0 * sigma, 2.0 * sigma);
            let (p, heading) = path.point_at(params.speed_scale * arc);
            let q = p.offset(heading + core::f64::consts::FRAC_PI_2, lateral);
            AgentState::new(q.x, q.y, heading, params.speed_scale * st.speed)
        })
        .collect();
    tail(full, step)
}

/// Constant deceleration from the current speed, capped at every step by the
/// logged speed and integrated along the logged path.
pub fn slowdown_plan(scenario: &Scenario, step: usize, decel: f64) -> Trajectory {
    let ego = scenario.ego();
    let path = ego.reference_path();
    let dt = scenario.config.step_seconds;
    let v0 = ego.current().speed;
    let (s0, _) = path.project(ego.current().position());
    let mut prev_v = v0;
    let mut arc = s0;
    let full = ego
        .reference_future
        .iter()
        .enumerate()
        .map(|(i, logged)| {
            let t = (i + 1) as f64 * dt;
            let v = (v0 - decel * t).max(0.0).min(logged.speed);
            arc += 0.5 * (prev_v + v) * dt;
            prev_v = v;
            let (p, heading) = path.point_at(arc);
            AgentState::new(p.x, p.y, heading, v)
        })
        .collect();
    tail(full, step)
}
