//! Goal-conditioned trajectory generation and log replay.
//!
//! The generator follows the agent's reference path and builds a piecewise
//! constant-acceleration speed profile: accelerate toward the cruise speed at
//! `max_accel`, cruise, then brake at `comfort_decel` so the agent comes to rest
//! exactly on the goal's arc-length position and holds there. If even
//! `comfort_decel` cannot stop the agent before the goal it brakes at
//! `hard_decel` right away and the overshoot is reported.
//!
//! Acceleration never switches to braking in the middle of a step. Within every
//! step the speed is therefore monotone and the distance covered lies between
//! the two sampled speeds times the step length.

use alloc::vec::Vec;

#[allow(unused_imports)] // inherent methods once std is linked
use num_traits::Float;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::PathPoint;
use crate::path::Polyline;
use crate::scenario::{AgentRecord, AgentState, Trajectory};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KinematicLimits {
    pub max_accel: f64,
    pub comfort_decel: f64,
    pub hard_decel: f64,
}

impl Default for KinematicLimits {
    fn default() -> Self {
        Self {
            max_accel: 2.0,
            comfort_decel: 3.0,
            hard_decel: 6.0,
        }
    }
}

impl KinematicLimits {
    pub fn is_valid(&self) -> bool {
        self.max_accel > 0.0
            && self.comfort_decel > 0.0
            && self.hard_decel >= self.comfort_decel
            && self.hard_decel.is_finite()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RolloutParams {
    pub horizon_steps: usize,
    pub step_seconds: f64,
    /// Speed the agent accelerates toward when it has room to.
    pub cruise_speed: f64,
    pub limits: KinematicLimits,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rollout {
    pub trajectory: Trajectory,
    /// Distance by which the agent stops past its goal, if it does.
    pub overshoot: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajectoryError {
    #[error("reference path is empty")]
    EmptyPath,
    #[error("horizon must be at least one step")]
    EmptyHorizon,
    #[error("step {step} is past the {horizon}-step reference future")]
    StepOutOfRange { step: usize, horizon: usize },
}

/// Up to three constant-acceleration phases `(duration, accel)`.
#[derive(Clone, Copy, Debug, Default)]
struct Phases {
    items: [(f64, f64); 3],
    len: usize,
}

impl Phases {
    fn push(&mut self, duration: f64, accel: f64) {
        if duration > 0.0 {
            self.items[self.len] = (duration, accel);
            self.len += 1;
        }
    }

    fn iter(&self) -> impl Iterator<Item = &(f64, f64)> {
        self.items[..self.len].iter()
    }
}

#[derive(Clone, Copy, Debug)]
struct SpeedProfile {
    v0: f64,
    phases: Phases,
}

impl SpeedProfile {
    fn stationary() -> Self {
        Self {
            v0: 0.0,
            phases: Phases::default(),
        }
    }

    /// Distance travelled and speed at time `t`. The final speed is held.
    fn sample(&self, t: f64) -> (f64, f64) {
        let (mut s, mut v, mut rem) = (0.0, self.v0, t);
        for &(duration, accel) in self.phases.iter() {
            let d = duration.min(rem);
            s += v * d + 0.5 * accel * d * d;
            v = (v + accel * d).max(0.0);
            rem -= d;
            if rem <= 0.0 {
                return (s, v);
            }
        }
        (s + v * rem, v)
    }
}

fn hard_stop(v0: f64, limits: &KinematicLimits) -> SpeedProfile {
    let mut phases = Phases::default();
    phases.push(v0 / limits.hard_decel, -limits.hard_decel);
    SpeedProfile { v0, phases }
}

/// Profile that comes to rest `distance` meters ahead, or the hard-braking
/// fallback and its overshoot.
fn stop_profile(
    v0: f64,
    cruise: f64,
    distance: f64,
    limits: &KinematicLimits,
    dt: f64,
) -> (SpeedProfile, Option<f64>) {
    let (a, b) = (limits.max_accel, limits.comfort_decel);
    if v0 * v0 / (2.0 * b) > distance + 1e-9 {
        let stop = v0 * v0 / (2.0 * limits.hard_decel);
        let overshoot = (stop > distance + 1e-9).then_some(stop - distance);
        return (hard_stop(v0, limits), overshoot);
    }
    let vc = cruise.max(v0);
    if vc <= 0.0 {
        return (SpeedProfile::stationary(), None);
    }
    let mut phases = Phases::default();
    let trapezoid = (vc * vc - v0 * v0) / (2.0 * a) + vc * vc / (2.0 * b);
    // A cruise phase shorter than a step could put speed-up and braking in one
    // sampling interval.
    if trapezoid + vc * dt <= distance {
        phases.push((vc - v0) / a, a);
        phases.push((distance - trapezoid) / vc, 0.0);
        phases.push(vc / b, -b);
        return (SpeedProfile { v0, phases }, None);
    }
    // Cut acceleration at the last step boundary before the peak and cover
    // the remainder at constant speed.
    let peak = ((distance + v0 * v0 / (2.0 * a)) / (0.5 / a + 0.5 / b)).sqrt().min(vc);
    let steps = ((peak - v0) / a / dt + 1e-9).floor().max(0.0);
    let v1 = v0 + a * steps * dt;
    if v1 <= 0.0 {
        return (SpeedProfile::stationary(), None);
    }
    let covered = (v1 * v1 - v0 * v0) / (2.0 * a) + v1 * v1 / (2.0 * b);
    phases.push(steps * dt, a);
    phases.push((distance - covered).max(0.0) / v1, 0.0);
    phases.push(v1 / b, -b);
    (SpeedProfile { v0, phases }, None)
}

fn sample_along(
    path: &Polyline,
    s0: f64,
    profile: &SpeedProfile,
    params: &RolloutParams,
) -> Trajectory {
    let dt = params.step_seconds;
    let states = (1..=params.horizon_steps)
        .map(|k| {
            let (s, v) = profile.sample(k as f64 * dt);
            let (p, heading) = path.point_at(s0 + s);
            AgentState::new(p.x, p.y, heading, v)
        })
        .collect();
    Trajectory::new(0, states)
}

fn build_path(current: &AgentState, reference_path: &[PathPoint]) -> Result<Polyline, TrajectoryError> {
    Polyline::new(reference_path.iter().copied(), current.heading).ok_or(TrajectoryError::EmptyPath)
}

/// Rolls `current` forward along `reference_path`, stopping at the projection
/// of `goal`. State `i` of the result is `(i + 1) * step_seconds` ahead.
pub fn goal_conditioned_rollout(
    current: &AgentState,
    reference_path: &[PathPoint],
    goal: PathPoint,
    params: &RolloutParams,
) -> Result<Rollout, TrajectoryError> {
    if params.horizon_steps == 0 {
        return Err(TrajectoryError::EmptyHorizon);
    }
    let path = build_path(current, reference_path)?;
    let (s0, _) = path.project(current.position());
    let (s_goal, _) = path.project(goal);
    let (profile, overshoot) = stop_profile(
        current.speed.max(0.0),
        params.cruise_speed,
        s_goal - s0,
        &params.limits,
        params.step_seconds,
    );
    Ok(Rollout {
        trajectory: sample_along(&path, s0, &profile, params),
        overshoot,
    })
}

/// Brakes at `hard_decel` immediately and holds.
pub fn stop_rollout(
    current: &AgentState,
    reference_path: &[PathPoint],
    params: &RolloutParams,
) -> Result<Rollout, TrajectoryError> {
    if params.horizon_steps == 0 {
        return Err(TrajectoryError::EmptyHorizon);
    }
    let path = build_path(current, reference_path)?;
    let (s0, _) = path.project(current.position());
    let profile = hard_stop(current.speed.max(0.0), &params.limits);
    Ok(Rollout {
        trajectory: sample_along(&path, s0, &profile, params),
        overshoot: None,
    })
}

/// Tail of the recorded future starting at `from_step`. At the end of the
/// horizon this is the terminal state alone.
pub fn replay_rollout(agent: &AgentRecord, from_step: usize) -> Result<Trajectory, TrajectoryError> {
    let horizon = agent.reference_future.len();
    if from_step > horizon || horizon == 0 {
        return Err(TrajectoryError::StepOutOfRange {
            step: from_step,
            horizon,
        });
    }
    let states: Vec<AgentState> = if from_step == horizon {
        alloc::vec![agent.reference_future[horizon - 1]]
    } else {
        agent.reference_future[from_step..].to_vec()
    };
    Ok(Trajectory::new(from_step, states))
}
