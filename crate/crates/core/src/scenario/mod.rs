//! Scenario data model and validation.
//!
//! Time indexing: a scenario holds the observed history up to and including the
//! current instant, then `horizon_steps` reference states. Reference state `i`
//! lies `(i + 1) * step_seconds` after the current instant.

mod generators;

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};
use core::fmt;

#[allow(unused_imports)] // inherent methods once std is linked
use num_traits::Float;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Dims, PathPoint};
use crate::path::Polyline;

pub use generators::{
    car_following_suite, chain_suite, crossing_suite, gen_car_following, gen_chain, gen_crossing,
    CarFollowingParams, ChainParams, CrossingParams,
};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub String);

impl AgentId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for AgentId {
    fn from(s: &str) -> Self {
        AgentId(s.into())
    }
}

impl From<String> for AgentId {
    fn from(s: String) -> Self {
        AgentId(s)
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub step_seconds: f64,
    pub observed_seconds: f64,
    pub horizon_seconds: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            step_seconds: 0.5,
            observed_seconds: 1.0,
            horizon_seconds: 8.0,
        }
    }
}

impl SimConfig {
    pub fn horizon_steps(&self) -> usize {
        (self.horizon_seconds / self.step_seconds).round() as usize
    }

    /// Number of observed states, the current one included.
    pub fn observed_states(&self) -> usize {
        (self.observed_seconds / self.step_seconds).round() as usize + 1
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let ok = self.step_seconds.is_finite()
            && self.step_seconds > 0.0
            && self.observed_seconds.is_finite()
            && self.observed_seconds >= 0.0
            && self.horizon_seconds.is_finite()
            && self.horizon_seconds > 0.0;
        let ratio = self.horizon_seconds / self.step_seconds;
        if !ok || (ratio - ratio.round()).abs() > 1e-6 || ratio.round() < 1.0 {
            return Err(ScenarioError::InvalidConfig {
                step_seconds: self.step_seconds,
                horizon_seconds: self.horizon_seconds,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
}

impl AgentState {
    pub const fn new(x: f64, y: f64, heading: f64, speed: f64) -> Self {
        Self {
            x,
            y,
            heading,
            speed,
        }
    }

    pub fn position(&self) -> PathPoint {
        PathPoint::new(self.x, self.y)
    }

    fn is_valid(&self) -> bool {
        self.x.is_finite()
            && self.y.is_finite()
            && self.heading.is_finite()
            && self.speed.is_finite()
            && self.speed >= 0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Vehicle,
    Pedestrian,
    Cyclist,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub id: AgentId,
    pub kind: AgentKind,
    pub length: f64,
    pub width: f64,
    pub observed: Vec<AgentState>,
    pub reference_future: Vec<AgentState>,
}

impl AgentRecord {
    pub fn dims(&self) -> Dims {
        Dims::new(self.length, self.width)
    }

    /// The state at the current instant (last observed).
    pub fn current(&self) -> &AgentState {
        self.observed.last().expect("validated agent has history")
    }

    /// Final reference position; agents keep this goal unless conflict
    /// resolution moves it.
    pub fn goal(&self) -> PathPoint {
        self.reference_future
            .last()
            .map(AgentState::position)
            .unwrap_or_else(|| self.current().position())
    }

    /// Center-point path through the current state and the reference future.
    pub fn reference_path(&self) -> Polyline {
        let cur = self.current();
        Polyline::new(
            core::iter::once(cur.position())
                .chain(self.reference_future.iter().map(AgentState::position)),
            cur.heading,
        )
        .expect("path has at least the current point")
    }

    /// State `step` steps after the current instant, with step 0 the current one.
    pub fn reference_state(&self, step: usize) -> &AgentState {
        match step {
            0 => self.current(),
            k => &self.reference_future[k - 1],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapFeatureKind {
    LaneCenterline,
    RoadEdge,
    Crosswalk,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapFeature {
    #[serde(rename = "type")]
    pub kind: MapFeatureKind,
    pub points: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub config: SimConfig,
    pub ego_id: AgentId,
    pub map: Vec<MapFeature>,
    pub agents: Vec<AgentRecord>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("invalid config: step {step_seconds} s must divide horizon {horizon_seconds} s")]
    InvalidConfig {
        step_seconds: f64,
        horizon_seconds: f64,
    },
    #[error("duplicate agent id `{0}`")]
    DuplicateId(AgentId),
    #[error("ego `{0}` is not among the agents")]
    MissingEgo(AgentId),
    #[error("agent `{agent}` has {found} reference states, expected {expected}")]
    LengthMismatch {
        agent: AgentId,
        expected: usize,
        found: usize,
    },
    #[error("agent `{0}` has no observed states")]
    EmptyHistory(AgentId),
    #[error("agent `{0}` has a non-finite value or negative speed")]
    InvalidState(AgentId),
    #[error("agent `{0}` has non-positive dimensions")]
    InvalidDims(AgentId),
    #[error("map feature {0} has a non-finite point")]
    InvalidMap(usize),
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.config.validate()?;
        let horizon = self.config.horizon_steps();
        let mut seen = BTreeSet::new();
        for agent in &self.agents {
            if !seen.insert(&agent.id) {
                return Err(ScenarioError::DuplicateId(agent.id.clone()));
            }
            if !(agent.length > 0.0 && agent.width > 0.0) {
                return Err(ScenarioError::InvalidDims(agent.id.clone()));
            }
            if agent.observed.is_empty() {
                return Err(ScenarioError::EmptyHistory(agent.id.clone()));
            }
            if agent.reference_future.len() != horizon {
                return Err(ScenarioError::LengthMismatch {
                    agent: agent.id.clone(),
                    expected: horizon,
                    found: agent.reference_future.len(),
                });
            }
            let all_valid = agent
                .observed
                .iter()
                .chain(&agent.reference_future)
                .all(AgentState::is_valid);
            if !all_valid {
                return Err(ScenarioError::InvalidState(agent.id.clone()));
            }
        }
        if !seen.contains(&self.ego_id) {
            return Err(ScenarioError::MissingEgo(self.ego_id.clone()));
        }
        for (i, feature) in self.map.iter().enumerate() {
            if feature.points.iter().flatten().any(|v| !v.is_finite()) {
                return Err(ScenarioError::InvalidMap(i));
            }
        }
        Ok(())
    }

    pub fn horizon_steps(&self) -> usize {
        self.config.horizon_steps()
    }

    pub fn agent_index(&self, id: &AgentId) -> Option<usize> {
        self.agents.iter().position(|a| &a.id == id)
    }

    pub fn agent(&self, id: &AgentId) -> Option<&AgentRecord> {
        self.agents.iter().find(|a| &a.id == id)
    }

    pub fn ego(&self) -> &AgentRecord {
        self.agent(&self.ego_id).expect("validated scenario has its ego")
    }

    /// Same scene with a different ego agent.
    pub fn with_ego(mut self, id: impl Into<AgentId>) -> Self {
        self.ego_id = id.into();
        self
    }
}

/// Trajectory of one agent at fixed step spacing.
///
/// `states[i]` belongs to reference step `start_step + i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub start_step: usize,
    pub states: Vec<AgentState>,
}

impl Trajectory {
    pub fn new(start_step: usize, states: Vec<AgentState>) -> Self {
        Self { start_step, states }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// States from index `from` onward, renumbered to start at `start_step + from`.
    pub fn tail(&self, from: usize) -> Trajectory {
        Trajectory::new(
            self.start_step + from,
            self.states[from.min(self.states.len())..].to_vec(),
        )
    }

    pub fn positions(&self) -> impl Iterator<Item = PathPoint> + '_ {
        self.states.iter().map(AgentState::position)
    }

    /// Largest pointwise position difference against `other` over their
    /// common indices; infinite when the lengths differ.
    pub fn max_deviation(&self, other: &Trajectory) -> f64 {
        if self.states.len() != other.states.len() {
            return f64::INFINITY;
        }
        self.positions()
            .zip(other.positions())
            .map(|(a, b)| a.distance(b))
            .fold(0.0, f64::max)
    }
}

/// Wraps an angle into (-pi, pi].
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = a % TAU;
    if r <= -PI {
        r += TAU;
    } else if r > PI {
        r -= TAU;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn agent(id: &str, n: usize) -> AgentRecord {
        AgentRecord {
            id: id.into(),
            kind: AgentKind::Vehicle,
            length: 4.5,
            width: 2.0,
            observed: vec![AgentState::new(0.0, 0.0, 0.0, 1.0)],
            reference_future: (0..n)
                .map(|i| AgentState::new(0.5 * (i + 1) as f64, 0.0, 0.0, 1.0))
                .collect(),
        }
    }

    fn scene(agents: Vec<AgentRecord>, ego: &str) -> Scenario {
        Scenario {
            id: "t".into(),
            config: SimConfig::default(),
            ego_id: ego.into(),
            map: vec![],
            agents,
        }
    }

    #[test]
    fn defaults_give_sixteen_steps() {
        assert_eq!(SimConfig::default().horizon_steps(), 16);
        assert_eq!(SimConfig::default().observed_states(), 3);
    }

    #[test]
    fn validation_diagnostics() {
        assert_eq!(scene(vec![agent("a", 16)], "a").validate(), Ok(()));
        assert_eq!(
            scene(vec![agent("a", 16)], "z").validate(),
            Err(ScenarioError::MissingEgo("z".into()))
        );
        assert_eq!(
            scene(vec![agent("a", 16), agent("a", 16)], "a").validate(),
            Err(ScenarioError::DuplicateId("a".into()))
        );
        assert_eq!(
            scene(vec![agent("a", 15)], "a").validate(),
            Err(ScenarioError::LengthMismatch {
                agent: "a".into(),
                expected: 16,
                found: 15
            })
        );
        let mut bad = agent("a", 16);
        bad.reference_future[3].speed = -1.0;
        assert_eq!(
            scene(vec![bad], "a").validate(),
            Err(ScenarioError::InvalidState("a".into()))
        );
        let mut s = scene(vec![agent("a", 16)], "a");
        s.config.step_seconds = 0.3;
        assert!(matches!(
            s.validate(),
            Err(ScenarioError::InvalidConfig { .. })
        ));
    }

    #[test]
    fn angle_wrapping() {
        assert!((normalize_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(-PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(0.25) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn tail_renumbers() {
        let t = Trajectory::new(0, agent("a", 16).reference_future);
        let tail = t.tail(10);
        assert_eq!((tail.start_step, tail.len()), (10, 6));
        assert_eq!(t.tail(16).len(), 0);
    }
}
