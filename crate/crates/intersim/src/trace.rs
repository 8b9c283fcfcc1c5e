//! Episode trace files.
//!
//! A trace carries everything needed to inspect or render an episode without
//! the original scenario: agent footprints, the map, one frame per step with
//! each agent's state and committed future, the event log and the final
//! committed trajectories.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use intersim_core::{
    AgentId, AgentKind, EpisodeResult, Event, Frame, MapFeature, PlannerSpec, ResolutionPolicy,
    Scenario, Trajectory,
};
use serde::{Deserialize, Serialize};

use crate::io::{write_text, IoError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentMeta {
    pub id: AgentId,
    pub kind: AgentKind,
    pub length: f64,
    pub width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub scenario_id: String,
    pub policy: ResolutionPolicy,
    pub planner: PlannerSpec,
    pub seed: u64,
    pub ego_id: AgentId,
    pub step_seconds: f64,
    pub map: Vec<MapFeature>,
    pub agents: Vec<AgentMeta>,
    pub frames: Vec<Frame>,
    pub events: Vec<Event>,
    pub relevant: BTreeSet<AgentId>,
    pub committed: BTreeMap<AgentId, Trajectory>,
    pub resolutions: usize,
}

impl Trace {
    pub fn new(scenario: &Scenario, planner: PlannerSpec, result: EpisodeResult) -> Self {
        Self {
            scenario_id: result.scenario_id,
            policy: result.policy,
            planner,
            seed: result.seed,
            ego_id: scenario.ego_id.clone(),
            step_seconds: scenario.config.step_seconds,
            map: scenario.map.clone(),
            agents: scenario
                .agents
                .iter()
                .map(|a| AgentMeta {
                    id: a.id.clone(),
                    kind: a.kind,
                    length: a.length,
                    width: a.width,
                })
                .collect(),
            frames: result.frames,
            events: result.events,
            relevant: result.relevant,
            committed: result.committed,
            resolutions: result.resolutions,
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), IoError> {
        write_text(path, &serde_json::to_string_pretty(self).expect("traces serialize"))
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        let text = std::fs::read_to_string(path).map_err(|source| IoError::Read {
            path: path.to_owned(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| IoError::Schema {
            path: path.to_owned(),
            source,
        })
    }

    pub fn agent(&self, id: &AgentId) -> Option<&AgentMeta> {
        self.agents.iter().find(|a| &a.id == id)
    }
}
