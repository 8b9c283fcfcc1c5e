//! The closed-loop engine.
//!
//! Every agent owns a committed trajectory covering the whole horizon. When the
//! ego submits a new plan the engine splices it in, then repeatedly takes the
//! earliest collision between a re-planned agent and anyone else, decides who
//! yields, and re-plans the yielding agent toward a goal short of the
//! conflict. Agents re-planned this way join the set that is checked again, so
//! resolution cascades down queues of traffic. Finally every agent advances
//! one step along its committed trajectory.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent methods once std is linked
use num_traits::Float;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    first_collision_step, CrossKind, CrossPoint, GeometryError, PathPoint, MIN_CROSSING_SIN,
};
use crate::path::Polyline;
use crate::planners::{PlanError, Planner};
use crate::relation::{
    CrossPointOracle, OverrideRegistry, PairContext, RelationError, RelationPredictor,
    RelationSource,
};
use crate::scenario::{AgentId, AgentState, Scenario, Trajectory};
use crate::trajectory::{
    goal_conditioned_rollout, stop_rollout, KinematicLimits, RolloutParams, TrajectoryError,
};

/// Extra distance a yielding agent keeps from the conflict, meters.
pub const STANDOFF_BUFFER: f64 = 2.0;
/// Plans closer than this everywhere count as unchanged, meters.
pub const PLAN_CHANGE_TOLERANCE: f64 = 0.01;
/// Conflicts of one pair allowed before the reactor is stopped outright.
const ATTEMPTS_BEFORE_STOP: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// Detect and log conflicts, never resolve them.
    M0,
    /// Both agents of a conflict stop short of the cross point.
    M1,
    /// Only the reactor yields.
    Full,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EgoMode {
    /// The ego plan is never modified by `Full` resolution.
    Authoritative,
    /// The ego yields like any other agent when labelled reactor.
    #[default]
    Cooperative,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolutionPolicy {
    pub kind: PolicyKind,
    pub ego_mode: EgoMode,
}

impl ResolutionPolicy {
    pub const fn new(kind: PolicyKind, ego_mode: EgoMode) -> Self {
        Self { kind, ego_mode }
    }

    pub const fn full() -> Self {
        Self::new(PolicyKind::Full, EgoMode::Cooperative)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConflictRecord {
    pub agent_a: AgentId,
    pub agent_b: AgentId,
    pub first_collision_step: usize,
    pub collision_point: PathPoint,
    pub cross: Option<CrossPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    PlanUpdated,
    ConflictDetected {
        agent_a: AgentId,
        agent_b: AgentId,
        collision_step: usize,
    },
    RelationUsed {
        influencer: AgentId,
        reactor: AgentId,
        source: RelationSource,
        /// The label was overruled because the ego plan is authoritative.
        forced: bool,
    },
    Regenerated {
        agent: AgentId,
        goal: PathPoint,
    },
    Overshoot {
        agent: AgentId,
        distance: f64,
    },
    /// Repeated conflicts; the reactor now brakes to a stop immediately.
    Escalated {
        influencer: AgentId,
        reactor: AgentId,
    },
    /// Still colliding after escalation; left as is.
    Unresolved {
        agent_a: AgentId,
        agent_b: AgentId,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub step: usize,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Relation(#[from] RelationError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error("planner failed at step {step}: {source}")]
    Planner { step: usize, source: PlanError },
    #[error("plan starts at step {found}, expected {expected}")]
    PlanMisaligned { expected: usize, found: usize },
    #[error("plan covers {found} steps but {needed} remain")]
    PlanTooShort { needed: usize, found: usize },
    #[error("the episode already ended at step {0}")]
    EpisodeFinished(usize),
    #[error("resolution did not converge within {limit} re-plans")]
    IterationBound { limit: usize },
    #[error("unknown agent `{0}`")]
    UnknownAgent(AgentId),
}

/// Mutable simulation state of one episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub current_step: usize,
    /// Full-horizon trajectories; index `i` is `(i + 1)` steps after the start.
    pub committed: BTreeMap<AgentId, Trajectory>,
    /// Environment agents whose committed trajectory departs from the log.
    pub relevant: BTreeSet<AgentId>,
    pub events: Vec<Event>,
    /// Re-plans performed so far.
    pub resolutions: usize,
    last_plan: Option<Trajectory>,
}

impl SimState {
    pub fn trajectory(&self, id: &AgentId) -> &Trajectory {
        &self.committed[id]
    }

    fn log(&mut self, kind: EventKind) {
        self.events.push(Event {
            step: self.current_step,
            kind,
        });
    }
}

/// Snapshot of every agent at one step, with its committed future.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub step: usize,
    pub agents: Vec<FrameAgent>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameAgent {
    pub id: AgentId,
    pub state: AgentState,
    pub future: Vec<PathPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub scenario_id: String,
    pub policy: ResolutionPolicy,
    pub seed: u64,
    pub frames: Vec<Frame>,
    pub committed: BTreeMap<AgentId, Trajectory>,
    pub events: Vec<Event>,
    pub relevant: BTreeSet<AgentId>,
    pub resolutions: usize,
}

impl EpisodeResult {
    pub fn overshoot_agents(&self) -> BTreeSet<AgentId> {
        self.events
            .iter()
            .filter_map(|e| match &e.kind {
                EventKind::Overshoot { agent, .. } => Some(agent.clone()),
                _ => None,
            })
            .collect()
    }
}

/// Per-call bookkeeping for the escalation rule.
#[derive(Default)]
struct Attempts {
    per_pair: BTreeMap<(AgentId, AgentId), usize>,
    abandoned: BTreeSet<(AgentId, AgentId)>,
}

enum Next {
    Replan,
    Stop,
    GiveUp,
}

impl Attempts {
    fn bump(&mut self, key: (AgentId, AgentId)) -> Next {
        let n = self.per_pair.entry(key).or_insert(0);
        *n += 1;
        match *n {
            n if n <= ATTEMPTS_BEFORE_STOP => Next::Replan,
            n if n == ATTEMPTS_BEFORE_STOP + 1 => Next::Stop,
            _ => Next::GiveUp,
        }
    }
}

fn unordered(a: &AgentId, b: &AgentId) -> (AgentId, AgentId) {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

static ORACLE: CrossPointOracle = CrossPointOracle;
static NO_OVERRIDES: OverrideRegistry = OverrideRegistry::new();

pub struct Engine<'a> {
    scenario: &'a Scenario,
    policy: ResolutionPolicy,
    limits: KinematicLimits,
    predictor: &'a dyn RelationPredictor,
    overrides: &'a OverrideRegistry,
}

impl<'a> Engine<'a> {
    pub fn new(scenario: &'a Scenario, policy: ResolutionPolicy) -> Self {
        Self {
            scenario,
            policy,
            limits: KinematicLimits::default(),
            predictor: &ORACLE,
            overrides: &NO_OVERRIDES,
        }
    }

    pub fn with_predictor(mut self, predictor: &'a dyn RelationPredictor) -> Self {
        self.predictor = predictor;
        self
    }

    pub fn with_overrides(mut self, overrides: &'a OverrideRegistry) -> Self {
        self.overrides = overrides;
        self
    }

    pub fn with_limits(mut self, limits: KinematicLimits) -> Self {
        self.limits = limits;
        self
    }

    pub fn scenario(&self) -> &'a Scenario {
        self.scenario
    }

    pub fn policy(&self) -> ResolutionPolicy {
        self.policy
    }

    fn horizon(&self) -> usize {
        self.scenario.horizon_steps()
    }

    /// Every agent committed to its log replay.
    pub fn initial_state(&self) -> SimState {
        SimState {
            current_step: 0,
            committed: self
                .scenario
                .agents
                .iter()
                .map(|a| (a.id.clone(), Trajectory::new(0, a.reference_future.clone())))
                .collect(),
            relevant: BTreeSet::new(),
            events: Vec::new(),
            resolutions: 0,
            last_plan: None,
        }
    }

    fn record(&self, id: &AgentId) -> Result<&'a crate::scenario::AgentRecord, EngineError> {
        self.scenario
            .agent(id)
            .ok_or_else(|| EngineError::UnknownAgent(id.clone()))
    }

    /// Where `id` is at the current step.
    pub fn current_state(&self, state: &SimState, id: &AgentId) -> Result<AgentState, EngineError> {
        Ok(match state.current_step {
            0 => *self.record(id)?.current(),
            s => state.committed[id].states[s - 1],
        })
    }

    fn check_plan(&self, plan: &Trajectory, state: &SimState) -> Result<(), EngineError> {
        let s = state.current_step;
        if s >= self.horizon() {
            return Err(EngineError::EpisodeFinished(s));
        }
        if plan.start_step != s {
            return Err(EngineError::PlanMisaligned {
                expected: s,
                found: plan.start_step,
            });
        }
        if plan.len() < self.horizon() - s {
            return Err(EngineError::PlanTooShort {
                needed: self.horizon() - s,
                found: plan.len(),
            });
        }
        Ok(())
    }

    fn splice(&self, trajectory: &mut Trajectory, from: usize, states: &[AgentState]) {
        let n = self.horizon() - from;
        trajectory.states.truncate(from);
        trajectory.states.extend_from_slice(&states[..n]);
    }

    fn conflict_between(
        &self,
        committed: &BTreeMap<AgentId, Trajectory>,
        from: usize,
        a: &AgentId,
        b: &AgentId,
    ) -> Result<Option<ConflictRecord>, EngineError> {
        let (ra, rb) = (self.record(a)?, self.record(b)?);
        let (ta, tb) = (&committed[a], &committed[b]);
        let Some(k) = first_collision_step(ta, tb, ra.dims(), rb.dims(), from)? else {
            return Ok(None);
        };
        let cross = crate::geometry::cross_point(&ta.tail(from), &tb.tail(from), ra.dims(), rb.dims())?
            .map(|c| CrossPoint {
                index_a: c.index_a + from,
                index_b: c.index_b + from,
                ..c
            });
        Ok(Some(ConflictRecord {
            agent_a: a.clone(),
            agent_b: b.clone(),
            first_collision_step: k,
            collision_point: ta.states[k].position().midpoint(tb.states[k].position()),
            cross,
        }))
    }

    /// Conflicts between `plan` and every environment agent, earliest first.
    pub fn detect_conflicts(
        &self,
        plan: &Trajectory,
        state: &SimState,
    ) -> Result<Vec<ConflictRecord>, EngineError> {
        self.check_plan(plan, state)?;
        let ego = &self.scenario.ego_id;
        let mut committed = state.committed.clone();
        let s = state.current_step;
        self.splice(committed.get_mut(ego).expect("ego committed"), s, &plan.states);
        let mut out = Vec::new();
        for agent in &self.scenario.agents {
            if &agent.id != ego {
                if let Some(c) = self.conflict_between(&committed, s, ego, &agent.id)? {
                    out.push(c);
                }
            }
        }
        out.sort_by(|x, y| {
            x.first_collision_step
                .cmp(&y.first_collision_step)
                .then_with(|| x.agent_b.cmp(&y.agent_b))
        });
        Ok(out)
    }

    /// Path a re-planned agent follows: the log for environment agents, the
    /// latest plan for the ego. Also returns its cruise speed.
    fn regen_path(&self, state: &SimState, id: &AgentId) -> Result<(Vec<PathPoint>, f64), EngineError> {
        let s = state.current_step;
        let current = self.current_state(state, id)?;
        let mut points = vec![current.position()];
        let cruise;
        match (&state.last_plan, id == &self.scenario.ego_id) {
            (Some(plan), true) => {
                let skip = s.saturating_sub(plan.start_step);
                points.extend(plan.states[skip..].iter().map(AgentState::position));
                cruise = plan.states[skip..].iter().map(|st| st.speed).fold(0.0, f64::max);
            }
            _ => {
                let rec = self.record(id)?;
                points.extend(rec.reference_future[s..].iter().map(AgentState::position));
                cruise = rec.reference_future[s..]
                    .iter()
                    .map(|st| st.speed)
                    .fold(0.0, f64::max);
            }
        }
        Ok((points, cruise))
    }

    fn rollout_params(&self, state: &SimState, cruise: f64) -> RolloutParams {
        RolloutParams {
            horizon_steps: self.horizon() - state.current_step,
            step_seconds: self.scenario.config.step_seconds,
            cruise_speed: cruise,
            limits: self.limits,
        }
    }

    /// Arc length along `me`'s path at which it should come to rest so it stays
    /// clear of `other`.
    ///
    /// Crossing paths: far enough before the crossing that `me`'s footprint
    /// stays out of the strip swept by `other`, plus the buffer. Same lane, `me`
    /// behind: a full body length (both halves) plus the buffer behind
    /// `anchor`. Same lane, `me` in front: at the collision point.
    fn yield_arc(
        &self,
        state: &SimState,
        conflict: &ConflictRecord,
        me: &AgentId,
        other: &AgentId,
        path: &Polyline,
        anchor: PathPoint,
    ) -> Result<f64, EngineError> {
        let (rm, ro) = (self.record(me)?, self.record(other)?);
        let k = conflict.first_collision_step;
        let (tm, to) = (&state.committed[me], &state.committed[other]);
        match conflict.cross {
            Some(cp) if cp.kind == CrossKind::PathCrossing => {
                let (im, io) = if *me == conflict.agent_a {
                    (cp.index_a, cp.index_b)
                } else {
                    (cp.index_b, cp.index_a)
                };
                let angle = tm.states[im].heading - to.states[io].heading;
                let sin = angle.sin().abs().max(MIN_CROSSING_SIN);
                let standoff = 0.5 * rm.length
                    + (0.5 * ro.width + 0.5 * rm.width * angle.cos().abs()) / sin
                    + STANDOFF_BUFFER;
                Ok(path.project(cp.point).0 - standoff)
            }
            _ => {
                let (s_me, _) = path.project(tm.states[k].position());
                let (s_other, _) = path.project(to.states[k].position());
                if s_other >= s_me {
                    let clearance = 0.5 * (rm.length + ro.length) + STANDOFF_BUFFER;
                    Ok(path.project(anchor).0 - clearance)
                } else {
                    Ok(path.project(conflict.collision_point).0)
                }
            }
        }
    }

    fn replan(
        &self,
        state: &mut SimState,
        conflict: &ConflictRecord,
        me: &AgentId,
        other: &AgentId,
        anchor: PathPoint,
        stop_now: bool,
    ) -> Result<(), EngineError> {
        let s = state.current_step;
        let current = self.current_state(state, me)?;
        let (points, cruise) = self.regen_path(state, me)?;
        let params = self.rollout_params(state, cruise);
        let rollout = if stop_now {
            stop_rollout(&current, &points, &params)?
        } else {
            let path = Polyline::new(points.iter().copied(), current.heading)
                .ok_or(TrajectoryError::EmptyPath)?;
            let arc = self.yield_arc(state, conflict, me, other, &path, anchor)?;
            let goal = path.point_at(arc).0;
            state.log(EventKind::Regenerated {
                agent: me.clone(),
                goal,
            });
            goal_conditioned_rollout(&current, &points, goal, &params)?
        };
        if let Some(distance) = rollout.overshoot {
            state.log(EventKind::Overshoot {
                agent: me.clone(),
                distance,
            });
        }
        let traj = state.committed.get_mut(me).expect("agent committed");
        self.splice(traj, s, &rollout.trajectory.states);
        state.resolutions += 1;
        Ok(())
    }

    fn label(
        &self,
        state: &SimState,
        conflict: &ConflictRecord,
    ) -> Result<(AgentId, AgentId, RelationSource, bool), EngineError> {
        let s = state.current_step;
        let (a, b) = (&conflict.agent_a, &conflict.agent_b);
        let label = match self.overrides.get(a, b) {
            Some(l) => l.clone(),
            None => {
                let (ta, tb) = (state.committed[a].tail(s), state.committed[b].tail(s));
                let pair = PairContext {
                    id_a: a,
                    id_b: b,
                    traj_a: &ta,
                    traj_b: &tb,
                    dims_a: self.record(a)?.dims(),
                    dims_b: self.record(b)?.dims(),
                };
                self.predictor.predict(&pair)?
            }
        };
        let ego = &self.scenario.ego_id;
        if self.policy.ego_mode == EgoMode::Authoritative && &label.reactor == ego {
            return Ok((label.reactor, label.influencer, label.source, true));
        }
        Ok((label.influencer, label.reactor, label.source, false))
    }

    fn resolve_with(
        &self,
        conflict: &ConflictRecord,
        state: &mut SimState,
        attempts: &mut Attempts,
    ) -> Result<Vec<AgentId>, EngineError> {
        let (a, b) = (conflict.agent_a.clone(), conflict.agent_b.clone());
        match self.policy.kind {
            PolicyKind::M0 => Ok(Vec::new()),
            PolicyKind::Full => {
                let (influencer, reactor, source, forced) = self.label(state, conflict)?;
                state.log(EventKind::RelationUsed {
                    influencer: influencer.clone(),
                    reactor: reactor.clone(),
                    source,
                    forced,
                });
                let anchor = state.committed[&influencer].states[conflict.first_collision_step].position();
                match attempts.bump((influencer.clone(), reactor.clone())) {
                    Next::Replan => {
                        self.replan(state, conflict, &reactor, &influencer, anchor, false)?
                    }
                    Next::Stop => {
                        state.log(EventKind::Escalated {
                            influencer: influencer.clone(),
                            reactor: reactor.clone(),
                        });
                        self.replan(state, conflict, &reactor, &influencer, anchor, true)?
                    }
                    Next::GiveUp => {
                        attempts.abandoned.insert(unordered(&a, &b));
                        state.log(EventKind::Unresolved {
                            agent_a: a,
                            agent_b: b,
                        });
                        return Ok(Vec::new());
                    }
                }
                Ok(vec![reactor])
            }
            PolicyKind::M1 => {
                // The agent in front stops at the collision point, so the one
                // behind keeps its distance from there.
                let anchor = conflict.collision_point;
                let next = attempts.bump(unordered(&a, &b));
                if let Next::GiveUp = next {
                    attempts.abandoned.insert(unordered(&a, &b));
                    state.log(EventKind::Unresolved {
                        agent_a: a,
                        agent_b: b,
                    });
                    return Ok(Vec::new());
                }
                let stop_now = matches!(next, Next::Stop);
                if stop_now {
                    state.log(EventKind::Escalated {
                        influencer: a.clone(),
                        reactor: b.clone(),
                    });
                }
                // Both goals come from the pre-resolution trajectories.
                let before = state.committed.clone();
                let mut snapshot = state.clone();
                self.replan(&mut snapshot, conflict, &a, &b, anchor, stop_now)?;
                let new_a = snapshot.committed[&a].clone();
                snapshot.committed = before;
                self.replan(&mut snapshot, conflict, &b, &a, anchor, stop_now)?;
                snapshot.committed.insert(a.clone(), new_a);
                *state = snapshot;
                Ok(vec![a, b])
            }
        }
    }

    /// Applies the policy to a single conflict and returns the agents whose
    /// committed trajectories changed.
    pub fn resolve_conflict(
        &self,
        conflict: &ConflictRecord,
        state: &mut SimState,
    ) -> Result<Vec<AgentId>, EngineError> {
        let changed = self.resolve_with(conflict, state, &mut Attempts::default())?;
        self.refresh_relevant(state);
        Ok(changed)
    }

    /// Cascades resolution from the ego until no re-planned agent collides
    /// with anyone. Returns the number of re-plans.
    pub fn resolve_all(&self, state: &mut SimState) -> Result<usize, EngineError> {
        let limit = 4 * self.scenario.agents.len();
        let s = state.current_step;
        let mut dirty: BTreeSet<AgentId> = BTreeSet::new();
        dirty.insert(self.scenario.ego_id.clone());
        let mut attempts = Attempts::default();
        let start = state.resolutions;
        loop {
            let mut seen = BTreeSet::new();
            let mut conflicts = Vec::new();
            for d in &dirty {
                for other in &self.scenario.agents {
                    let key = unordered(d, &other.id);
                    if &other.id == d || attempts.abandoned.contains(&key) || !seen.insert(key) {
                        continue;
                    }
                    if let Some(c) = self.conflict_between(&state.committed, s, d, &other.id)? {
                        conflicts.push(c);
                    }
                }
            }
            conflicts.sort_by(|x, y| {
                x.first_collision_step
                    .cmp(&y.first_collision_step)
                    .then_with(|| unordered(&x.agent_a, &x.agent_b).cmp(&unordered(&y.agent_a, &y.agent_b)))
            });
            if self.policy.kind == PolicyKind::M0 {
                for c in conflicts {
                    state.log(EventKind::ConflictDetected {
                        agent_a: c.agent_a,
                        agent_b: c.agent_b,
                        collision_step: c.first_collision_step,
                    });
                }
                break;
            }
            let Some(conflict) = conflicts.into_iter().next() else {
                break;
            };
            state.log(EventKind::ConflictDetected {
                agent_a: conflict.agent_a.clone(),
                agent_b: conflict.agent_b.clone(),
                collision_step: conflict.first_collision_step,
            });
            let changed = self.resolve_with(&conflict, state, &mut attempts)?;
            if state.resolutions - start > limit {
                return Err(EngineError::IterationBound { limit });
            }
            dirty.extend(changed);
        }
        self.refresh_relevant(state);
        Ok(state.resolutions - start)
    }

    fn refresh_relevant(&self, state: &mut SimState) {
        let ego = &self.scenario.ego_id;
        state.relevant = self
            .scenario
            .agents
            .iter()
            .filter(|a| &a.id != ego)
            .filter(|a| {
                let replay = Trajectory::new(0, a.reference_future.clone());
                state.committed[&a.id].max_deviation(&replay) > PLAN_CHANGE_TOLERANCE
            })
            .map(|a| a.id.clone())
            .collect();
    }

    /// Commits `plan` for the ego and, if it differs from the previous plan,
    /// re-resolves the scene. The very first plan always triggers resolution.
    pub fn submit_plan(&self, state: &mut SimState, plan: &Trajectory) -> Result<(), EngineError> {
        self.check_plan(plan, state)?;
        let s = state.current_step;
        let changed = match &state.last_plan {
            None => true,
            Some(prev) => {
                let prev_tail = prev.tail(s - prev.start_step);
                let n = self.horizon() - s;
                let now = Trajectory::new(s, plan.states[..n].to_vec());
                Trajectory::new(s, prev_tail.states[..n].to_vec()).max_deviation(&now)
                    > PLAN_CHANGE_TOLERANCE
            }
        };
        if !changed {
            return Ok(());
        }
        let ego = self.scenario.ego_id.clone();
        let traj = state.committed.get_mut(&ego).expect("ego committed");
        self.splice(traj, s, &plan.states);
        state.last_plan = Some(plan.clone());
        state.log(EventKind::PlanUpdated);
        self.resolve_all(state)?;
        Ok(())
    }

    /// Moves every agent one step along its committed trajectory.
    pub fn advance(&self, state: &mut SimState) -> Result<(), EngineError> {
        if state.current_step >= self.horizon() {
            return Err(EngineError::EpisodeFinished(state.current_step));
        }
        state.current_step += 1;
        Ok(())
    }

    pub fn step(&self, state: &mut SimState, plan: &Trajectory) -> Result<(), EngineError> {
        self.submit_plan(state, plan)?;
        self.advance(state)
    }

    pub fn frame(&self, state: &SimState) -> Result<Frame, EngineError> {
        let s = state.current_step;
        let agents = self
            .scenario
            .agents
            .iter()
            .map(|a| {
                Ok(FrameAgent {
                    id: a.id.clone(),
                    state: self.current_state(state, &a.id)?,
                    future: state.committed[&a.id].states[s..]
                        .iter()
                        .map(AgentState::position)
                        .collect(),
                })
            })
            .collect::<Result<_, EngineError>>()?;
        Ok(Frame { step: s, agents })
    }
}

/// Every colliding pair among `committed` from `from_step`, with its first
/// collision step.
pub fn pairwise_conflicts(
    scenario: &Scenario,
    committed: &BTreeMap<AgentId, Trajectory>,
    from_step: usize,
) -> Result<Vec<(AgentId, AgentId, usize)>, GeometryError> {
    let mut out = Vec::new();
    for (i, a) in scenario.agents.iter().enumerate() {
        for b in &scenario.agents[i + 1..] {
            if let Some(k) =
                first_collision_step(&committed[&a.id], &committed[&b.id], a.dims(), b.dims(), from_step)?
            {
                out.push((a.id.clone(), b.id.clone(), k));
            }
        }
    }
    Ok(out)
}

/// Runs a whole episode: the planner is queried at every step, the plan is
/// committed, and the scene advances until the horizon.
pub fn run_episode(
    engine: &Engine<'_>,
    planner: &dyn Planner,
    seed: u64,
) -> Result<EpisodeResult, EngineError> {
    let scenario = engine.scenario();
    let mut state = engine.initial_state();
    let mut frames = Vec::with_capacity(scenario.horizon_steps());
    for step in 0..scenario.horizon_steps() {
        let plan = planner
            .plan(scenario, step)
            .map_err(|source| EngineError::Planner { step, source })?;
        engine.submit_plan(&mut state, &plan)?;
        frames.push(engine.frame(&state)?);
        engine.advance(&mut state)?;
    }
    Ok(EpisodeResult {
        scenario_id: scenario.id.clone(),
        policy: engine.policy(),
        seed,
        frames,
        committed: state.committed,
        events: state.events,
        relevant: state.relevant,
        resolutions: state.resolutions,
    })
}
