//! Closed-loop interactive traffic simulation.
//!
//! Given an ego plan at every step, the engine checks the plan against the committed
//! futures of every environment agent, labels each colliding pair as an
//! influencer/reactor relation and re-plans the reactor toward a goal short of the
//! conflict. Newly re-planned agents are checked again, so the resolution cascades
//! through the scene until nothing collides.
//!
//! The crate is `no_std` (it needs `alloc`). Scenario files, traces, reports and the
//! command-line front end live in the companion `intersim` crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod engine;
pub mod geometry;
pub mod metrics;
pub mod path;
pub mod planners;
pub mod relation;
pub mod scenario;
pub mod trajectory;

pub use engine::{
    run_episode, ConflictRecord, EgoMode, Engine, EngineError, EpisodeResult, Event, EventKind,
    Frame, FrameAgent, PolicyKind, ResolutionPolicy, SimState,
};
pub use geometry::{
    boxes_overlap, cross_point, first_collision_step, CrossKind, CrossPoint, Dims, GeometryError,
    OrientedBox, PathPoint,
};
pub use metrics::{
    aggregate, episode_metrics, BatchReport, CollisionClass, EpisodeMetrics, MetricsError,
    PairCollision,
};
pub use path::Polyline;
pub use planners::{PerturbedParams, PlanError, Planner, PlannerSpec};
pub use relation::{
    infer_relation, CrossPointOracle, FixedInfluencer, OverrideRegistry, PairContext,
    RelationError, RelationLabel, RelationPredictor, RelationSource, WithOverrides,
};
pub use scenario::{
    AgentId, AgentKind, AgentRecord, AgentState, MapFeature, MapFeatureKind, Scenario,
    ScenarioError, SimConfig, Trajectory,
};
pub use trajectory::{
    goal_conditioned_rollout, replay_rollout, stop_rollout, KinematicLimits, Rollout,
    RolloutParams, TrajectoryError,
};
