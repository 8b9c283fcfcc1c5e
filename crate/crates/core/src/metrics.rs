//! Episode metrics and batch aggregation.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::EpisodeResult;
use crate::geometry::{boxes_overlap, first_collision_step, overlap_region, OrientedBox, PathPoint};
use crate::scenario::{normalize_angle, AgentId, AgentState, Scenario};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionClass {
    Front,
    Side,
    Rear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairCollision {
    pub striker: AgentId,
    pub struck: AgentId,
    pub step: usize,
    pub contact: PathPoint,
    pub class: CollisionClass,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CollisionRates {
    pub front: f64,
    pub side: f64,
    pub rear: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub relevant_ratio: f64,
    pub ade: f64,
    pub fde: f64,
    pub front_rate: f64,
    pub side_rate: f64,
    pub rear_rate: f64,
    pub progress: f64,
    pub residual_collision_pairs: usize,
    /// ADE/FDE restricted to relevant agents; zero when none are relevant.
    pub ade_relevant: f64,
    pub fde_relevant: f64,
}

/// Means over a batch of episodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub episodes: usize,
    pub relevant_ratio: f64,
    pub ade: f64,
    pub fde: f64,
    pub front: f64,
    pub side: f64,
    pub rear: f64,
    pub progress: f64,
}

impl BatchReport {
    pub const COLUMNS: [&'static str; 7] =
        ["relevant_ratio", "ade", "fde", "front", "side", "rear", "progress"];

    /// Metric values in [`Self::COLUMNS`] order.
    pub fn values(&self) -> [f64; 7] {
        [
            self.relevant_ratio,
            self.ade,
            self.fde,
            self.front,
            self.side,
            self.rear,
            self.progress,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("cannot aggregate an empty batch")]
    EmptyBatch,
}

fn env_agents<'a>(scenario: &'a Scenario) -> impl Iterator<Item = &'a crate::scenario::AgentRecord> {
    scenario.agents.iter().filter(move |a| a.id != scenario.ego_id)
}

pub fn relevant_ratio(result: &EpisodeResult, scenario: &Scenario) -> f64 {
    match scenario.agents.len() {
        0 | 1 => 0.0,
        n => result.relevant.len() as f64 / (n - 1) as f64,
    }
}

/// Mean and final-step distance to the logged future, averaged over
/// environment agents.
pub fn displacement_errors(result: &EpisodeResult, scenario: &Scenario) -> (f64, f64) {
    errors_over(result, env_agents(scenario))
}

/// Same as [`displacement_errors`], over relevant agents only.
pub fn relevant_displacement_errors(result: &EpisodeResult, scenario: &Scenario) -> (f64, f64) {
    errors_over(
        result,
        env_agents(scenario).filter(|a| result.relevant.contains(&a.id)),
    )
}

fn errors_over<'a>(
    result: &EpisodeResult,
    agents: impl Iterator<Item = &'a crate::scenario::AgentRecord>,
) -> (f64, f64) {
    let (mut ade, mut fde, mut n) = (0.0, 0.0, 0usize);
    for agent in agents {
        let sim = &result.committed[&agent.id].states;
        let d: Vec<f64> = sim
            .iter()
            .zip(&agent.reference_future)
            .map(|(s, r)| s.position().distance(r.position()))
            .collect();
        if let Some(last) = d.last() {
            ade += d.iter().sum::<f64>() / d.len() as f64;
            fde += last;
            n += 1;
        }
    }
    if n == 0 {
        (0.0, 0.0)
    } else {
        (ade / n as f64, fde / n as f64)
    }
}

fn centroid(points: &[PathPoint]) -> Option<PathPoint> {
    if points.is_empty() {
        return None;
    }
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(x, y), p| (x + p.x, y + p.y));
    Some(PathPoint::new(sx / n, sy / n))
}

/// Classifies one contact. Returns `(a_is_striker, contact_point, class)`.
///
/// The striker is the agent whose front face lies closest to the contact
/// point; the class follows from the heading difference between the two.
pub fn classify_contact(
    a: &OrientedBox,
    b: &OrientedBox,
) -> Option<(bool, PathPoint, CollisionClass)> {
    if !boxes_overlap(a, b) {
        return None;
    }
    let region = overlap_region(a, b);
    // Edge-on contact leaves a degenerate region; fall back to the midpoint.
    let contact = centroid(&region).unwrap_or_else(|| a.center().midpoint(b.center()));
    let gap = |bx: &OrientedBox| 0.5 * bx.length - bx.local(contact).0;
    let a_strikes = gap(a) <= gap(b);
    let phi = normalize_angle(a.heading - b.heading).abs().to_degrees();
    let class = if phi < 45.0 {
        CollisionClass::Rear
    } else if phi > 135.0 {
        CollisionClass::Front
    } else {
        CollisionClass::Side
    };
    Some((a_strikes, contact, class))
}

/// Every colliding pair over the whole committed horizon, classified at its
/// first collision step.
pub fn collisions(result: &EpisodeResult, scenario: &Scenario) -> Vec<PairCollision> {
    let mut out = Vec::new();
    for (i, a) in scenario.agents.iter().enumerate() {
        for b in &scenario.agents[i + 1..] {
            let (ta, tb) = (&result.committed[&a.id], &result.committed[&b.id]);
            let Ok(Some(k)) = first_collision_step(ta, tb, a.dims(), b.dims(), 0) else {
                continue;
            };
            let ba = OrientedBox::at(&ta.states[k], a.dims());
            let bb = OrientedBox::at(&tb.states[k], b.dims());
            if let Some((a_strikes, contact, class)) = classify_contact(&ba, &bb) {
                let (striker, struck) = if a_strikes { (a, b) } else { (b, a) };
                out.push(PairCollision {
                    striker: striker.id.clone(),
                    struck: struck.id.clone(),
                    step: k,
                    contact,
                    class,
                });
            }
        }
    }
    out
}

pub fn collision_rates(result: &EpisodeResult, scenario: &Scenario) -> (CollisionRates, Vec<PairCollision>) {
    let pairs = collisions(result, scenario);
    let n = scenario.agents.len().max(1) as f64;
    let count = |c| pairs.iter().filter(|p| p.class == c).count() as f64 / n;
    let rates = CollisionRates {
        front: count(CollisionClass::Front),
        side: count(CollisionClass::Side),
        rear: count(CollisionClass::Rear),
    };
    (rates, pairs)
}

/// Mean distance travelled per agent, ego included.
pub fn progress(result: &EpisodeResult, scenario: &Scenario) -> f64 {
    if scenario.agents.is_empty() {
        return 0.0;
    }
    let total: f64 = scenario
        .agents
        .iter()
        .map(|a| {
            let mut prev = a.current().position();
            result.committed[&a.id]
                .states
                .iter()
                .map(AgentState::position)
                .map(|p| {
                    let d = p.distance(prev);
                    prev = p;
                    d
                })
                .sum::<f64>()
        })
        .sum();
    total / scenario.agents.len() as f64
}

pub fn episode_metrics(result: &EpisodeResult, scenario: &Scenario) -> EpisodeMetrics {
    let (ade, fde) = displacement_errors(result, scenario);
    let (rates, pairs) = collision_rates(result, scenario);
    let (ade_relevant, fde_relevant) = relevant_displacement_errors(result, scenario);
    EpisodeMetrics {
        relevant_ratio: relevant_ratio(result, scenario),
        ade,
        fde,
        front_rate: rates.front,
        side_rate: rates.side,
        rear_rate: rates.rear,
        progress: progress(result, scenario),
        residual_collision_pairs: pairs.len(),
        ade_relevant,
        fde_relevant,
    }
}

pub fn aggregate(metrics: &[EpisodeMetrics]) -> Result<BatchReport, MetricsError> {
    if metrics.is_empty() {
        return Err(MetricsError::EmptyBatch);
    }
    let n = metrics.len() as f64;
    let mean = |f: fn(&EpisodeMetrics) -> f64| metrics.iter().map(f).sum::<f64>() / n;
    Ok(BatchReport {
        episodes: metrics.len(),
        relevant_ratio: mean(|m| m.relevant_ratio),
        ade: mean(|m| m.ade),
        fde: mean(|m| m.fde),
        front: mean(|m| m.front_rate),
        side: mean(|m| m.side_rate),
        rear: mean(|m| m.rear_rate),
        progress: mean(|m| m.progress),
    })
}
