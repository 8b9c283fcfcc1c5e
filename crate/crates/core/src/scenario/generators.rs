//! Synthetic scenes for desk-scale evaluation.
//!
//! Every generator places its scene around the origin and rotates it by a
//! seed-derived heading. The seed never changes the relative geometry, so a
//! generated scene is fully determined by its parameters up to a rotation.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // inherent methods once std is linked
use num_traits::Float;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    normalize_angle, AgentId, AgentKind, AgentRecord, AgentState, MapFeature, MapFeatureKind,
    Scenario, SimConfig,
};

const CAR_LENGTH: f64 = 4.5;
const CAR_WIDTH: f64 = 2.0;
const LANE_HALF_WIDTH: f64 = 1.75;

/// Rigid rotation about the origin.
#[derive(Clone, Copy)]
struct Frame {
    cos: f64,
    sin: f64,
    heading: f64,
}

impl Frame {
    fn from_seed(seed: u64) -> Self {
        let heading = ChaCha8Rng::seed_from_u64(seed).random_range(-PI..PI);
        Self {
            cos: heading.cos(),
            sin: heading.sin(),
            heading,
        }
    }

    fn point(&self, x: f64, y: f64) -> [f64; 2] {
        [x * self.cos - y * self.sin, x * self.sin + y * self.cos]
    }

    fn state(&self, x: f64, y: f64, heading: f64, speed: f64) -> AgentState {
        let [px, py] = self.point(x, y);
        AgentState::new(px, py, normalize_angle(heading + self.heading), speed)
    }
}

/// Vehicle on a straight line through `(x0, y0)` at `heading`, moving at
/// constant `speed`; `x0, y0` is its position at the current instant.
fn constant_speed_agent(
    id: &str,
    frame: &Frame,
    config: &SimConfig,
    (x0, y0): (f64, f64),
    heading: f64,
    speed: f64,
) -> AgentRecord {
    let dt = config.step_seconds;
    let at = |k: i64| {
        let d = speed * dt * k as f64;
        frame.state(x0 + d * heading.cos(), y0 + d * heading.sin(), heading, speed)
    };
    let observed_states = config.observed_states() as i64;
    AgentRecord {
        id: AgentId::from(id),
        kind: AgentKind::Vehicle,
        length: CAR_LENGTH,
        width: CAR_WIDTH,
        observed: (1 - observed_states..=0).map(at).collect(),
        reference_future: (1..=config.horizon_steps() as i64).map(at).collect(),
    }
}

/// Straight lane from `from` to `to` along `heading` through `(x0, y0)`: a
/// centerline and both road edges.
fn straight_lane(
    frame: &Frame,
    (x0, y0): (f64, f64),
    heading: f64,
    from: f64,
    to: f64,
) -> Vec<MapFeature> {
    let (c, s) = (heading.cos(), heading.sin());
    let line = |offset: f64, kind| MapFeature {
        kind,
        points: [from, to]
            .iter()
            .map(|&d| frame.point(x0 + d * c - offset * s, y0 + d * s + offset * c))
            .collect(),
    };
    vec![
        line(0.0, MapFeatureKind::LaneCenterline),
        line(LANE_HALF_WIDTH, MapFeatureKind::RoadEdge),
        line(-LANE_HALF_WIDTH, MapFeatureKind::RoadEdge),
    ]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CarFollowingParams {
    /// Center-to-center distance at the current instant.
    pub gap: f64,
    pub lead_speed: f64,
    pub follow_speed: f64,
}

/// Two vehicles on one straight lane. The leader (`lead`) is the ego.
pub fn gen_car_following(gap: f64, lead_speed: f64, follow_speed: f64, seed: u64) -> Scenario {
    let config = SimConfig::default();
    let frame = Frame::from_seed(seed);
    let reach = config.horizon_seconds * lead_speed.max(follow_speed) + 20.0;
    Scenario {
        id: format!("car-following-{seed}"),
        config,
        ego_id: "lead".into(),
        map: straight_lane(&frame, (0.0, 0.0), 0.0, -gap - 20.0, reach),
        agents: vec![
            constant_speed_agent("lead", &frame, &config, (gap, 0.0), 0.0, lead_speed),
            constant_speed_agent("follow", &frame, &config, (0.0, 0.0), 0.0, follow_speed),
        ],
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossingParams {
    /// Heading of B relative to A.
    pub angle: f64,
    /// Seconds by which A reaches the intersection before B.
    pub arrival_offset: f64,
    pub speed_a: f64,
    pub speed_b: f64,
}

/// Two vehicles on straight paths meeting at the origin. A (`a`, the ego)
/// arrives `arrival_offset` seconds before B (`b`); arrivals are centered on
/// the middle of the horizon.
pub fn gen_crossing(angle: f64, arrival_offset: f64, speeds: (f64, f64), seed: u64) -> Scenario {
    let config = SimConfig::default();
    let frame = Frame::from_seed(seed);
    let mid = 0.5 * config.horizon_seconds;
    let (t_a, t_b) = (mid - 0.5 * arrival_offset, mid + 0.5 * arrival_offset);
    let (va, vb) = speeds;
    let start = |t: f64, v: f64, h: f64| (-v * t * h.cos(), -v * t * h.sin());
    let reach = config.horizon_seconds * va.max(vb) + 20.0;
    let mut map = straight_lane(&frame, (0.0, 0.0), 0.0, -reach, reach);
    map.extend(straight_lane(&frame, (0.0, 0.0), angle, -reach, reach));
    Scenario {
        id: format!("crossing-{seed}"),
        config,
        ego_id: "a".into(),
        map,
        agents: vec![
            constant_speed_agent("a", &frame, &config, start(t_a, va, 0.0), 0.0, va),
            constant_speed_agent("b", &frame, &config, start(t_b, vb, angle), angle, vb),
        ],
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainParams {
    /// Total agents including the ego at the head of the queue.
    pub agents: usize,
    pub speed: f64,
    /// Center-to-center distance between consecutive agents.
    pub spacing: f64,
}

/// A single-lane queue: the ego (`ego`) in front, followers `f1`, `f2`, ...
/// behind it, all at one speed.
pub fn gen_chain(params: ChainParams, seed: u64) -> Scenario {
    let config = SimConfig::default();
    let frame = Frame::from_seed(seed);
    let n = params.agents.max(1);
    let back = params.spacing * n as f64 + 20.0;
    let reach = config.horizon_seconds * params.speed + 20.0;
    let mut agents = Vec::with_capacity(n);
    for i in 0..n {
        let id: String = if i == 0 { "ego".into() } else { format!("f{i}") };
        let x0 = -params.spacing * i as f64;
        agents.push(constant_speed_agent(
            &id,
            &frame,
            &config,
            (x0, 0.0),
            0.0,
            params.speed,
        ));
    }
    Scenario {
        id: format!("chain-{n}-{seed}"),
        config,
        ego_id: "ego".into(),
        map: straight_lane(&frame, (0.0, 0.0), 0.0, -back, reach),
        agents,
    }
}

fn suite_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0de)
}

/// Seeded car-following sweep: the ego leads at 8-14 m/s, the follower drives
/// at 90-100 % of that speed, 12-30 m behind.
pub fn car_following_suite(seed: u64, count: usize) -> Vec<(CarFollowingParams, Scenario)> {
    let mut rng = suite_rng(seed);
    (0..count)
        .map(|i| {
            let lead_speed = rng.random_range(8.0..14.0);
            let params = CarFollowingParams {
                gap: rng.random_range(12.0..30.0),
                lead_speed,
                follow_speed: lead_speed * rng.random_range(0.9..1.0),
            };
            let scene_seed = seed.wrapping_mul(1_000_003).wrapping_add(i as u64);
            let mut s = gen_car_following(
                params.gap,
                params.lead_speed,
                params.follow_speed,
                scene_seed,
            );
            s.id = format!("car-following-{seed}-{i}");
            (params, s)
        })
        .collect()
}

/// Seeded crossing sweep with nonzero arrival offsets.
pub fn crossing_suite(
    seed: u64,
    count: usize,
    offset_range: (f64, f64),
) -> Vec<(CrossingParams, Scenario)> {
    let mut rng = suite_rng(seed);
    (0..count)
        .map(|i| {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let turn = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let params = CrossingParams {
                angle: turn * rng.random_range(PI / 3.0..2.0 * PI / 3.0),
                arrival_offset: sign * rng.random_range(offset_range.0..offset_range.1),
                speed_a: rng.random_range(6.0..12.0),
                speed_b: rng.random_range(6.0..12.0),
            };
            let scene_seed = seed.wrapping_mul(1_000_003).wrapping_add(i as u64);
            let mut s = gen_crossing(
                params.angle,
                params.arrival_offset,
                (params.speed_a, params.speed_b),
                scene_seed,
            );
            s.id = format!("crossing-{seed}-{i}");
            (params, s)
        })
        .collect()
}

/// Seeded queue sweep: 3-10 agents at 6-9 m/s, bumper gaps of 3-5.5 m.
pub fn chain_suite(seed: u64, count: usize) -> Vec<(ChainParams, Scenario)> {
    let mut rng = suite_rng(seed);
    (0..count)
        .map(|i| {
            let params = ChainParams {
                agents: rng.random_range(3..=10),
                speed: rng.random_range(6.0..9.0),
                spacing: rng.random_range(7.5..10.0),
            };
            let scene_seed = seed.wrapping_mul(1_000_003).wrapping_add(i as u64);
            let mut s = gen_chain(params, scene_seed);
            s.id = format!("chain-{seed}-{i}");
            (params, s)
        })
        .collect()
}
