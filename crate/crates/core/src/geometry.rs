//! Oriented boxes, swept collision search and path cross points.
//!
//! Trajectories are only compared at their sampled steps; nothing here sweeps
//! the boxes continuously between samples.

use alloc::vec::Vec;

#[allow(unused_imports)] // inherent methods once std is linked
use num_traits::Float;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::{AgentState, Trajectory};

/// Crossings shallower than this (sine of the angle between the two segments)
/// are treated as the same lane rather than a path crossing.
pub const MIN_CROSSING_SIN: f64 = 0.17;

const ARC_EPS: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub x: f64,
    pub y: f64,
}

impl PathPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: PathPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Moves `ds` meters along `heading`.
    pub fn offset(self, heading: f64, ds: f64) -> PathPoint {
        PathPoint::new(self.x + ds * heading.cos(), self.y + ds * heading.sin())
    }

    pub fn midpoint(self, other: PathPoint) -> PathPoint {
        PathPoint::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Footprint dimensions of an agent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dims {
    pub length: f64,
    pub width: f64,
}

impl Dims {
    pub const fn new(length: f64, width: f64) -> Self {
        Self { length, width }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub center_x: f64,
    pub center_y: f64,
    /// Counter-clockwise from +x.
    pub heading: f64,
    /// Extent along the heading.
    pub length: f64,
    pub width: f64,
}

impl OrientedBox {
    pub fn new(center_x: f64, center_y: f64, heading: f64, length: f64, width: f64) -> Self {
        Self {
            center_x,
            center_y,
            heading,
            length,
            width,
        }
    }

    pub fn at(state: &AgentState, dims: Dims) -> Self {
        Self::new(state.x, state.y, state.heading, dims.length, dims.width)
    }

    pub fn center(&self) -> PathPoint {
        PathPoint::new(self.center_x, self.center_y)
    }

    /// Unit vectors along the length and width directions.
    pub fn axes(&self) -> [(f64, f64); 2] {
        let (s, c) = self.heading.sin_cos();
        [(c, s), (-s, c)]
    }

    /// Corners in counter-clockwise order, starting at the front-right corner.
    pub fn corners(&self) -> [PathPoint; 4] {
        let [(ux, uy), (vx, vy)] = self.axes();
        let (hl, hw) = (0.5 * self.length, 0.5 * self.width);
        let c = self.center();
        let at = |a: f64, b: f64| PathPoint::new(c.x + a * ux + b * vx, c.y + a * uy + b * vy);
        [at(hl, -hw), at(hl, hw), at(-hl, hw), at(-hl, -hw)]
    }

    fn project(&self, (ax, ay): (f64, f64)) -> (f64, f64) {
        let [(ux, uy), (vx, vy)] = self.axes();
        let mid = self.center_x * ax + self.center_y * ay;
        let radius = 0.5 * self.length * (ux * ax + uy * ay).abs()
            + 0.5 * self.width * (vx * ax + vy * ay).abs();
        (mid - radius, mid + radius)
    }

    /// Point expressed in the box frame as (longitudinal, lateral).
    pub fn local(&self, p: PathPoint) -> (f64, f64) {
        let [(ux, uy), (vx, vy)] = self.axes();
        let (dx, dy) = (p.x - self.center_x, p.y - self.center_y);
        (dx * ux + dy * uy, dx * vx + dy * vy)
    }

    /// Closed containment test.
    pub fn contains(&self, p: PathPoint) -> bool {
        let (lon, lat) = self.local(p);
        lon.abs() <= 0.5 * self.length && lat.abs() <= 0.5 * self.width
    }
}

/// Separating-axis test over the four edge normals of the two rectangles.
/// Touching boundaries count as overlap.
pub fn boxes_overlap(a: &OrientedBox, b: &OrientedBox) -> bool {
    a.axes().into_iter().chain(b.axes()).all(|axis| {
        let (amin, amax) = a.project(axis);
        let (bmin, bmax) = b.project(axis);
        amax >= bmin && bmax >= amin
    })
}

/// Convex polygon of the overlap between two boxes, empty if disjoint.
pub fn overlap_region(a: &OrientedBox, b: &OrientedBox) -> Vec<PathPoint> {
    let mut poly: Vec<PathPoint> = a.corners().to_vec();
    let clip = b.corners();
    for i in 0..4 {
        let (p, q) = (clip[i], clip[(i + 1) % 4]);
        let side = |r: PathPoint| (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x);
        let input = core::mem::take(&mut poly);
        for j in 0..input.len() {
            let cur = input[j];
            let prev = input[(j + input.len() - 1) % input.len()];
            let (sc, sp) = (side(cur), side(prev));
            if sc >= 0.0 {
                if sp < 0.0 {
                    poly.push(lerp(prev, cur, sp / (sp - sc)));
                }
                poly.push(cur);
            } else if sp >= 0.0 {
                poly.push(lerp(prev, cur, sp / (sp - sc)));
            }
        }
        if poly.is_empty() {
            break;
        }
    }
    poly
}

fn lerp(a: PathPoint, b: PathPoint, t: f64) -> PathPoint {
    PathPoint::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("trajectories are misaligned: {a_start}+{a_len} vs {b_start}+{b_len} states")]
    Misaligned {
        a_start: usize,
        a_len: usize,
        b_start: usize,
        b_len: usize,
    },
    #[error("step {step} is outside a trajectory of {len} states")]
    StepOutOfRange { step: usize, len: usize },
}

fn check_aligned(a: &Trajectory, b: &Trajectory) -> Result<(), GeometryError> {
    if a.start_step != b.start_step || a.states.len() != b.states.len() {
        return Err(GeometryError::Misaligned {
            a_start: a.start_step,
            a_len: a.states.len(),
            b_start: b.start_step,
            b_len: b.states.len(),
        });
    }
    Ok(())
}

/// Smallest state index `>= from_step` at which the two footprints overlap.
///
/// Indices are positions in `states`, shared by both trajectories.
pub fn first_collision_step(
    traj_a: &Trajectory,
    traj_b: &Trajectory,
    dims_a: Dims,
    dims_b: Dims,
    from_step: usize,
) -> Result<Option<usize>, GeometryError> {
    check_aligned(traj_a, traj_b)?;
    let len = traj_a.states.len();
    if from_step > len {
        return Err(GeometryError::StepOutOfRange {
            step: from_step,
            len,
        });
    }
    Ok((from_step..len).find(|&i| {
        boxes_overlap(
            &OrientedBox::at(&traj_a.states[i], dims_a),
            &OrientedBox::at(&traj_b.states[i], dims_b),
        )
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossKind {
    PathCrossing,
    SameLaneCollision,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossPoint {
    pub point: PathPoint,
    /// First index at which agent A reaches the point.
    pub index_a: usize,
    pub index_b: usize,
    pub kind: CrossKind,
}

fn arc_lengths(states: &[AgentState]) -> Vec<f64> {
    let mut out = Vec::with_capacity(states.len());
    let mut total = 0.0;
    out.push(0.0);
    for w in states.windows(2) {
        total += w[0].position().distance(w[1].position());
        out.push(total);
    }
    out
}

/// Proper intersection of segments p0-p1 and q0-q1, returning the parameters
/// along each. Near-parallel pairs never intersect.
pub(crate) fn segment_intersection(
    p0: PathPoint,
    p1: PathPoint,
    q0: PathPoint,
    q1: PathPoint,
) -> Option<(f64, f64)> {
    let (rx, ry) = (p1.x - p0.x, p1.y - p0.y);
    let (sx, sy) = (q1.x - q0.x, q1.y - q0.y);
    let (rl, sl) = (rx.hypot(ry), sx.hypot(sy));
    if rl < 1e-9 || sl < 1e-9 {
        return None;
    }
    let denom = rx * sy - ry * sx;
    if (denom / (rl * sl)).abs() < MIN_CROSSING_SIN {
        return None;
    }
    let (qx, qy) = (q0.x - p0.x, q0.y - p0.y);
    let t = (qx * sy - qy * sx) / denom;
    let u = (qx * ry - qy * rx) / denom;
    ((0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)).then_some((t, u))
}

fn arrival_index(arcs: &[f64], s: f64) -> usize {
    arcs.iter()
        .position(|&a| a >= s - ARC_EPS)
        .unwrap_or(arcs.len() - 1)
}

fn front_reach_index(states: &[AgentState], dims: Dims, p: PathPoint, upto: usize) -> usize {
    (0..=upto)
        .find(|&i| {
            let (lon, _) = OrientedBox::at(&states[i], dims).local(p);
            lon <= 0.5 * dims.length + ARC_EPS
        })
        .unwrap_or(upto)
}

/// First crossing of the two center-point paths, or for same-lane geometry the
/// midpoint between the centers at the first collision step.
///
/// A path crossing is the intersection minimising the summed arc length along
/// both paths, which keeps the result symmetric in its arguments. Its indices
/// are the first steps at which each agent has reached the point. For a
/// same-lane collision, each index is the first step at which the agent's front
/// face is at or past the collision point.
pub fn cross_point(
    traj_a: &Trajectory,
    traj_b: &Trajectory,
    dims_a: Dims,
    dims_b: Dims,
) -> Result<Option<CrossPoint>, GeometryError> {
    check_aligned(traj_a, traj_b)?;
    let (sa, sb) = (&traj_a.states, &traj_b.states);
    if sa.is_empty() {
        return Ok(None);
    }
    let (arcs_a, arcs_b) = (arc_lengths(sa), arc_lengths(sb));

    let mut best: Option<(f64, f64, PathPoint)> = None;
    for i in 0..sa.len().saturating_sub(1) {
        let (p0, p1) = (sa[i].position(), sa[i + 1].position());
        for j in 0..sb.len().saturating_sub(1) {
            let (q0, q1) = (sb[j].position(), sb[j + 1].position());
            if let Some((t, u)) = segment_intersection(p0, p1, q0, q1) {
                let s_a = arcs_a[i] + t * (arcs_a[i + 1] - arcs_a[i]);
                let s_b = arcs_b[j] + u * (arcs_b[j + 1] - arcs_b[j]);
                let better = match best {
                    None => true,
                    Some((ba, bb, _)) => {
                        let (sum, best_sum) = (s_a + s_b, ba + bb);
                        sum < best_sum - 1e-9
                            || ((sum - best_sum).abs() <= 1e-9 && s_a.min(s_b) < ba.min(bb))
                    }
                };
                if better {
                    best = Some((s_a, s_b, lerp(p0, p1, t)));
                }
            }
        }
    }
    if let Some((s_a, s_b, point)) = best {
        return Ok(Some(CrossPoint {
            point,
            index_a: arrival_index(&arcs_a, s_a),
            index_b: arrival_index(&arcs_b, s_b),
            kind: CrossKind::PathCrossing,
        }));
    }

    let Some(k) = first_collision_step(traj_a, traj_b, dims_a, dims_b, 0)? else {
        return Ok(None);
    };
    let point = sa[k].position().midpoint(sb[k].position());
    Ok(Some(CrossPoint {
        point,
        index_a: front_reach_index(sa, dims_a, point, k),
        index_b: front_reach_index(sb, dims_b, point, k),
        kind: CrossKind::SameLaneCollision,
    }))
}
