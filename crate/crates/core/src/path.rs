//! Arc-length parameterised polylines.

use alloc::vec::Vec;

#[allow(unused_imports)] // inherent methods once std is linked
use num_traits::Float;


use crate::geometry::PathPoint;

const MIN_SEGMENT: f64 = 1e-9;

/// A polyline with cumulative arc lengths.
///
/// Both ends are treated as extending to infinity along the first and last
/// segment, so projections and lookups never clamp. A polyline that collapses to a
/// single point extends along `fallback_heading`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polyline {
    points: Vec<PathPoint>,
    cumulative: Vec<f64>,
    fallback_heading: f64,
}

impl Polyline {
    /// Builds a polyline, dropping consecutive duplicate points. Returns `None` for
    /// an empty point list.
    pub fn new(points: impl IntoIterator<Item = PathPoint>, fallback_heading: f64) -> Option<Self> {
        let mut kept: Vec<PathPoint> = Vec::new();
        for p in points {
            match kept.last() {
                Some(last) if last.distance(p) < MIN_SEGMENT => {}
                _ => kept.push(p),
            }
        }
        if kept.is_empty() {
            return None;
        }
        let mut cumulative = Vec::with_capacity(kept.len());
        let mut total = 0.0;
        cumulative.push(0.0);
        for w in kept.windows(2) {
            total += w[0].distance(w[1]);
            cumulative.push(total);
        }
        Some(Self {
            points: kept,
            cumulative,
            fallback_heading,
        })
    }

    pub fn points(&self) -> &[PathPoint] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap_or(&0.0)
    }

    fn segment_count(&self) -> usize {
        self.points.len().saturating_sub(1)
    }

    fn segment_heading(&self, i: usize) -> f64 {
        let a = self.points[i];
        let b = self.points[i + 1];
        (b.y - a.y).atan2(b.x - a.x)
    }

    fn end_headings(&self) -> (f64, f64) {
        match self.segment_count() {
            0 => (self.fallback_heading, self.fallback_heading),
            n => (self.segment_heading(0), self.segment_heading(n - 1)),
        }
    }

    /// Point and heading at arc length `s`, extrapolating past either end.
    pub fn point_at(&self, s: f64) -> (PathPoint, f64) {
        let (first_heading, last_heading) = self.end_headings();
        if s <= 0.0 || self.segment_count() == 0 {
            let h = if s <= 0.0 { first_heading } else { last_heading };
            let origin = if s <= 0.0 {
                self.points[0]
            } else {
                self.points[self.points.len() - 1]
            };
            let ds = if s <= 0.0 { s } else { s - self.length() };
            return (origin.offset(h, ds), h);
        }
        if s >= self.length() {
            let end = self.points[self.points.len() - 1];
            return (end.offset(last_heading, s - self.length()), last_heading);
        }
        // Last segment whose start arc length is <= s.
        let i = match self
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&s).unwrap_or(core::cmp::Ordering::Less))
        {
            Ok(i) => i.min(self.segment_count() - 1),
            Err(i) => i - 1,
        };
        let h = self.segment_heading(i);
        (self.points[i].offset(h, s - self.cumulative[i]), h)
    }

    /// Nearest-point projection. Returns `(arc_length, lateral_distance)`.
    pub fn project(&self, p: PathPoint) -> (f64, f64) {
        let n = self.segment_count();
        if n == 0 {
            let h = self.fallback_heading;
            let (dx, dy) = (p.x - self.points[0].x, p.y - self.points[0].y);
            let along = dx * h.cos() + dy * h.sin();
            let lateral = (-dx * h.sin() + dy * h.cos()).abs();
            return (along, lateral);
        }
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..n {
            let a = self.points[i];
            let b = self.points[i + 1];
            let (ux, uy) = (b.x - a.x, b.y - a.y);
            let len2 = ux * ux + uy * uy;
            let mut t = ((p.x - a.x) * ux + (p.y - a.y) * uy) / len2;
            if i > 0 {
                t = t.max(0.0);
            }
            if i + 1 < n {
                t = t.min(1.0);
            }
            let q = PathPoint::new(a.x + t * ux, a.y + t * uy);
            let d = q.distance(p);
            if d < best.0 - 1e-12 {
                best = (d, self.cumulative[i] + t * len2.sqrt());
            }
        }
        (best.1, best.0)
    }
}
