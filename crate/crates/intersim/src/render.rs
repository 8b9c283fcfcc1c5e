//! SVG frames of an episode trace.
//!
//! Every frame shares one viewport so that a directory of frames plays back as
//! an animation. World y points up; SVG y points down, hence the flips.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use intersim_core::{AgentState, Dims, Frame, MapFeatureKind, OrientedBox};

use crate::io::{write_text, IoError};
use crate::trace::Trace;

const MARGIN: f64 = 10.0;
const PIXELS_PER_METER: f64 = 6.0;

#[derive(Clone, Copy, Debug)]
struct Bounds {
    min_x: f64,
    min_y: f64,
    max_x: f64,
    max_y: f64,
}

impl Bounds {
    fn add(&mut self, x: f64, y: f64) {
        self.min_x = self.min_x.min(x);
        self.min_y = self.min_y.min(y);
        self.max_x = self.max_x.max(x);
        self.max_y = self.max_y.max(y);
    }

    fn of(trace: &Trace) -> Self {
        let mut b = Bounds {
            min_x: f64::INFINITY,
            min_y: f64::INFINITY,
            max_x: f64::NEG_INFINITY,
            max_y: f64::NEG_INFINITY,
        };
        for frame in &trace.frames {
            for a in &frame.agents {
                b.add(a.state.x, a.state.y);
                for p in &a.future {
                    b.add(p.x, p.y);
                }
            }
        }
        if !b.min_x.is_finite() {
            b = Bounds {
                min_x: -10.0,
                min_y: -10.0,
                max_x: 10.0,
                max_y: 10.0,
            };
        }
        // Only the map around the agents matters; long road edges would
        // shrink everything else.
        let around = b;
        for f in &trace.map {
            for &[x, y] in &f.points {
                b.add(
                    x.clamp(around.min_x - 30.0, around.max_x + 30.0),
                    y.clamp(around.min_y - 30.0, around.max_y + 30.0),
                );
            }
        }
        Bounds {
            min_x: b.min_x - MARGIN,
            min_y: b.min_y - MARGIN,
            max_x: b.max_x + MARGIN,
            max_y: b.max_y + MARGIN,
        }
    }
}

fn points_attr(points: impl Iterator<Item = (f64, f64)>) -> String {
    let mut s = String::new();
    for (x, y) in points {
        let _ = write!(s, "{:.2},{:.2} ", x, -y);
    }
    s.trim_end().to_string()
}

fn agent_box(state: &AgentState, dims: Dims) -> String {
    let corners = OrientedBox::at(state, dims).corners();
    points_attr(corners.iter().map(|c| (c.x, c.y)))
}

/// One frame as a standalone SVG document.
pub fn render_frame(trace: &Trace, frame: &Frame) -> String {
    let b = Bounds::of(trace);
    let (w, h) = (b.max_x - b.min_x, b.max_y - b.min_y);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="{:.2} {:.2} {:.2} {:.2}">"#,
        w * PIXELS_PER_METER,
        h * PIXELS_PER_METER,
        b.min_x,
        -b.max_y,
        w,
        h
    );
    svg.push_str(
        "<style>\
         .lane{fill:none;stroke:#bbb;stroke-width:0.15;stroke-dasharray:1 1}\
         .edge{fill:none;stroke:#444;stroke-width:0.2}\
         .crosswalk{fill:none;stroke:#999;stroke-width:0.6}\
         .agent{fill:#9aa;stroke:#333;stroke-width:0.1}\
         .agent.ego{fill:#36c}\
         .agent.relevant{fill:#f80;stroke:#a30;stroke-width:0.3}\
         .future{fill:#333;opacity:0.4}\
         .future.relevant{fill:#a30}\
         text{font:2px sans-serif;fill:#222}\
         </style>\n",
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="white"/>"#,
        b.min_x, -b.max_y, w, h
    );
    for f in &trace.map {
        let class = match f.kind {
            MapFeatureKind::LaneCenterline => "lane",
            MapFeatureKind::RoadEdge => "edge",
            MapFeatureKind::Crosswalk => "crosswalk",
        };
        let _ = writeln!(
            svg,
            r#"<polyline class="{class}" points="{}"/>"#,
            points_attr(f.points.iter().map(|&[x, y]| (x, y)))
        );
    }
    for a in &frame.agents {
        let Some(meta) = trace.agent(&a.id) else {
            continue;
        };
        let relevant = trace.relevant.contains(&a.id);
        let mut class = String::from("agent");
        if a.id == trace.ego_id {
            class.push_str(" ego");
        }
        if relevant {
            class.push_str(" relevant");
        }
        let dot_class = if relevant { "future relevant" } else { "future" };
        for p in &a.future {
            let _ = writeln!(
                svg,
                r#"<circle class="{dot_class}" cx="{:.2}" cy="{:.2}" r="0.3"/>"#,
                p.x, -p.y
            );
        }
        let _ = writeln!(
            svg,
            r#"<polygon class="{class}" data-id="{}" points="{}"/>"#,
            a.id,
            agent_box(&a.state, Dims::new(meta.length, meta.width))
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            a.state.x + 0.5 * meta.length,
            -a.state.y - 0.5 * meta.width - 0.5,
            a.id
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}">{} | {} | step {} | t = {:.1} s</text>"#,
        b.min_x + 1.0,
        -b.max_y + 3.0,
        trace.scenario_id,
        crate::report::policy_label(&trace.policy),
        frame.step,
        frame.step as f64 * trace.step_seconds
    );
    svg.push_str("</svg>\n");
    svg
}

/// Writes `frame_000.svg`, `frame_001.svg`, ... into `dir`.
pub fn render_trace(trace: &Trace, dir: &Path) -> Result<Vec<PathBuf>, IoError> {
    trace
        .frames
        .iter()
        .map(|frame| {
            let path = dir.join(format!("frame_{:03}.svg", frame.step));
            write_text(&path, &render_frame(trace, frame))?;
            Ok(path)
        })
        .collect()
}
