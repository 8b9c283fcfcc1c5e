//! Per-episode and per-policy metric tables, written as CSV and JSON.
//!
//! Floats are printed with Rust's shortest round-trip formatting, so equal
//! values always produce equal bytes.

use std::path::Path;

use intersim_core::metrics::MetricsError;
use intersim_core::{aggregate, BatchReport, EgoMode, EpisodeMetrics, PolicyKind, ResolutionPolicy};
use serde::{Deserialize, Serialize};

use crate::io::{write_text, IoError};

/// `m0`, `m1` or `full`, optionally suffixed with `:authoritative` or
/// `:cooperative`.
pub fn policy_label(policy: &ResolutionPolicy) -> String {
    let kind = match policy.kind {
        PolicyKind::M0 => "m0",
        PolicyKind::M1 => "m1",
        PolicyKind::Full => "full",
    };
    let mode = match policy.ego_mode {
        EgoMode::Authoritative => "authoritative",
        EgoMode::Cooperative => "cooperative",
    };
    format!("{kind}:{mode}")
}

/// Parses a policy label; a missing ego-mode suffix means `default_mode`.
pub fn parse_policy(label: &str, default_mode: EgoMode) -> Result<ResolutionPolicy, String> {
    let (kind, mode) = match label.split_once(':') {
        Some((k, m)) => (k, Some(m)),
        None => (label, None),
    };
    let kind = match kind.trim().to_ascii_lowercase().as_str() {
        "m0" => PolicyKind::M0,
        "m1" => PolicyKind::M1,
        "full" => PolicyKind::Full,
        other => return Err(format!("unknown policy `{other}` (expected m0, m1 or full)")),
    };
    let ego_mode = match mode.map(|m| m.trim().to_ascii_lowercase()) {
        None => default_mode,
        Some(m) if m == "authoritative" => EgoMode::Authoritative,
        Some(m) if m == "cooperative" => EgoMode::Cooperative,
        Some(m) => return Err(format!("unknown ego mode `{m}` (expected authoritative or cooperative)")),
    };
    Ok(ResolutionPolicy::new(kind, ego_mode))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub scenario_id: String,
    pub policy: String,
    pub seed: u64,
    pub metrics: EpisodeMetrics,
    pub resolutions: usize,
    pub overshoot_agents: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub policy: String,
    #[serde(flatten)]
    pub report: BatchReport,
}

const EPISODE_COLUMNS: [&str; 14] = [
    "scenario_id",
    "policy",
    "seed",
    "relevant_ratio",
    "ade",
    "fde",
    "front",
    "side",
    "rear",
    "progress",
    "residual_collision_pairs",
    "ade_relevant",
    "fde_relevant",
    "resolutions",
];

fn csv_text(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

pub fn episodes_csv(rows: &[EpisodeRow]) -> String {
    csv_text(
        &EPISODE_COLUMNS,
        rows.iter().map(|r| {
            let m = &r.metrics;
            vec![
                r.scenario_id.clone(),
                r.policy.clone(),
                r.seed.to_string(),
                m.relevant_ratio.to_string(),
                m.ade.to_string(),
                m.fde.to_string(),
                m.front_rate.to_string(),
                m.side_rate.to_string(),
                m.rear_rate.to_string(),
                m.progress.to_string(),
                m.residual_collision_pairs.to_string(),
                m.ade_relevant.to_string(),
                m.fde_relevant.to_string(),
                r.resolutions.to_string(),
            ]
        }),
    )
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut header = vec!["policy", "episodes"];
    header.extend(BatchReport::COLUMNS);
    csv_text(
        &header,
        rows.iter().map(|r| {
            let mut fields = vec![r.policy.clone(), r.report.episodes.to_string()];
            fields.extend(r.report.values().iter().map(f64::to_string));
            fields
        }),
    )
}

/// One summary row per policy label, in order of first appearance.
pub fn summarize(rows: &[EpisodeRow]) -> Result<Vec<SummaryRow>, MetricsError> {
    let mut labels: Vec<&str> = Vec::new();
    for r in rows {
        if !labels.contains(&r.policy.as_str()) {
            labels.push(&r.policy);
        }
    }
    if labels.is_empty() {
        return Err(MetricsError::EmptyBatch);
    }
    labels
        .into_iter()
        .map(|label| {
            let metrics: Vec<EpisodeMetrics> = rows
                .iter()
                .filter(|r| r.policy == label)
                .map(|r| r.metrics)
                .collect();
            Ok(SummaryRow {
                policy: label.to_string(),
                report: aggregate(&metrics)?,
            })
        })
        .collect()
}

pub fn write_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    write_text(path, &text)
}

pub fn write_csv(text: &str, path: &Path) -> Result<(), IoError> {
    write_text(path, text)
}
