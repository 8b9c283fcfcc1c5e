use std::path::Path;
use std::process::{Command, Output};

use intersim::{load_scenario, Trace};
use serde_json::Value;

fn intersim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_intersim"))
        .args(args)
        .env_remove("INTERSIM_OUT")
        .output()
        .expect("binary runs")
}

fn fixture() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/crossing_01.json")
        .to_string_lossy()
        .into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn run_fixture_writes_trace_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = intersim(&["run", "--scenario", &fixture(), "--planner", "replay", "--policy", "full", "--seed", "7", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let trace = Trace::load(&dir.path().join("trace.json")).unwrap();
    assert_eq!(trace.scenario_id, "crossing_01");
    assert_eq!(trace.seed, 7);
    assert_eq!(trace.frames.len(), 16);
    let m = json(&dir.path().join("metrics.json"));
    assert_eq!(m["metrics"]["relevant_ratio"], 1.0);
    assert_eq!(m["collisions"].as_array().unwrap().len(), 0);
}

#[test]
fn m0_slowdown_reports_rear_collision() {
    let dir = tempfile::tempdir().unwrap();
    let o = intersim(&[
        "run", "--gen", "car-following", "--gap", "15", "--planner", "slowdown", "--decel", "1.5",
        "--policy", "m0", "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let m = json(&dir.path().join("metrics.json"));
    assert_eq!(m["metrics"]["rear_rate"], 0.5);
    assert_eq!(m["collisions"][0]["class"], "rear");
    assert_eq!(m["collisions"][0]["striker"], "follow");
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_intersim"))
        .args(["run", "--gen", "chain", "--agents", "3"])
        .env("INTERSIM_OUT", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("trace.json").exists());
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        &["run", "--gen", "chain", "--policy", "m7"][..],
        &["run", "--gen", "crossing", "--force-relation", "a-b"][..],
        &["run", "--gen", "crossing", "--force-relation", "a>zz"][..],
        &["run"][..],
        &["batch", "--suite", "chain", "--workers", "0"][..],
        &["frobnicate"][..],
    ] {
        let o = intersim(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn runtime_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = intersim(&["run", "--scenario", "/definitely/not/here.json"]);
    assert_eq!(o.status.code(), Some(1));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"id\": \"x\"}").unwrap();
    let o = intersim(&["run", "--scenario", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("schema"));
    let empty = tempfile::tempdir().unwrap();
    let o = intersim(&["batch", "--dir", empty.path().to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn forced_relation_swaps_the_yielding_agent() {
    let (base, forced) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(intersim(&["run", "--scenario", &fixture(), "--out", base.path().to_str().unwrap()]).status.success());
    assert!(intersim(&[
        "run", "--scenario", &fixture(), "--force-relation", "b>a", "--out", forced.path().to_str().unwrap(),
    ])
    .status
    .success());
    let scenario = load_scenario(Path::new(&fixture())).unwrap();
    let base = Trace::load(&base.path().join("trace.json")).unwrap();
    let forced = Trace::load(&forced.path().join("trace.json")).unwrap();
    let logged = |id: &str| scenario.agent(&id.into()).unwrap().reference_future.clone();
    assert_eq!(base.committed[&"a".into()].states, logged("a"));
    assert_ne!(base.committed[&"b".into()].states, logged("b"));
    assert_eq!(forced.committed[&"b".into()].states, logged("b"));
    assert_ne!(forced.committed[&"a".into()].states, logged("a"));
    let events = serde_json::to_value(&forced.events).unwrap();
    let sources: Vec<&Value> = events
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| e["kind"]["type"] == "relation_used")
        .map(|e| &e["kind"]["source"])
        .collect();
    assert!(!sources.is_empty() && sources.iter().all(|s| *s == "override"));
}

#[test]
fn override_on_a_quiet_pair_changes_nothing() {
    let (base, forced) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let common = ["run", "--gen", "car-following", "--gap", "25", "--planner", "replay"];
    let mut a = common.to_vec();
    a.extend(["--out", base.path().to_str().unwrap()]);
    let mut b = common.to_vec();
    b.extend(["--force-relation", "follow>lead", "--out", forced.path().to_str().unwrap()]);
    assert!(intersim(&a).status.success() && intersim(&b).status.success());
    assert_eq!(
        std::fs::read(base.path().join("trace.json")).unwrap(),
        std::fs::read(forced.path().join("trace.json")).unwrap()
    );
}

#[test]
fn gen_then_batch_then_render() {
    let dir = tempfile::tempdir().unwrap();
    let scenes = dir.path().join("scenes");
    let o = intersim(&["gen", "--gen", "car-following", "--count", "6", "--seed", "2", "--out", scenes.to_str().unwrap()]);
    assert!(o.status.success());
    let report = dir.path().join("report");
    let o = intersim(&[
        "batch", "--dir", scenes.to_str().unwrap(), "--planner", "slowdown",
        "--policies", "m0,m1,full:cooperative,full:authoritative", "--workers", "2",
        "--out", report.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(report.join("report.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "policy,episodes,relevant_ratio,ade,fde,front,side,rear,progress");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("m0:cooperative,6,"));
    let episodes = std::fs::read_to_string(report.join("episodes.csv")).unwrap();
    assert_eq!(episodes.lines().count(), 1 + 4 * 6);
    let summary = json(&report.join("report.json"));
    assert_eq!(summary.as_array().unwrap().len(), 4);

    let run = dir.path().join("run");
    let one = scenes.read_dir().unwrap().next().unwrap().unwrap().path();
    assert!(intersim(&["run", "--scenario", one.to_str().unwrap(), "--planner", "slowdown", "--out", run.to_str().unwrap()]).status.success());
    let frames = dir.path().join("frames");
    let o = intersim(&["render", "--trace", run.join("trace.json").to_str().unwrap(), "--out", frames.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(frames.read_dir().unwrap().count(), 16);
}

#[test]
fn render_rejects_malformed_trace() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("trace.json");
    std::fs::write(&bad, "[1, 2, 3]").unwrap();
    let o = intersim(&["render", "--trace", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}
