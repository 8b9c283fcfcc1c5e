//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use intersim_core::engine::pairwise_conflicts;
use intersim_core::metrics::collisions;
use intersim_core::scenario::{
    car_following_suite, chain_suite, crossing_suite, gen_car_following, gen_chain, gen_crossing,
    ChainParams,
};
use intersim_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn replay(s: &Scenario, id: &AgentId) -> Trajectory {
    Trajectory::new(0, s.agent(id).unwrap().reference_future.clone())
}

fn bitwise_eq(a: &Trajectory, b: &Trajectory) -> bool {
    a.start_step == b.start_step
        && a.states.len() == b.states.len()
        && a.states.iter().zip(&b.states).all(|(p, q)| {
            [p.x, p.y, p.heading, p.speed]
                .iter()
                .zip([q.x, q.y, q.heading, q.speed])
                .all(|(u, v)| u.to_bits() == v.to_bits())
        })
}

fn replay_conflicts(s: &Scenario) -> Vec<(AgentId, AgentId, usize)> {
    let committed = s.agents.iter().map(|a| (a.id.clone(), replay(s, &a.id))).collect();
    pairwise_conflicts(s, &committed, 0).unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit: f64) -> bool {
    elapsed.as_secs_f64() < limit
}

// 1 -------------------------------------------------------------------------

fn replay_fixed_point() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut scenes = Vec::new();
    let mut seed = 0u64;
    while scenes.len() < 50 {
        seed += 1;
        let s = match seed % 3 {
            0 => {
                let v = rng.random_range(6.0..14.0);
                gen_car_following(rng.random_range(12.0..30.0), v, v, seed)
            }
            1 => {
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                gen_crossing(
                    rng.random_range(PI / 3.0..2.0 * PI / 3.0),
                    sign * rng.random_range(1.5..3.0),
                    (rng.random_range(6.0..12.0), rng.random_range(6.0..12.0)),
                    seed,
                )
            }
            _ => gen_chain(
                ChainParams {
                    agents: rng.random_range(3..=8),
                    speed: rng.random_range(5.0..12.0),
                    spacing: rng.random_range(8.0..14.0),
                },
                seed,
            ),
        };
        if replay_conflicts(&s).is_empty() {
            scenes.push(s);
        }
    }
    let mut worst: (f64, f64, f64) = (0.0, 0.0, 0.0);
    for s in &scenes {
        let r = run_episode(&Engine::new(s, ResolutionPolicy::full()), &PlannerSpec::Replay, 0)
            .map_err(|e| format!("{}: {e}", s.id))?;
        let m = episode_metrics(&r, s);
        worst = (worst.0.max(m.ade), worst.1.max(m.fde), worst.2.max(m.relevant_ratio));
    }
    let elapsed = t0.elapsed();
    check(
        worst == (0.0, 0.0, 0.0) && within(elapsed, 5.0),
        format!(
            "50 scenes, max ade {} fde {} relevant_ratio {}, {:.2?}",
            worst.0, worst.1, worst.2, elapsed
        ),
    )
}

// 2 -------------------------------------------------------------------------

fn rear_collision_ordering() -> Outcome {
    let t0 = Instant::now();
    let scenes: Vec<Scenario> = car_following_suite(1, 200).into_iter().map(|(_, s)| s).collect();
    let planner = PlannerSpec::Slowdown { decel: 1.5 };
    let mut rows = Vec::new();
    for kind in [PolicyKind::M0, PolicyKind::M1, PolicyKind::Full] {
        let policy = ResolutionPolicy::new(kind, EgoMode::Authoritative);
        let (mut rear, mut progress) = (0usize, 0.0);
        for s in &scenes {
            let r = run_episode(&Engine::new(s, policy), &planner, 0).map_err(|e| format!("{}: {e}", s.id))?;
            if collisions(&r, s).iter().any(|c| c.class == CollisionClass::Rear) {
                rear += 1;
            }
            progress += episode_metrics(&r, s).progress;
        }
        rows.push((rear as f64 / scenes.len() as f64, progress / scenes.len() as f64));
    }
    let elapsed = t0.elapsed();
    let [(m0, p0), (m1, p1), (full, pf)] = [rows[0], rows[1], rows[2]];
    check(
        m0 >= 0.5 && m1 <= 0.02 && full <= 0.02 && p1 < pf && pf < p0 && within(elapsed, 60.0),
        format!(
            "rear-collision scenes m0 {:.1}% m1 {:.1}% full {:.1}%, progress m1 {p1:.2} < full {pf:.2} < m0 {p0:.2}, {elapsed:.2?}",
            100.0 * m0,
            100.0 * m1,
            100.0 * full
        ),
    )
}

// 3 -------------------------------------------------------------------------

fn cascade_soundness() -> Outcome {
    let planner = PlannerSpec::Slowdown { decel: 1.5 };
    let suite = chain_suite(1, 100);
    let (mut overshoot_scenes, mut max_ratio, mut failures) = (0usize, 0.0f64, Vec::new());
    for (params, s) in &suite {
        let engine = Engine::new(s, ResolutionPolicy::full());
        let mut state = engine.initial_state();
        for step in 0..s.horizon_steps() {
            let plan = planner.plan(s, step).map_err(|e| e.to_string())?;
            let before = state.resolutions;
            engine.submit_plan(&mut state, &plan).map_err(|e| format!("{}: {e}", s.id))?;
            max_ratio = max_ratio.max((state.resolutions - before) as f64 / params.agents as f64);
            engine.advance(&mut state).unwrap();
        }
        let overshoot: BTreeSet<&AgentId> = state
            .events
            .iter()
            .filter_map(|e| match &e.kind {
                EventKind::Overshoot { agent, .. } => Some(agent),
                _ => None,
            })
            .collect();
        if !overshoot.is_empty() {
            overshoot_scenes += 1;
        }
        for (a, b, k) in pairwise_conflicts(s, &state.committed, 0).unwrap() {
            if !overshoot.contains(&a) && !overshoot.contains(&b) {
                failures.push(format!("{}: {a}/{b} collide at step {k}", s.id));
            }
        }
        let followers: BTreeSet<AgentId> = (1..params.agents).map(|i| AgentId::from(format!("f{i}"))).collect();
        if state.relevant != followers {
            failures.push(format!("{}: relevant {:?}", s.id, state.relevant));
        }
        for i in 1..params.agents {
            let (me, ahead) = (
                AgentId::from(format!("f{i}")),
                if i == 1 { s.ego_id.clone() } else { AgentId::from(format!("f{}", i - 1)) },
            );
            let dims = s.agent(&me).unwrap().dims();
            let hit = first_collision_step(&replay(s, &me), &state.committed[&ahead], dims, dims, 0).unwrap();
            if hit.is_none() {
                failures.push(format!("{}: {me} is relevant without a collision against {ahead}", s.id));
            }
        }
    }
    check(
        failures.is_empty() && (overshoot_scenes as f64) < 0.05 * suite.len() as f64 && max_ratio <= 4.0,
        format!(
            "100 chains, {} violations{}, overshoot in {overshoot_scenes} scenes, max re-plans per resolution pass {max_ratio:.2}·N",
            failures.len(),
            failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    )
}

// 4 -------------------------------------------------------------------------

/// Index of the first state whose progress along the straight path reaches `t`.
fn arrival(states: &[AgentState], t: f64) -> usize {
    let (x0, y0, h) = (states[0].x, states[0].y, states[0].heading);
    states
        .iter()
        .position(|p| (p.x - x0) * h.cos() + (p.y - y0) * h.sin() >= t - 1e-6)
        .unwrap_or(states.len() - 1)
}

fn relation_oracle() -> Outcome {
    let none = OverrideRegistry::new();
    let (a, b) = (AgentId::from("a"), AgentId::from("b"));
    let mut bad = Vec::new();
    for (params, s) in crossing_suite(4, 500, (0.5, 2.0)) {
        let (ta, tb) = (replay(&s, &a), replay(&s, &b));
        let (ra, rb) = (s.agent(&a).unwrap(), s.agent(&b).unwrap());
        let label = infer_relation(&ta, &tb, (&a, &b), (ra.dims(), rb.dims()), &none).map_err(|e| e.to_string())?;

        // Straight paths: p_a + t·u_a = p_b + u·u_b.
        let (pa, pb) = (ta.states[0], tb.states[0]);
        let (ua, ub) = ((pa.heading.cos(), pa.heading.sin()), (pb.heading.cos(), pb.heading.sin()));
        let det = ua.0 * (-ub.1) - ua.1 * (-ub.0);
        let (dx, dy) = (pb.x - pa.x, pb.y - pa.y);
        let t_a = (dx * (-ub.1) - dy * (-ub.0)) / det;
        let t_b = (ua.0 * dy - ua.1 * dx) / det;
        let (ia, ib) = (arrival(&ta.states, t_a), arrival(&tb.states, t_b));
        let by_index = match ia.cmp(&ib) {
            std::cmp::Ordering::Less => &a,
            std::cmp::Ordering::Greater => &b,
            std::cmp::Ordering::Equal => {
                if ta.states[ia].speed >= tb.states[ib].speed {
                    &a
                } else {
                    &b
                }
            }
        };
        let by_offset = if params.arrival_offset > 0.0 { &a } else { &b };
        if &label.influencer != by_index || &label.influencer != by_offset {
            bad.push(format!(
                "{}: label {} index {ia}/{ib} offset {:.3}",
                s.id, label.influencer, params.arrival_offset
            ));
        }
    }
    check(
        bad.is_empty(),
        format!(
            "500 crossings, {} influencer mismatches{}",
            bad.len(),
            bad.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    )
}

// 5 -------------------------------------------------------------------------

fn relation_manipulation() -> Outcome {
    let scenes: Vec<Scenario> = crossing_suite(5, 400, (0.1, 1.0))
        .into_iter()
        .map(|(_, s)| s)
        .filter(|s| !replay_conflicts(s).is_empty())
        .take(20)
        .collect();
    if scenes.len() < 20 {
        return Err(format!("only {} conflicting crossings", scenes.len()));
    }
    let policy = ResolutionPolicy::new(PolicyKind::Full, EgoMode::Cooperative);
    let none = OverrideRegistry::new();
    let mut bad = Vec::new();
    for s in &scenes {
        let (a, b) = (AgentId::from("a"), AgentId::from("b"));
        let (ta, tb) = (replay(s, &a), replay(s, &b));
        let (da, db) = (s.agent(&a).unwrap().dims(), s.agent(&b).unwrap().dims());
        let label = infer_relation(&ta, &tb, (&a, &b), (da, db), &none).map_err(|e| e.to_string())?;
        let (inf, rea) = (label.influencer, label.reactor);
        let mut reversed = OverrideRegistry::new();
        reversed.insert(rea.clone(), inf.clone()).map_err(|e| e.to_string())?;

        let base = run_episode(&Engine::new(s, policy), &PlannerSpec::Replay, 0).map_err(|e| e.to_string())?;
        let forced = run_episode(&Engine::new(s, policy).with_overrides(&reversed), &PlannerSpec::Replay, 0)
            .map_err(|e| e.to_string())?;
        let modified = |r: &EpisodeResult, id: &AgentId| !bitwise_eq(&r.committed[id], &replay(s, id));
        let ok = modified(&base, &rea)
            && !modified(&base, &inf)
            && modified(&forced, &inf)
            && !modified(&forced, &rea);
        if !ok {
            bad.push(s.id.clone());
        }
    }
    check(
        bad.is_empty(),
        format!("20 conflicting crossings, {} without a clean swap {:?}", bad.len(), bad),
    )
}

// 6 -------------------------------------------------------------------------

fn random_box(rng: &mut ChaCha8Rng) -> OrientedBox {
    OrientedBox::new(
        rng.random_range(-3.0..3.0),
        rng.random_range(-3.0..3.0),
        rng.random_range(-PI..PI),
        rng.random_range(1.0..6.0),
        rng.random_range(0.5..3.0),
    )
}

fn inside(b: &OrientedBox, x: f64, y: f64) -> bool {
    let (s, c) = b.heading.sin_cos();
    let (dx, dy) = (x - b.center_x, y - b.center_y);
    (dx * c + dy * s).abs() <= 0.5 * b.length && (-dx * s + dy * c).abs() <= 0.5 * b.width
}

/// Boundary points of `b` no more than 1 cm apart, corners included.
fn boundary(b: &OrientedBox) -> Vec<(f64, f64)> {
    let (s, c) = b.heading.sin_cos();
    let (hl, hw) = (0.5 * b.length, 0.5 * b.width);
    let corners = [(hl, -hw), (hl, hw), (-hl, hw), (-hl, -hw)];
    let mut out = Vec::new();
    for k in 0..4 {
        let (p, q) = (corners[k], corners[(k + 1) % 4]);
        let len = (q.0 - p.0).hypot(q.1 - p.1);
        let n = (len / 0.01).ceil() as usize;
        for i in 0..=n {
            let f = i as f64 / n as f64;
            let (lx, ly) = (p.0 + f * (q.0 - p.0), p.1 + f * (q.1 - p.1));
            out.push((b.center_x + lx * c - ly * s, b.center_y + lx * s + ly * c));
        }
    }
    out
}

fn sampled_overlap(a: &OrientedBox, b: &OrientedBox) -> bool {
    boundary(a).iter().any(|&(x, y)| inside(b, x, y)) || boundary(b).iter().any(|&(x, y)| inside(a, x, y))
}

/// Largest separation over the four edge normals: positive when apart,
/// minus the penetration depth when overlapping.
fn sat_margin(a: &OrientedBox, b: &OrientedBox) -> f64 {
    let project = |o: &OrientedBox, (ax, ay): (f64, f64)| {
        let (s, c) = o.heading.sin_cos();
        let mid = o.center_x * ax + o.center_y * ay;
        let r = 0.5 * o.length * (c * ax + s * ay).abs() + 0.5 * o.width * (-s * ax + c * ay).abs();
        (mid - r, mid + r)
    };
    [a.heading, b.heading]
        .iter()
        .flat_map(|&h| [(h.cos(), h.sin()), (-h.sin(), h.cos())])
        .map(|axis| {
            let ((amin, amax), (bmin, bmax)) = (project(a, axis), project(b, axis));
            (amin - bmax).max(bmin - amax)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn moved(b: &OrientedBox, theta: f64, tx: f64, ty: f64) -> OrientedBox {
    let (s, c) = theta.sin_cos();
    OrientedBox::new(
        b.center_x * c - b.center_y * s + tx,
        b.center_x * s + b.center_y * c + ty,
        b.heading + theta,
        b.length,
        b.width,
    )
}

fn geometry_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut compared, mut banded, mut overlapping, mut sampled) = (0, 0, 0, 0);
    let mut bad = Vec::new();
    while compared < 1000 {
        let (a, b) = (random_box(&mut rng), random_box(&mut rng));
        sampled += 1;
        let got = boxes_overlap(&a, &b);
        if got != boxes_overlap(&b, &a) {
            bad.push(format!("asymmetric {a:?} {b:?}"));
        }
        let (theta, tx, ty) = (rng.random_range(-PI..PI), rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0));
        if got != boxes_overlap(&moved(&a, theta, tx, ty), &moved(&b, theta, tx, ty)) {
            bad.push(format!("not rigid-invariant {a:?} {b:?}"));
        }
        if sat_margin(&a, &b).abs() < 0.02 {
            banded += 1;
            continue;
        }
        compared += 1;
        overlapping += got as usize;
        if got != sampled_overlap(&a, &b) {
            bad.push(format!("oracle disagrees {a:?} {b:?}"));
        }
    }
    check(
        bad.is_empty(),
        format!(
            "{compared} pairs ({overlapping} overlapping, {banded} inside the 2 cm band skipped), symmetry/rigid checks on {sampled}, {} failures{}",
            bad.len(),
            bad.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    )
}

// 7 -------------------------------------------------------------------------

fn stopping_kinematics() -> Outcome {
    let limits = KinematicLimits::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let path = [PathPoint::new(0.0, 0.0), PathPoint::new(500.0, 0.0)];
    let (mut feasible, mut worst_ratio) = (0usize, 0.0f64);
    let mut bad = Vec::new();
    for case in 0..100 {
        let v0: f64 = rng.random_range(1.0..15.0);
        let comfort_stop = v0 * v0 / (2.0 * limits.comfort_decel);
        let goal = comfort_stop * rng.random_range(0.3..3.0);
        let params = RolloutParams {
            horizon_steps: 40,
            step_seconds: 0.5,
            cruise_speed: v0 + rng.random_range(0.0..2.0),
            limits,
        };
        let current = AgentState::new(0.0, 0.0, 0.0, v0);
        let r = goal_conditioned_rollout(&current, &path, PathPoint::new(goal, 0.0), &params).map_err(|e| e.to_string())?;
        let states = &r.trajectory.states;
        let last = states.last().unwrap();
        if states.iter().any(|p| p.speed < 0.0) {
            bad.push(format!("case {case}: negative speed"));
        }
        let (decel, stop_at) = if comfort_stop <= goal {
            feasible += 1;
            if (last.x - goal).abs() > 0.5 || last.speed >= 0.1 || r.overshoot.is_some() {
                bad.push(format!("case {case}: v0 {v0:.2} goal {goal:.2} ends at {:.3} with {:.3} m/s", last.x, last.speed));
            }
            (limits.comfort_decel, goal)
        } else {
            let hard_stop = v0 * v0 / (2.0 * limits.hard_decel);
            if (last.x - hard_stop).abs() > 0.02 * hard_stop || last.speed >= 0.1 {
                bad.push(format!("case {case}: hard stop at {:.3}, expected {hard_stop:.3}", last.x));
            }
            let expected = (hard_stop > goal).then_some(hard_stop - goal);
            let logged_ok = match (r.overshoot, expected) {
                (Some(o), Some(e)) => (o - e).abs() <= 1e-6,
                (None, None) => true,
                _ => false,
            };
            if !logged_ok {
                bad.push(format!("case {case}: overshoot {:?}, expected {expected:?}", r.overshoot));
            }
            (limits.hard_decel, hard_stop)
        };
        let mut prev = v0;
        for p in states {
            if p.speed < prev - 1e-9 && p.speed >= 1.0 {
                let want = p.speed * p.speed / (2.0 * decel);
                let ratio = ((stop_at - p.x) - want).abs() / want;
                worst_ratio = worst_ratio.max(ratio);
                if ratio > 0.02 {
                    bad.push(format!("case {case}: {:.3} m left at {:.3} m/s, expected {want:.3}", stop_at - p.x, p.speed));
                }
            }
            prev = p.speed;
        }
    }
    check(
        bad.is_empty(),
        format!(
            "100 cases ({feasible} feasible), worst stopping-distance error {:.3}%, {} failures{}",
            100.0 * worst_ratio,
            bad.len(),
            bad.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    )
}

// 8 -------------------------------------------------------------------------

fn batch_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut compared = 0;
    for suite in ["car-following", "crossing", "chain"] {
        let mut outputs = Vec::new();
        for (run, workers) in ["1", "4", "4"].iter().enumerate() {
            let out = tmp.path().join(format!("{suite}-{run}"));
            let o = Command::new(env!("CARGO_BIN_EXE_intersim"))
                .args([
                    "batch", "--suite", suite, "--count", "30", "--seed", "17", "--planner", "perturbed",
                    "--policies", "m0,m1,full,full:authoritative", "--workers", workers,
                ])
                .arg("--out")
                .arg(&out)
                .output()
                .map_err(|e| e.to_string())?;
            if !o.status.success() {
                return Err(format!("batch failed: {}", String::from_utf8_lossy(&o.stderr)));
            }
            outputs.push(out);
        }
        for file in ["episodes.csv", "report.csv", "report.json"] {
            let read = |dir: &Path| std::fs::read(dir.join(file)).unwrap_or_default();
            let first = read(&outputs[0]);
            if first.is_empty() || outputs[1..].iter().any(|d| read(d) != first) {
                return Err(format!("{suite}/{file} differs between runs"));
            }
            compared += 1;
        }
    }
    Ok(format!("{compared} report files byte-identical across workers 1, 4, 4"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("replay fixed point", replay_fixed_point),
        ("rear-collision ordering", rear_collision_ordering),
        ("cascade soundness", cascade_soundness),
        ("relation oracle", relation_oracle),
        ("relation manipulation", relation_manipulation),
        ("geometry oracle", geometry_oracle),
        ("stopping kinematics", stopping_kinematics),
        ("batch determinism", batch_determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS [{}] {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
