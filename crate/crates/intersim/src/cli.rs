//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for usage errors (bad flags, unknown ids),
//! 1 for everything that fails at run time.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use intersim_core::metrics::{collisions, episode_metrics};
use intersim_core::relation::parse_relation;
use intersim_core::scenario::{
    car_following_suite, chain_suite, crossing_suite, gen_car_following, gen_chain, gen_crossing,
    ChainParams,
};
use intersim_core::{AgentId, EgoMode, OverrideRegistry, PolicyKind, ResolutionPolicy, Scenario};
use serde::Serialize;

use crate::batch::{run_batch, run_one, write_outputs, BatchConfig, PlannerChoice};
use crate::io::{load_scenario, load_scenario_dir, save_scenario};
use crate::render::render_trace;
use crate::report::{parse_policy, policy_label, write_json};
use crate::trace::Trace;

#[derive(Debug, Parser)]
#[command(name = "intersim", version, about = "Closed-loop interactive traffic simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one episode and write its trace and metrics.
    Run(RunArgs),
    /// Evaluate several policies over a scenario directory or a generated sweep.
    Batch(BatchArgs),
    /// Write synthetic scenarios.
    Gen(GenArgs),
    /// Draw a trace as one SVG per step.
    Render(RenderArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeneratorKind {
    CarFollowing,
    Crossing,
    Chain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlannerKind {
    Replay,
    Perturbed,
    Slowdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    M0,
    M1,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EgoModeArg {
    Authoritative,
    Cooperative,
}

impl From<EgoModeArg> for EgoMode {
    fn from(m: EgoModeArg) -> Self {
        match m {
            EgoModeArg::Authoritative => EgoMode::Authoritative,
            EgoModeArg::Cooperative => EgoMode::Cooperative,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GenParams {
    /// car-following: center-to-center gap, m.
    #[arg(long, default_value_t = 20.0)]
    pub gap: f64,
    #[arg(long, default_value_t = 10.0)]
    pub lead_speed: f64,
    #[arg(long, default_value_t = 10.0)]
    pub follow_speed: f64,
    /// crossing: angle between the two paths, degrees.
    #[arg(long, default_value_t = 90.0)]
    pub angle_deg: f64,
    /// crossing: seconds by which agent `a` reaches the crossing first.
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub offset: f64,
    #[arg(long, default_value_t = 10.0)]
    pub speed_a: f64,
    #[arg(long, default_value_t = 10.0)]
    pub speed_b: f64,
    /// chain: number of agents including the ego.
    #[arg(long, default_value_t = 5)]
    pub agents: usize,
    #[arg(long, default_value_t = 8.0)]
    pub speed: f64,
    #[arg(long, default_value_t = 9.0)]
    pub spacing: f64,
}

impl GenParams {
    pub fn generate(&self, kind: GeneratorKind, seed: u64) -> Scenario {
        match kind {
            GeneratorKind::CarFollowing => {
                gen_car_following(self.gap, self.lead_speed, self.follow_speed, seed)
            }
            GeneratorKind::Crossing => gen_crossing(
                self.angle_deg * PI / 180.0,
                self.offset,
                (self.speed_a, self.speed_b),
                seed,
            ),
            GeneratorKind::Chain => gen_chain(
                ChainParams {
                    agents: self.agents,
                    speed: self.speed,
                    spacing: self.spacing,
                },
                seed,
            ),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PlannerArgs {
    #[arg(long, value_enum, default_value_t = PlannerKind::Replay)]
    pub planner: PlannerKind,
    /// slowdown: deceleration, m/s^2.
    #[arg(long, default_value_t = intersim_core::planners::DEFAULT_SLOWDOWN_DECEL)]
    pub decel: f64,
    /// perturbed: lateral jitter, m.
    #[arg(long, default_value_t = intersim_core::planners::DEFAULT_LATERAL_SIGMA)]
    pub lateral_sigma: f64,
}

impl PlannerArgs {
    fn choice(&self) -> Result<PlannerChoice, CliError> {
        Ok(match self.planner {
            PlannerKind::Replay => PlannerChoice::Replay,
            PlannerKind::Perturbed => {
                if !(self.lateral_sigma >= 0.0 && self.lateral_sigma.is_finite()) {
                    return Err(CliError::Usage("--lateral-sigma must be non-negative".into()));
                }
                PlannerChoice::Perturbed {
                    lateral_sigma: self.lateral_sigma,
                }
            }
            PlannerKind::Slowdown => {
                if !(self.decel > 0.0 && self.decel.is_finite()) {
                    return Err(CliError::Usage("--decel must be positive".into()));
                }
                PlannerChoice::Slowdown { decel: self.decel }
            }
        })
    }
}

fn relation_arg(s: &str) -> Result<(AgentId, AgentId), String> {
    parse_relation(s).map_err(|e| e.to_string())
}

fn policy_list_arg(s: &str) -> Result<String, String> {
    parse_policy(s, EgoMode::default()).map(|_| s.to_string())
}

fn overrides(pairs: &[(AgentId, AgentId)]) -> Result<OverrideRegistry, CliError> {
    let mut registry = OverrideRegistry::new();
    for (influencer, reactor) in pairs {
        registry
            .insert(influencer.clone(), reactor.clone())
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(registry)
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Scenario JSON file.
    #[arg(long, conflicts_with = "generator", required_unless_present = "generator")]
    pub scenario: Option<PathBuf>,
    /// Synthetic scene instead of a file.
    #[arg(long = "gen", value_enum)]
    pub generator: Option<GeneratorKind>,
    #[command(flatten)]
    pub gen_params: GenParams,
    #[command(flatten)]
    pub planner: PlannerArgs,
    #[arg(long, value_enum, default_value_t = PolicyArg::Full)]
    pub policy: PolicyArg,
    #[arg(long, value_enum, default_value_t = EgoModeArg::Cooperative)]
    pub ego_mode: EgoModeArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Force a relation, `INFLUENCER>REACTOR`; repeatable.
    #[arg(long = "force-relation", value_parser = relation_arg)]
    pub force_relation: Vec<(AgentId, AgentId)>,
    #[arg(long, env = "INTERSIM_OUT", default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BatchArgs {
    /// Directory of scenario JSON files.
    #[arg(long, conflicts_with = "suite", required_unless_present = "suite")]
    pub dir: Option<PathBuf>,
    /// Generated sweep instead of a directory.
    #[arg(long, value_enum)]
    pub suite: Option<GeneratorKind>,
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    /// Comma-separated policies, e.g. `m0,m1,full:cooperative,full:authoritative`.
    #[arg(long, value_delimiter = ',', default_value = "m0,m1,full", value_parser = policy_list_arg)]
    pub policies: Vec<String>,
    /// Ego mode for policies given without a suffix.
    #[arg(long, value_enum, default_value_t = EgoModeArg::Cooperative)]
    pub ego_mode: EgoModeArg,
    #[command(flatten)]
    pub planner: PlannerArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: u64,
    #[arg(long = "force-relation", value_parser = relation_arg)]
    pub force_relation: Vec<(AgentId, AgentId)>,
    #[arg(long, env = "INTERSIM_OUT", default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(long = "gen", value_enum)]
    pub generator: GeneratorKind,
    #[command(flatten)]
    pub params: GenParams,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write a seeded sweep of this many scenes into the `--out` directory
    /// instead of one scene to the `--out` file.
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long, env = "INTERSIM_OUT", default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Runtime(e) => {
                // Causes already quoted by the message above them are skipped.
                let mut text = String::from("error");
                let mut last = String::new();
                for cause in e.chain() {
                    let msg = cause.to_string();
                    if !last.ends_with(&msg) {
                        text.push_str(": ");
                        text.push_str(&msg);
                    }
                    last = msg;
                }
                f.write_str(&text)
            }
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Batch(args) => cmd_batch(&args),
        Command::Gen(args) => cmd_gen(&args),
        Command::Render(args) => cmd_render(&args),
    }
}

#[derive(Serialize)]
struct RunMetrics<'a> {
    scenario_id: &'a str,
    policy: String,
    seed: u64,
    metrics: intersim_core::EpisodeMetrics,
    collisions: Vec<intersim_core::PairCollision>,
    resolutions: usize,
}

pub fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let scenario = match (&args.scenario, args.generator) {
        (Some(path), _) => load_scenario(path).map_err(anyhow::Error::from)?,
        (None, Some(kind)) => args.gen_params.generate(kind, args.seed),
        (None, None) => return Err(CliError::Usage("pass --scenario or --gen".into())),
    };
    for (a, b) in &args.force_relation {
        for id in [a, b] {
            if scenario.agent(id).is_none() {
                return Err(CliError::Usage(format!(
                    "--force-relation names `{id}`, which is not in scenario `{}`",
                    scenario.id
                )));
            }
        }
    }
    let registry = overrides(&args.force_relation)?;
    let planner = args.planner.choice()?.spec(args.seed);
    let policy = ResolutionPolicy::new(
        match args.policy {
            PolicyArg::M0 => PolicyKind::M0,
            PolicyArg::M1 => PolicyKind::M1,
            PolicyArg::Full => PolicyKind::Full,
        },
        args.ego_mode.into(),
    );
    let result = run_one(&scenario, policy, &planner, &registry, args.seed)
        .with_context(|| format!("simulating `{}`", scenario.id))?;
    let metrics = RunMetrics {
        scenario_id: &scenario.id,
        policy: policy_label(&policy),
        seed: args.seed,
        metrics: episode_metrics(&result, &scenario),
        collisions: collisions(&result, &scenario),
        resolutions: result.resolutions,
    };
    let trace = Trace::new(&scenario, planner, result);
    let trace_path = args.out.join("trace.json");
    let metrics_path = args.out.join("metrics.json");
    trace.save(&trace_path).map_err(anyhow::Error::from)?;
    write_json(&metrics, &metrics_path).map_err(anyhow::Error::from)?;
    let m = &metrics.metrics;
    println!(
        "{} {}: relevant_ratio={} ade={:.3} fde={:.3} front={} side={} rear={} progress={:.3}",
        scenario.id,
        metrics.policy,
        m.relevant_ratio,
        m.ade,
        m.fde,
        m.front_rate,
        m.side_rate,
        m.rear_rate,
        m.progress
    );
    println!("wrote {} and {}", trace_path.display(), metrics_path.display());
    Ok(())
}

fn suite(kind: GeneratorKind, seed: u64, count: usize) -> Vec<Scenario> {
    match kind {
        GeneratorKind::CarFollowing => car_following_suite(seed, count).into_iter().map(|(_, s)| s).collect(),
        GeneratorKind::Crossing => crossing_suite(seed, count, (0.2, 2.0)).into_iter().map(|(_, s)| s).collect(),
        GeneratorKind::Chain => chain_suite(seed, count).into_iter().map(|(_, s)| s).collect(),
    }
}

pub fn cmd_batch(args: &BatchArgs) -> Result<(), CliError> {
    let scenarios = match (&args.dir, args.suite) {
        (Some(dir), _) => load_scenario_dir(dir).map_err(anyhow::Error::from)?,
        (None, Some(kind)) => {
            if args.count == 0 {
                return Err(CliError::Usage("--count must be at least 1".into()));
            }
            suite(kind, args.seed, args.count)
        }
        (None, None) => return Err(CliError::Usage("pass --dir or --suite".into())),
    };
    let policies = args
        .policies
        .iter()
        .map(|p| parse_policy(p, args.ego_mode.into()).map_err(CliError::Usage))
        .collect::<Result<Vec<_>, _>>()?;
    let config = BatchConfig {
        policies,
        planner: args.planner.choice()?,
        seed: args.seed,
        workers: args.workers as usize,
        overrides: overrides(&args.force_relation)?,
    };
    let output = run_batch(&scenarios, &config).map_err(anyhow::Error::from)?;
    let files = write_outputs(&output, &args.out).map_err(anyhow::Error::from)?;
    println!("policy,episodes,{}", intersim_core::BatchReport::COLUMNS.join(","));
    for row in &output.summary {
        let values: Vec<String> = row.report.values().iter().map(|v| format!("{v:.4}")).collect();
        println!("{},{},{}", row.policy, row.report.episodes, values.join(","));
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

pub fn cmd_gen(args: &GenArgs) -> Result<(), CliError> {
    let write = |s: &Scenario, path: &Path| -> Result<(), CliError> {
        save_scenario(s, path).map_err(|e| CliError::Runtime(e.into()))
    };
    match args.count {
        None => {
            write(&args.params.generate(args.generator, args.seed), &args.out)?;
            println!("wrote {}", args.out.display());
        }
        Some(0) => return Err(CliError::Usage("--count must be at least 1".into())),
        Some(n) => {
            for s in suite(args.generator, args.seed, n) {
                write(&s, &args.out.join(format!("{}.json", s.id)))?;
            }
            println!("wrote {n} scenarios to {}", args.out.display());
        }
    }
    Ok(())
}

pub fn cmd_render(args: &RenderArgs) -> Result<(), CliError> {
    let trace = Trace::load(&args.trace).map_err(anyhow::Error::from)?;
    let files = render_trace(&trace, &args.out).map_err(anyhow::Error::from)?;
    println!("wrote {} frames to {}", files.len(), args.out.display());
    Ok(())
}
