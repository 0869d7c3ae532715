//! Command-line front end.
//!
//! The library is the product; this module is the thin shell around it for
//! shell pipelines and quick experiments. Five subcommands:
//!
//! * `run` — simulate on a built-in or file-loaded graph (or a named
//!   scenario), emit one CSV row per repetition on stdout and an optional
//!   JSONL trace.
//! * `replay` — validate a JSONL trace or re-run a scenario bundle and
//!   check its expectations.
//! * `table` — reproduce the headline measurement tables (round counts per
//!   diameter, step counts for the exponential schedule family).
//! * `explore` — exhaustively enumerate a bounded variant's configuration
//!   space and check termination and fixpoint soundness, optionally under
//!   a deliberately broken rule set.
//! * `scenario-dump` — write a scenario as a self-contained JSON bundle.
//!
//! Exit codes for `run`: 0 reached a legitimate fixpoint, 2 ran out of
//! budget or schedule, 3 the daemon proposed an invalid step, 4 terminated
//! in an illegitimate configuration. For `explore`: 0 all checks hold,
//! 1 a check failed (a cycle witness is printed when one exists), 2 the
//! space is too large to enumerate. Usage errors exit 2.
//!
//! Identical inputs (including `--seed`) produce byte-identical CSV rows;
//! the seed defaults to the `STABSIM_SEED` environment variable, then 0.

use std::fs;
use std::io::{self, BufReader, Write as _};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::mpsc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::algorithms::{random_configuration, AlgorithmSpec, Configuration, TiePolicy};
use crate::engine::{self, ExecutionTrace, Outcome};
use crate::explorer::{
    build_transition_graph, check_sinks, check_termination, longest_illegitimate_path,
    longest_path, state_space_bound, ConfigSpace, Mutation, DEFAULT_ENUMERATION_CAP,
};
use crate::scenarios::{
    run_scenario, scenario_exponential, scenario_hc_slow, scenario_sync_b_lollipop,
    scenario_sync_fhc_lollipop, scenario_sync_u_line, scenario_unbounded_line, Scenario,
    ScenarioError,
};
use crate::scheduler::DaemonStrategy;
use crate::topology::{
    build_gk, build_line, build_lollipop, parse_graph, random_connected, Graph,
};
use crate::verifier::{is_legitimate, variant_index, verify_bfs_tree, TreeVerdict};

/// Column order for the per-run CSV rows written by `run` and `replay`.
pub const RUN_CSV_HEADER: &str =
    "rep,source,algo,daemon,seed,outcome,steps,rounds,tail_steps,legitimate,tree,progress";

#[derive(Parser, Debug)]
#[command(
    name = "stabsim",
    version,
    about = "Simulation and exhaustive-checking workbench for silent BFS spanning-tree stabilization"
)]
pub struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Run the simulator and print one CSV row per repetition.
    Run(RunArgs),
    /// Re-validate a recorded trace or a scenario bundle.
    Replay(ReplayArgs),
    /// Print a measurement table as CSV.
    Table(TableArgs),
    /// Enumerate a bounded variant's whole configuration space and check it.
    Explore(ExploreArgs),
    /// Write a scenario as a self-contained JSON bundle.
    ScenarioDump(DumpArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Named scenario, e.g. `hc-slow:k=3` (see `scenario-dump --help`).
    #[arg(long, conflicts_with_all = ["graph", "graph_file", "algo", "d", "tie"])]
    scenario: Option<String>,
    /// Built-in graph: `line:N`, `lollipop:DIAM`, `gk:K`, or
    /// `random:N[,EDGE_PROB[,SEED]]`.
    #[arg(long)]
    graph: Option<String>,
    /// Graph from a text file (`root R` line plus one `U V` edge per line).
    #[arg(long, conflicts_with = "graph")]
    graph_file: Option<PathBuf>,
    /// Algorithm variant.
    #[arg(long, value_enum)]
    algo: Option<AlgoArg>,
    /// Distance cap for the bounded variants (required for b/hc/fhc).
    #[arg(long)]
    d: Option<u32>,
    /// Parent tie-breaking policy.
    #[arg(long, value_enum, default_value_t = TieArg::SmallestId)]
    tie: TieArg,
    /// Daemon flavour.
    #[arg(long, value_enum, default_value_t = DaemonArg::Synchronous)]
    daemon: DaemonArg,
    /// Per-process activation probability for the distributed daemon.
    #[arg(long, default_value_t = 0.5)]
    activation_prob: f64,
    /// Base seed (initial configuration and daemon randomness). Falls back
    /// to the STABSIM_SEED environment variable, then 0. Repetition `i`
    /// uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    /// Step budget. Defaults to the scenario's own suggestion, else to the
    /// configuration-space size when it is known and small, else 1e6.
    #[arg(long)]
    budget: Option<u64>,
    /// Number of independent repetitions.
    #[arg(long, default_value_t = 1)]
    repetitions: u32,
    /// Worker threads for repetitions (rows still print in order).
    #[arg(long, default_value_t = 1)]
    jobs: u32,
    /// Write the (first) run as a JSONL trace to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["trace", "bundle"]))]
struct ReplayArgs {
    /// JSONL trace produced by `run --trace`.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Scenario bundle produced by `scenario-dump`.
    #[arg(long)]
    bundle: Option<PathBuf>,
    /// Step budget for bundle re-runs (default: the scenario's suggestion).
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Args, Debug)]
struct TableArgs {
    /// Which table to print.
    #[arg(long, value_enum)]
    kind: TableKind,
    /// Largest diameter row for the rounds table.
    #[arg(long, default_value_t = 8)]
    max_diam: u32,
    /// Largest counter width `k` for the steps table.
    #[arg(long, default_value_t = 6)]
    max_k: u32,
}

#[derive(Args, Debug)]
struct ExploreArgs {
    /// Built-in graph: `line:N`, `lollipop:DIAM`, `gk:K`, or
    /// `random:N[,EDGE_PROB[,SEED]]`.
    #[arg(long)]
    graph: Option<String>,
    /// Graph from a text file.
    #[arg(long, conflicts_with = "graph")]
    graph_file: Option<PathBuf>,
    /// Bounded algorithm variant to enumerate.
    #[arg(long, value_enum)]
    algo: BoundedAlgoArg,
    /// Distance cap.
    #[arg(long)]
    d: u32,
    /// Deliberately broken rule set, as a negative control.
    #[arg(long, value_enum)]
    mutation: Option<MutationArg>,
    /// Refuse to enumerate spaces larger than this.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP as u64)]
    cap_configs: u64,
}

#[derive(Args, Debug)]
struct DumpArgs {
    /// Scenario to materialize. One of:
    /// `sync-u-line:diam=N` | `sync-b-lollipop:diam=N[,d=CAP]` |
    /// `sync-fhc-lollipop:diam=N` | `hc-slow:k=N` | `unbounded-line:x=N` |
    /// `exponential:k=N[,d=CAP]`.
    #[arg(long, verbatim_doc_comment)]
    scenario: String,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum AlgoArg {
    U,
    B,
    Hc,
    Fhc,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum BoundedAlgoArg {
    B,
    Hc,
    Fhc,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum TieArg {
    SmallestId,
    KeepCurrent,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum DaemonArg {
    Synchronous,
    Central,
    Distributed,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MutationArg {
    DropB3,
    WeakenB3Guard,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum TableKind {
    Rounds,
    Steps,
}

impl From<MutationArg> for Mutation {
    fn from(m: MutationArg) -> Mutation {
        match m {
            MutationArg::DropB3 => Mutation::DropB3,
            MutationArg::WeakenB3Guard => Mutation::WeakenB3Guard,
        }
    }
}

/// Anything that should abort the command with a message on stderr.
#[derive(Debug)]
pub struct CliError(String);

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CliError {}

fn err(msg: impl Into<String>) -> CliError {
    CliError(msg.into())
}

/// Library entry point for the binary: parse, dispatch, map to exit code.
pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run(a) => cmd_run(a),
        Cmd::Replay(a) => cmd_replay(a),
        Cmd::Table(a) => cmd_table(a),
        Cmd::Explore(a) => cmd_explore(a),
        Cmd::ScenarioDump(a) => cmd_dump(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("stabsim: {e}");
            ExitCode::from(2)
        }
    }
}

// ---------------------------------------------------------------------------
// Mini-syntax parsers
// ---------------------------------------------------------------------------

/// Parses the `--graph` mini-syntax into a graph.
pub fn parse_graph_spec(spec: &str) -> Result<Graph, CliError> {
    let (kind, rest) = match spec.split_once(':') {
        Some((k, r)) => (k, r),
        None => return Err(err(format!("graph `{spec}` is missing `:ARGS`"))),
    };
    let num = |s: &str, what: &str| -> Result<u32, CliError> {
        s.trim()
            .parse::<u32>()
            .map_err(|_| err(format!("graph `{spec}`: {what} must be a number, got `{s}`")))
    };
    let fail = |e: crate::topology::TopologyError| err(format!("graph `{spec}`: {e}"));
    match kind {
        "line" => build_line(num(rest, "length")?).map_err(fail),
        "lollipop" => build_lollipop(num(rest, "diameter")?).map_err(fail),
        "gk" => build_gk(num(rest, "k")?).map_err(fail),
        "random" => {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.is_empty() || parts.len() > 3 {
                return Err(err(format!(
                    "graph `{spec}`: expected `random:N[,EDGE_PROB[,SEED]]`"
                )));
            }
            let n = num(parts[0], "node count")?;
            let prob = match parts.get(1) {
                Some(s) => s.trim().parse::<f64>().map_err(|_| {
                    err(format!("graph `{spec}`: edge probability must be a number"))
                })?,
                None => 0.3,
            };
            if !(0.0..=1.0).contains(&prob) {
                return Err(err(format!(
                    "graph `{spec}`: edge probability must lie in [0, 1]"
                )));
            }
            let seed = match parts.get(2) {
                Some(s) => s
                    .trim()
                    .parse::<u64>()
                    .map_err(|_| err(format!("graph `{spec}`: seed must be a number")))?,
                None => 0,
            };
            random_connected(n, prob, seed).map_err(fail)
        }
        other => Err(err(format!(
            "unknown graph kind `{other}` (expected line, lollipop, gk, or random)"
        ))),
    }
}

/// A scenario name plus its parsed `key=value` parameters.
type NamedParams<'a> = (&'a str, Vec<(&'a str, u32)>);

/// Splits `name:k=v,k=v` into the name and its numeric parameters.
fn split_params<'a>(spec: &'a str, allowed: &[&str]) -> Result<NamedParams<'a>, CliError> {
    let (name, rest) = match spec.split_once(':') {
        Some((n, r)) => (n, r),
        None => (spec, ""),
    };
    let mut params = Vec::new();
    for piece in rest.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, v) = piece
            .split_once('=')
            .ok_or_else(|| err(format!("scenario `{spec}`: expected `key=value`, got `{piece}`")))?;
        let k = k.trim();
        if !allowed.contains(&k) {
            return Err(err(format!(
                "scenario `{spec}`: unknown parameter `{k}` (allowed: {})",
                allowed.join(", ")
            )));
        }
        let v: u32 = v
            .trim()
            .parse()
            .map_err(|_| err(format!("scenario `{spec}`: `{k}` must be a number")))?;
        params.push((k, v));
    }
    Ok((name, params))
}

fn get_param(params: &[(&str, u32)], key: &str) -> Option<u32> {
    params.iter().find(|(k, _)| *k == key).map(|&(_, v)| v)
}

/// Parses the `--scenario` mini-syntax and builds the scenario.
pub fn parse_scenario_spec(spec: &str) -> Result<Scenario, CliError> {
    let build = |r: Result<Scenario, ScenarioError>| r.map_err(|e| err(e.to_string()));
    let need = |params: &[(&str, u32)], key: &str| -> Result<u32, CliError> {
        get_param(params, key)
            .ok_or_else(|| err(format!("scenario `{spec}` needs `{key}=N`")))
    };
    let name = spec.split(':').next().unwrap_or(spec);
    match name {
        "sync-u-line" => {
            let (_, p) = split_params(spec, &["diam"])?;
            build(scenario_sync_u_line(need(&p, "diam")?))
        }
        "sync-b-lollipop" => {
            let (_, p) = split_params(spec, &["diam", "d"])?;
            let diam = need(&p, "diam")?;
            build(scenario_sync_b_lollipop(diam, get_param(&p, "d").unwrap_or(diam)))
        }
        "sync-fhc-lollipop" => {
            let (_, p) = split_params(spec, &["diam"])?;
            build(scenario_sync_fhc_lollipop(need(&p, "diam")?))
        }
        "hc-slow" => {
            let (_, p) = split_params(spec, &["k"])?;
            build(scenario_hc_slow(need(&p, "k")?))
        }
        "unbounded-line" => {
            let (_, p) = split_params(spec, &["x"])?;
            build(scenario_unbounded_line(need(&p, "x")?))
        }
        "exponential" => {
            let (_, p) = split_params(spec, &["k", "d"])?;
            let k = need(&p, "k")?;
            let d = get_param(&p, "d").unwrap_or(2 * k + 3);
            build(scenario_exponential(k, d))
        }
        other => Err(err(format!(
            "unknown scenario `{other}` (expected sync-u-line, sync-b-lollipop, \
             sync-fhc-lollipop, hc-slow, unbounded-line, or exponential)"
        ))),
    }
}

/// Resolves the seed: flag, then `STABSIM_SEED`, then 0.
fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("STABSIM_SEED") {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map_err(|_| err(format!("STABSIM_SEED must be an unsigned integer, got `{v}`"))),
        Err(_) => Ok(0),
    }
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

/// What a single repetition should execute.
enum RunSource {
    Scenario(Box<Scenario>),
    Fresh {
        graph: Graph,
        spec: AlgorithmSpec,
        label: String,
        daemon: DaemonArg,
        activation_prob: f64,
    },
}

struct RunPlan {
    source: RunSource,
    base_seed: u64,
    budget: u64,
}

/// One finished repetition, ready for printing.
struct RepOutcome {
    rep: u32,
    row: String,
    exit: u8,
    human: String,
    trace: Option<ExecutionTrace>,
}

fn load_graph(
    graph: &Option<String>,
    graph_file: &Option<PathBuf>,
) -> Result<(Graph, String), CliError> {
    match (graph, graph_file) {
        (Some(spec), None) => Ok((parse_graph_spec(spec)?, spec.clone())),
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| err(format!("cannot read {}: {e}", path.display())))?;
            let g = parse_graph(&text).map_err(|e| err(format!("{}: {e}", path.display())))?;
            Ok((g, format!("file:{}", path.display())))
        }
        _ => Err(err("exactly one of --graph / --graph-file is required")),
    }
}

fn build_spec(algo: AlgoArg, d: Option<u32>, tie: TieArg) -> Result<AlgorithmSpec, CliError> {
    let spec = match (algo, d) {
        (AlgoArg::U, None) => AlgorithmSpec::unbounded(),
        (AlgoArg::U, Some(_)) => {
            return Err(err("the unbounded variant takes no --d"));
        }
        (_, None) => return Err(err("--d is required for the bounded variants")),
        (_, Some(0)) => return Err(err("--d must be at least 1")),
        (AlgoArg::B, Some(d)) => AlgorithmSpec::bounded(d),
        (AlgoArg::Hc, Some(d)) => AlgorithmSpec::hc(d),
        (AlgoArg::Fhc, Some(d)) => AlgorithmSpec::fhc(d),
    };
    Ok(match tie {
        TieArg::SmallestId => spec,
        TieArg::KeepCurrent => spec.with_tie_policy(TiePolicy::KeepCurrentIfMinimal),
    })
}

impl DaemonArg {
    fn build(self, seed: u64, activation_prob: f64) -> DaemonStrategy {
        match self {
            DaemonArg::Synchronous => DaemonStrategy::synchronous(),
            DaemonArg::Central => DaemonStrategy::central(seed),
            DaemonArg::Distributed => DaemonStrategy::distributed(seed, activation_prob),
        }
    }
}

fn daemon_label(strategy: &DaemonStrategy) -> String {
    match strategy {
        DaemonStrategy::Synchronous { .. } => "synchronous".into(),
        DaemonStrategy::CentralRandom { .. } => "central".into(),
        DaemonStrategy::DistributedRandom {
            activation_prob, ..
        } => format!("distributed:{activation_prob}"),
        DaemonStrategy::Scripted { .. } => "scripted".into(),
        DaemonStrategy::Priority { .. } => "priority".into(),
    }
}

fn outcome_label(outcome: &Outcome) -> String {
    match outcome {
        Outcome::Terminal => "terminal".into(),
        Outcome::StepBudgetExceeded => "budget-exceeded".into(),
        Outcome::ScheduleViolation { step, .. } => format!("violation@{step}"),
        Outcome::ScheduleExhausted { step } => format!("exhausted@{step}"),
    }
}

fn tree_label(verdict: &TreeVerdict) -> &'static str {
    match verdict {
        TreeVerdict::Valid => "valid",
        TreeVerdict::Cycle { .. } => "cycle",
        TreeVerdict::NotSpanning { .. } => "not-spanning",
        TreeVerdict::NotShortest { .. } => "not-shortest",
    }
}

/// Exit severity of one run; `worse` merges repetitions (a schedule
/// violation outranks a wrong fixpoint outranks an exhausted budget).
fn run_exit_code(outcome: &Outcome, legitimate: bool) -> u8 {
    match outcome {
        Outcome::Terminal => {
            if legitimate {
                0
            } else {
                4
            }
        }
        Outcome::StepBudgetExceeded | Outcome::ScheduleExhausted { .. } => 2,
        Outcome::ScheduleViolation { .. } => 3,
    }
}

fn worse(a: u8, b: u8) -> u8 {
    let rank = |c: u8| match c {
        3 => 3u8,
        4 => 2,
        2 => 1,
        _ => 0,
    };
    if rank(b) > rank(a) {
        b
    } else {
        a
    }
}

/// CSV fields must not smuggle in the separator.
fn csv_field(s: &str) -> String {
    s.replace(',', ";").replace('\n', " ")
}

/// Distance-sampling cap for the unbounded variant's random starts.
fn unbounded_sample_cap(g: &Graph) -> u32 {
    (3 * g.diameter()).max(1)
}

fn default_budget(spec: &AlgorithmSpec, g: &Graph) -> u64 {
    match state_space_bound(spec, g) {
        Ok(bound) if bound + 2 <= 1_000_000_000 => bound as u64 + 2,
        _ => 1_000_000,
    }
}

fn run_one(plan: &RunPlan, rep: u32) -> RepOutcome {
    let seed = plan.base_seed.wrapping_add(u64::from(rep));
    let (spec, graph, strategy, init, label, sync_tail) = match &plan.source {
        RunSource::Scenario(sc) => (
            sc.spec,
            &sc.graph,
            sc.strategy.clone(),
            sc.init.clone(),
            sc.name.clone(),
            sc.sync_tail,
        ),
        RunSource::Fresh {
            graph,
            spec,
            label,
            daemon,
            activation_prob,
        } => {
            let init =
                random_configuration(spec, graph, seed, Some(unbounded_sample_cap(graph)))
                    .expect("sampling caps are validated before running");
            (
                *spec,
                graph,
                daemon.build(seed, *activation_prob),
                init,
                label.clone(),
                false,
            )
        }
    };
    let trace = engine::run(&spec, graph, &strategy, &init, plan.budget);
    let tail = match (&trace.outcome, sync_tail) {
        (Outcome::ScheduleExhausted { .. }, true) => Some(engine::run(
            &spec,
            graph,
            &DaemonStrategy::synchronous(),
            &trace.final_config,
            8 * u64::from(graph.diameter() + 2) + 64,
        )),
        _ => None,
    };
    let final_conf: &Configuration = tail
        .as_ref()
        .map_or(&trace.final_config, |t| &t.final_config);
    let final_outcome = tail.as_ref().map_or(&trace.outcome, |t| &t.outcome);
    let legitimate = is_legitimate(graph, final_conf);
    let verdict = verify_bfs_tree(graph, final_conf);
    let progress = variant_index(spec.variant, graph, final_conf);
    let row = format!(
        "{rep},{},{},{},{seed},{},{},{},{},{},{},{progress}",
        csv_field(&label),
        csv_field(&spec.tag()),
        csv_field(&daemon_label(&strategy)),
        csv_field(&outcome_label(final_outcome)),
        trace.step_count,
        trace.round_count,
        tail.as_ref().map_or(0, |t| t.step_count),
        if legitimate { "yes" } else { "no" },
        tree_label(&verdict),
    );
    RepOutcome {
        rep,
        exit: run_exit_code(final_outcome, legitimate),
        human: trace.summary(),
        row,
        trace: Some(trace),
    }
}

fn cmd_run(args: RunArgs) -> Result<u8, CliError> {
    if args.repetitions == 0 {
        return Err(err("--repetitions must be at least 1"));
    }
    if args.jobs == 0 {
        return Err(err("--jobs must be at least 1"));
    }
    if args.trace.is_some() && args.repetitions != 1 {
        return Err(err("--trace requires --repetitions 1"));
    }
    if !(args.activation_prob > 0.0 && args.activation_prob <= 1.0) {
        return Err(err("--activation-prob must lie in (0, 1]"));
    }
    let base_seed = resolve_seed(args.seed)?;
    let (source, budget) = match &args.scenario {
        Some(spec) => {
            let sc = parse_scenario_spec(spec)?;
            let budget = args.budget.unwrap_or_else(|| sc.suggested_budget());
            (RunSource::Scenario(Box::new(sc)), budget)
        }
        None => {
            let (graph, label) = load_graph(&args.graph, &args.graph_file)?;
            let algo = args
                .algo
                .ok_or_else(|| err("--algo is required unless --scenario is given"))?;
            let spec = build_spec(algo, args.d, args.tie)?;
            let budget = args.budget.unwrap_or_else(|| default_budget(&spec, &graph));
            (
                RunSource::Fresh {
                    graph,
                    spec,
                    label,
                    daemon: args.daemon,
                    activation_prob: args.activation_prob,
                },
                budget,
            )
        }
    };
    let plan = RunPlan {
        source,
        base_seed,
        budget,
    };

    let reps = args.repetitions;
    let mut results: Vec<RepOutcome> = if args.jobs <= 1 || reps == 1 {
        (0..reps).map(|i| run_one(&plan, i)).collect()
    } else {
        let jobs = args.jobs.min(reps);
        let plan_ref = &plan;
        let mut collected = Vec::with_capacity(reps as usize);
        std::thread::scope(|scope| {
            let (tx, rx) = mpsc::channel::<RepOutcome>();
            for w in 0..jobs {
                let tx = tx.clone();
                scope.spawn(move || {
                    for i in (w..reps).step_by(jobs as usize) {
                        if tx.send(run_one(plan_ref, i)).is_err() {
                            return;
                        }
                    }
                });
            }
            drop(tx);
            while let Ok(r) = rx.recv() {
                collected.push(r);
            }
        });
        collected.sort_by_key(|r| r.rep);
        collected
    };

    let stdout = io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "{RUN_CSV_HEADER}").map_err(|e| err(e.to_string()))?;
    let mut exit = 0u8;
    for r in &results {
        writeln!(out, "{}", r.row).map_err(|e| err(e.to_string()))?;
        exit = worse(exit, r.exit);
    }
    drop(out);
    if reps == 1 {
        eprintln!("{}", results[0].human);
    } else {
        let ok = results.iter().filter(|r| r.exit == 0).count();
        eprintln!("{ok}/{reps} repetitions reached a legitimate fixpoint");
    }
    if let Some(path) = &args.trace {
        let trace = results[0]
            .trace
            .take()
            .expect("single repetition keeps its trace");
        let file = fs::File::create(path)
            .map_err(|e| err(format!("cannot create {}: {e}", path.display())))?;
        engine::write_jsonl(&trace, io::BufWriter::new(file))
            .map_err(|e| err(format!("cannot write {}: {e}", path.display())))?;
        eprintln!("trace written to {}", path.display());
    }
    Ok(exit)
}

// ---------------------------------------------------------------------------
// replay
// ---------------------------------------------------------------------------

fn scenario_error_exit(e: &ScenarioError) -> u8 {
    match e {
        ScenarioError::CountMismatch { .. } => 1,
        ScenarioError::DidNotTerminate { .. } => 2,
        ScenarioError::Replay { .. } => 3,
        ScenarioError::WrongFixpoint { .. } => 4,
        _ => 2,
    }
}

fn cmd_replay(args: ReplayArgs) -> Result<u8, CliError> {
    if let Some(path) = &args.trace {
        let file = fs::File::open(path)
            .map_err(|e| err(format!("cannot read {}: {e}", path.display())))?;
        let trace = engine::read_jsonl(BufReader::new(file))
            .map_err(|e| err(format!("{}: {e}", path.display())))?;
        return match engine::replay(&trace) {
            Ok(()) => {
                println!(
                    "ok: {} steps / {} rounds, outcome {}",
                    trace.step_count,
                    trace.round_count,
                    outcome_label(&trace.outcome)
                );
                eprintln!("{}", trace.summary());
                Ok(0)
            }
            Err(e) => {
                eprintln!("replay mismatch: {e}");
                Ok(3)
            }
        };
    }
    let path = args.bundle.as_ref().expect("clap enforces the source group");
    let text = fs::read_to_string(path)
        .map_err(|e| err(format!("cannot read {}: {e}", path.display())))?;
    let sc: Scenario = serde_json::from_str(&text)
        .map_err(|e| err(format!("{} is not a scenario bundle: {e}", path.display())))?;
    let budget = args.budget.unwrap_or_else(|| sc.suggested_budget());
    match run_scenario(&sc, budget) {
        Ok(run) => {
            println!(
                "ok: scenario `{}` held: {} steps / {} rounds (tail {} steps)",
                sc.name,
                run.trace.step_count,
                run.trace.round_count,
                run.tail.as_ref().map_or(0, |t| t.step_count)
            );
            Ok(0)
        }
        Err(e) => {
            eprintln!("scenario failed: {e}");
            Ok(scenario_error_exit(&e))
        }
    }
}

// ---------------------------------------------------------------------------
// table
// ---------------------------------------------------------------------------

fn measured_rounds(sc: Result<Scenario, ScenarioError>) -> Result<u64, CliError> {
    let sc = sc.map_err(|e| err(e.to_string()))?;
    let run = run_scenario(&sc, sc.suggested_budget()).map_err(|e| err(e.to_string()))?;
    Ok(run.trace.round_count)
}

fn cmd_table(args: TableArgs) -> Result<u8, CliError> {
    match args.kind {
        TableKind::Rounds => {
            if args.max_diam < 2 {
                return Err(err("--max-diam must be at least 2"));
            }
            println!("diam,u,b,fhc,hc_slow");
            for diam in 2..=args.max_diam {
                let u = measured_rounds(scenario_sync_u_line(diam))?;
                let b = measured_rounds(scenario_sync_b_lollipop(diam, diam))?;
                let fhc = measured_rounds(scenario_sync_fhc_lollipop(diam))?;
                // The slow family lives on the fixed three-node line
                // (diameter 2); other rows have no matching instance.
                let slow = if diam == 2 {
                    measured_rounds(scenario_hc_slow(1))?.to_string()
                } else {
                    "—".to_string()
                };
                println!("{diam},{u},{b},{fhc},{slow}");
            }
        }
        TableKind::Steps => {
            if args.max_k < 1 {
                return Err(err("--max-k must be at least 1"));
            }
            println!("k,steps,lower_bound");
            for k in 1..=args.max_k {
                let sc = scenario_exponential(k, 2 * k + 3).map_err(|e| err(e.to_string()))?;
                let trace = engine::run(
                    &sc.spec,
                    &sc.graph,
                    &sc.strategy,
                    &sc.init,
                    sc.suggested_budget(),
                );
                let bound = u64::from(2 * k + 2) * ((1u64 << k) - 1);
                println!("{k},{},{bound}", trace.step_count);
            }
        }
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// explore
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ExploreJson {
    graph: String,
    algo: String,
    mutation: Option<Mutation>,
    config_count: u64,
    acyclic: bool,
    cycle_length: Option<usize>,
    sink_count: u64,
    legitimate_count: u64,
    sinks_match_legitimate: bool,
    longest_path: Option<u64>,
    stabilization_path: Option<u64>,
    stabilization_bound: u64,
}

fn render_config(g: &Graph, conf: &Configuration) -> String {
    let d: Vec<String> = g.nodes().map(|p| conf.d[p.index()].to_string()).collect();
    let par: Vec<String> = g
        .nodes()
        .map(|p| conf.par[p.index()].map_or("-".into(), |q| q.0.to_string()))
        .collect();
    format!("d=[{}] par=[{}]", d.join(" "), par.join(" "))
}

fn cmd_explore(args: ExploreArgs) -> Result<u8, CliError> {
    let (graph, label) = load_graph(&args.graph, &args.graph_file)?;
    if args.d == 0 {
        return Err(err("--d must be at least 1"));
    }
    let spec = match args.algo {
        BoundedAlgoArg::B => AlgorithmSpec::bounded(args.d),
        BoundedAlgoArg::Hc => AlgorithmSpec::hc(args.d),
        BoundedAlgoArg::Fhc => AlgorithmSpec::fhc(args.d),
    };
    let space = match ConfigSpace::new(&spec, &graph) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("explore: {e}");
            return Ok(2);
        }
    };
    if let Err(e) = space.require_enumerable(u128::from(args.cap_configs)) {
        eprintln!("explore: {e}");
        return Ok(2);
    }
    let mutation = args.mutation.map(Mutation::from);
    let tg = match build_transition_graph(&space, mutation) {
        Ok(tg) => tg,
        Err(e) => {
            eprintln!("explore: {e}");
            return Ok(2);
        }
    };
    let term = check_termination(&tg);
    let sinks = check_sinks(&space, &tg);
    let (longest, stab) = if term.acyclic {
        (
            longest_path(&tg).ok(),
            longest_illegitimate_path(&space, &tg).ok(),
        )
    } else {
        (None, None)
    };
    let bound = state_space_bound(&spec, &graph).map_err(|e| err(e.to_string()))?;
    let report = ExploreJson {
        graph: label,
        algo: spec.tag(),
        mutation,
        config_count: space.count() as u64,
        acyclic: term.acyclic,
        cycle_length: term.cycle.as_ref().map(Vec::len),
        sink_count: sinks.sink_count,
        legitimate_count: sinks.legitimate_count,
        sinks_match_legitimate: sinks.equal,
        longest_path: longest,
        stabilization_path: stab,
        stabilization_bound: bound as u64,
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&report).map_err(|e| err(e.to_string()))?
    );
    if let Some(cycle) = &term.cycle {
        eprintln!("cycle witness ({} configuration(s)):", cycle.len());
        for &idx in cycle {
            eprintln!("  #{idx}: {}", render_config(&graph, &space.config_at(u128::from(idx))));
        }
    }
    for &idx in &sinks.spurious_sinks {
        eprintln!(
            "spurious sink #{idx}: {}",
            render_config(&graph, &space.config_at(u128::from(idx)))
        );
    }
    for &idx in &sinks.live_legitimate {
        eprintln!(
            "legitimate but live #{idx}: {}",
            render_config(&graph, &space.config_at(u128::from(idx)))
        );
    }
    Ok(if term.acyclic && sinks.equal { 0 } else { 1 })
}

// ---------------------------------------------------------------------------
// scenario-dump
// ---------------------------------------------------------------------------

fn cmd_dump(args: DumpArgs) -> Result<u8, CliError> {
    let sc = parse_scenario_spec(&args.scenario)?;
    let json = serde_json::to_string_pretty(&sc).map_err(|e| err(e.to_string()))?;
    match &args.out {
        Some(path) => {
            fs::write(path, json + "\n")
                .map_err(|e| err(format!("cannot write {}: {e}", path.display())))?;
            eprintln!("scenario `{}` written to {}", sc.name, path.display());
        }
        None => println!("{json}"),
    }
    Ok(0)
}
