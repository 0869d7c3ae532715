//! Packaged worst-case and lower-bound constructions.
//!
//! Each scenario bundles a graph, an algorithm, an initial configuration,
//! a daemon strategy, and the exact step/round counts the construction is
//! supposed to realize. [`run_scenario`] executes the bundle, replays the
//! trace through the independent checker, matches the measured counts
//! against the expectation, and — for scripted prefixes that stop short
//! of a fixpoint — finishes the run synchronously and verifies the final
//! tree. The constructions:
//!
//! - [`scenario_sync_u_line`], [`scenario_sync_b_lollipop`]: synchronous
//!   executions taking exactly `diameter` rounds — the round lower bound
//!   for the unbounded and capped two-rule variants.
//! - [`scenario_sync_fhc_lollipop`]: `diameter + 1` rounds for the
//!   restricted height-chasing variant, one worse than its siblings.
//! - [`scenario_hc_slow`]: a three-node schedule forcing the unrestricted
//!   height-chasing variant to `k + 1` rounds and `2k` steps with cap
//!   `2k` — rounds grow with the cap, not the topology.
//! - [`scenario_unbounded_line`]: five nodes, `x + 1` scripted steps for
//!   any `x`, while the round counter never advances — step complexity of
//!   the unbounded variant is not a function of the topology.
//! - [`scenario_exponential`]: the layered-family schedule of
//!   `(2k+2)(2^k − 1)` neighborhood-minimum chasing steps on `4k + 3`
//!   nodes — exponential in the diameter.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

use crate::algorithms::{d_ok, AlgorithmSpec, Configuration, RuleId};
use crate::engine::{apply_step, replay, run, ExecutionTrace, Outcome, ReplayError, ViolationKind};
use crate::scheduler::{DaemonStrategy, Move};
use crate::topology::{build_gk, build_line, build_lollipop, GkLayout, Graph, NodeId};
use crate::verifier::{in_conf_class, is_legitimate, verify_bfs_tree, ConfClass, TreeVerdict};

/// Requirement on a measured count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountReq {
    Exact(u64),
    AtLeast(u64),
}

impl CountReq {
    pub fn admits(self, actual: u64) -> bool {
        match self {
            CountReq::Exact(want) => actual == want,
            CountReq::AtLeast(want) => actual >= want,
        }
    }

    /// The smallest count satisfying the requirement.
    pub fn floor(self) -> u64 {
        match self {
            CountReq::Exact(v) | CountReq::AtLeast(v) => v,
        }
    }
}

impl fmt::Display for CountReq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CountReq::Exact(v) => write!(f, "exactly {v}"),
            CountReq::AtLeast(v) => write!(f, "at least {v}"),
        }
    }
}

/// Step and round counts a scenario's primary run must realize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expected {
    pub rounds: CountReq,
    pub steps: CountReq,
}

/// A self-contained, serializable execution recipe.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub spec: AlgorithmSpec,
    pub graph: Graph,
    pub init: Configuration,
    pub strategy: DaemonStrategy,
    pub expected: Expected,
    /// When the strategy is a finite script that leaves the system short
    /// of a fixpoint, finish synchronously and verify the final tree.
    pub sync_tail: bool,
}

impl Scenario {
    /// A step budget comfortably above the expected counts, usable as a
    /// default for [`run_scenario`].
    pub fn suggested_budget(&self) -> u64 {
        let diam = self.graph.diameter() as u64;
        self.expected.steps.floor() + 8 * (diam + 2) + 64
    }
}

/// Everything a validated scenario run produced.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    /// The primary run under the scenario's own strategy.
    pub trace: ExecutionTrace,
    /// The synchronous completion, when the scenario asked for one and
    /// the primary run stopped short of a fixpoint.
    pub tail: Option<ExecutionTrace>,
}

impl ScenarioRun {
    pub fn final_config(&self) -> &Configuration {
        self.tail
            .as_ref()
            .map_or(&self.trace.final_config, |t| &t.final_config)
    }

    pub fn total_steps(&self) -> u64 {
        self.trace.step_count + self.tail.as_ref().map_or(0, |t| t.step_count)
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario `{name}`: {what}")]
    Invalid { name: String, what: String },
    #[error("scenario `{name}`: expected {which} {want}, measured {got}")]
    CountMismatch {
        name: String,
        which: &'static str,
        want: CountReq,
        got: u64,
    },
    #[error("scenario `{name}`: run ended with {outcome:?} before reaching a fixpoint")]
    DidNotTerminate { name: String, outcome: Outcome },
    #[error("scenario `{name}`: final configuration is not the shortest-path tree: {verdict:?}")]
    WrongFixpoint {
        name: String,
        verdict: TreeVerdict,
    },
    #[error("scenario `{name}`: trace failed independent replay: {source}")]
    Replay {
        name: String,
        source: ReplayError,
    },
    #[error("schedule construction failed at (level={level}, v={v}, z={z}): {reason}")]
    PhaseFailure {
        level: u32,
        v: u32,
        z: u32,
        reason: String,
    },
    #[error("mapped move rejected at step {step}: {kind}")]
    MappedStep { step: u64, kind: ViolationKind },
}

fn invalid(name: &str, what: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        name: name.into(),
        what: what.into(),
    }
}

/// Executes a scenario and checks everything it promises: the recorded
/// trace survives independent replay, measured steps and rounds match the
/// expectation, and the run (extended synchronously when `sync_tail` is
/// set) ends in the legitimate configuration with a valid shortest-path
/// tree.
pub fn run_scenario(sc: &Scenario, budget: u64) -> Result<ScenarioRun, ScenarioError> {
    let name = sc.name.clone();
    let trace = run(&sc.spec, &sc.graph, &sc.strategy, &sc.init, budget);
    replay(&trace).map_err(|source| ScenarioError::Replay {
        name: name.clone(),
        source,
    })?;
    if !sc.expected.steps.admits(trace.step_count) {
        return Err(ScenarioError::CountMismatch {
            name,
            which: "steps",
            want: sc.expected.steps,
            got: trace.step_count,
        });
    }
    if !sc.expected.rounds.admits(trace.round_count) {
        return Err(ScenarioError::CountMismatch {
            name,
            which: "rounds",
            want: sc.expected.rounds,
            got: trace.round_count,
        });
    }
    let tail = match trace.outcome {
        Outcome::Terminal => None,
        Outcome::ScheduleExhausted { .. } if sc.sync_tail => {
            let tail = run(
                &sc.spec,
                &sc.graph,
                &DaemonStrategy::synchronous(),
                &trace.final_config,
                budget,
            );
            if tail.outcome != Outcome::Terminal {
                return Err(ScenarioError::DidNotTerminate {
                    name,
                    outcome: tail.outcome,
                });
            }
            Some(tail)
        }
        ref outcome => {
            return Err(ScenarioError::DidNotTerminate {
                name,
                outcome: outcome.clone(),
            })
        }
    };
    let run_result = ScenarioRun { tail, trace };
    let final_config = run_result.final_config();
    let verdict = verify_bfs_tree(&sc.graph, final_config);
    if verdict != TreeVerdict::Valid || !is_legitimate(&sc.graph, final_config) {
        return Err(ScenarioError::WrongFixpoint { name, verdict });
    }
    Ok(run_result)
}

// ---------------------------------------------------------------------------
// Synchronous round lower bounds
// ---------------------------------------------------------------------------

/// Synchronous worst case for the unbounded variant on a line of
/// `diam + 1` nodes: every process starts at `diam + 1`, and correct
/// distances sweep outward one hop per round — exactly `diam` rounds.
pub fn scenario_sync_u_line(diam: u32) -> Result<Scenario, ScenarioError> {
    const NAME: &str = "sync-u-line";
    if diam < 1 {
        return Err(invalid(NAME, "diameter must be at least 1"));
    }
    let graph = build_line(diam).map_err(|e| invalid(NAME, e.to_string()))?;
    let init = chain_init(&graph, |_| diam + 1);
    Ok(Scenario {
        name: NAME.into(),
        spec: AlgorithmSpec::unbounded(),
        graph,
        init,
        strategy: DaemonStrategy::synchronous(),
        expected: Expected {
            rounds: CountReq::Exact(diam as u64),
            steps: CountReq::Exact(diam as u64),
        },
        sync_tail: false,
    })
}

/// Synchronous worst case for the capped two-rule variant on a lollipop
/// graph: all distances start at the cap, the far pair points at each
/// other, and stabilization takes exactly `diam` rounds for any cap
/// `d_cap >= diam`.
pub fn scenario_sync_b_lollipop(diam: u32, d_cap: u32) -> Result<Scenario, ScenarioError> {
    const NAME: &str = "sync-b-lollipop";
    if diam < 2 {
        return Err(invalid(NAME, "diameter must be at least 2"));
    }
    if d_cap < diam {
        return Err(invalid(NAME, "cap must be at least the diameter"));
    }
    let graph = build_lollipop(diam).map_err(|e| invalid(NAME, e.to_string()))?;
    let far = NodeId(diam);
    let farther = NodeId(diam + 1);
    let mut init = chain_init(&graph, |_| d_cap);
    init.par[far.index()] = Some(farther);
    init.par[farther.index()] = Some(far);
    Ok(Scenario {
        name: NAME.into(),
        spec: AlgorithmSpec::bounded(d_cap),
        graph,
        init,
        strategy: DaemonStrategy::synchronous(),
        expected: Expected {
            rounds: CountReq::Exact(diam as u64),
            steps: CountReq::Exact(diam as u64),
        },
        sync_tail: false,
    })
}

/// Synchronous worst case for the restricted height-chasing variant on a
/// lollipop graph with cap `diam`: the far pair leans on the chord so
/// that correction costs one extra round — `diam + 1` in total.
pub fn scenario_sync_fhc_lollipop(diam: u32) -> Result<Scenario, ScenarioError> {
    const NAME: &str = "sync-fhc-lollipop";
    if diam < 2 {
        return Err(invalid(NAME, "diameter must be at least 2"));
    }
    let graph = build_lollipop(diam).map_err(|e| invalid(NAME, e.to_string()))?;
    let far = NodeId(diam);
    let farther = NodeId(diam + 1);
    let before = NodeId(diam - 1);
    let mut init = chain_init(&graph, |_| diam);
    init.d[farther.index()] = diam - 1;
    init.par[before.index()] = Some(farther);
    init.par[far.index()] = Some(farther);
    init.par[farther.index()] = Some(before);
    Ok(Scenario {
        name: NAME.into(),
        spec: AlgorithmSpec::fhc(diam),
        graph,
        init,
        strategy: DaemonStrategy::synchronous(),
        expected: Expected {
            rounds: CountReq::Exact(diam as u64 + 1),
            steps: CountReq::Exact(diam as u64 + 1),
        },
        sync_tail: false,
    })
}

/// Distance `value(i)` on every chain process `p_i`, parents along the
/// chain (`p_i` at `p_{i-1}`).
fn chain_init(g: &Graph, value: impl Fn(u32) -> u32) -> Configuration {
    Configuration::build(g, |p| value(p.0), |p| NodeId(p.0 - 1))
}

// ---------------------------------------------------------------------------
// Height-chasing slow schedule
// ---------------------------------------------------------------------------

/// The cap-dependent lower bound for unrestricted height chasing: on the
/// three-node line with cap `2k`, a schedule of `2k` singleton steps
/// spends `k + 1` rounds — `k - 1` rounds chasing heights upward two
/// steps at a time, one round to collapse via the neighborhood minimum,
/// and one round to reattach the far process.
pub fn scenario_hc_slow(k: u32) -> Result<Scenario, ScenarioError> {
    const NAME: &str = "hc-slow";
    if k < 1 {
        return Err(invalid(NAME, "k must be at least 1"));
    }
    let graph = build_line(2).map_err(|e| invalid(NAME, e.to_string()))?;
    let a = NodeId(1);
    let b = NodeId(2);
    // For k = 1 the cap (2) blocks the far process immediately, which
    // forces the lower starting height; from k >= 2 both rules start
    // enabled at the near process.
    let init = Configuration {
        d: vec![0, 2, if k == 1 { 1 } else { 2 }],
        par: vec![None, Some(b), Some(a)],
    };
    let mut schedule: Vec<Vec<Move>> = Vec::with_capacity(2 * k as usize);
    for _ in 1..k {
        schedule.push(vec![Move::new(b, RuleId::HC1)]);
        schedule.push(vec![Move::new(a, RuleId::HC1)]);
    }
    schedule.push(vec![Move::new(a, RuleId::HC2)]);
    schedule.push(vec![Move::new(b, RuleId::HC1)]);
    Ok(Scenario {
        name: NAME.into(),
        spec: AlgorithmSpec::hc(2 * k),
        graph,
        init,
        strategy: DaemonStrategy::scripted(schedule),
        expected: Expected {
            rounds: CountReq::Exact(k as u64 + 1),
            steps: CountReq::Exact(2 * k as u64),
        },
        sync_tail: false,
    })
}

// ---------------------------------------------------------------------------
// Unbounded step blow-up
// ---------------------------------------------------------------------------

/// Steps beyond any topological bound for the unbounded variant: on a
/// five-node line with two interior processes seeded at 1 between walls
/// at `x`, alternating singleton activations drag both interior
/// distances up to `x + 1` — `x + 1` steps on a diameter-4 graph, while
/// the walls stay pending and the round counter never advances.
pub fn scenario_unbounded_line(x: u32) -> Result<Scenario, ScenarioError> {
    const NAME: &str = "unbounded-line";
    if x < 5 {
        return Err(invalid(NAME, "x must be at least 5"));
    }
    let graph = build_line(4).map_err(|e| invalid(NAME, e.to_string()))?;
    let init = chain_init(&graph, |i| match i {
        1 | 4 => x,
        _ => 1,
    });
    let p2 = NodeId(2);
    let p3 = NodeId(3);
    let schedule: Vec<Vec<Move>> = (0..=x as usize)
        .map(|s| vec![Move::new(if s % 2 == 0 { p2 } else { p3 }, RuleId::U1)])
        .collect();
    Ok(Scenario {
        name: NAME.into(),
        spec: AlgorithmSpec::unbounded(),
        graph,
        init,
        strategy: DaemonStrategy::scripted(schedule),
        expected: Expected {
            rounds: CountReq::Exact(0),
            steps: CountReq::Exact(x as u64 + 1),
        },
        sync_tail: true,
    })
}

// ---------------------------------------------------------------------------
// Exponential step schedule on the layered family
// ---------------------------------------------------------------------------

/// The canonical start of the exponential drive on a layered-family
/// graph: every pump process `e.j` at 1 pointing into its mirror `f.j`,
/// every mirror and `f.0` saturated at `z` hanging off its anchor, every
/// anchor (`g.j`, `h.j`, `h.0`) at `z - 1` parented toward the root
/// side.
pub fn exponential_start(g: &Graph, layout: &GkLayout, z: u32) -> Configuration {
    let mut conf = Configuration {
        d: vec![0; g.node_count()],
        par: vec![None; g.node_count()],
    };
    let mut set = |p: NodeId, d: u32, par: NodeId| {
        conf.d[p.index()] = d;
        conf.par[p.index()] = Some(par);
    };
    set(layout.h0, z - 1, layout.root);
    set(layout.f0, z, layout.h0);
    for j in 1..=layout.k {
        set(layout.e(j), 1, layout.f(j));
        set(layout.f(j), z, layout.h(j));
        set(layout.g(j), z - 1, layout.e(j));
        set(layout.h(j), z - 1, layout.f(j));
    }
    conf
}

/// State of the level-`level` counter while generating drive steps.
struct DriveGen<'a> {
    layout: &'a GkLayout,
    z: u32,
    schedule: Vec<Vec<Move>>,
}

impl DriveGen<'_> {
    fn push(&mut self, moves: &[(NodeId, RuleId)]) {
        self.schedule
            .push(moves.iter().map(|&(p, r)| Move::new(p, r)).collect());
    }

    /// Full drive of `level` from counter `v` up to saturation at `z`.
    fn drive(&mut self, level: u32, mut v: u32) -> Result<(), ScenarioError> {
        while v < self.z {
            v = self.unit(level, v)?;
        }
        Ok(())
    }

    /// One counter-advancing unit from value `v`; returns the new value
    /// `min(v + 2, z)`.
    fn unit(&mut self, level: u32, v: u32) -> Result<u32, ScenarioError> {
        let z = self.z;
        let fail = |reason: &str| ScenarioError::PhaseFailure {
            level,
            v,
            z,
            reason: reason.into(),
        };
        if !(1..z).contains(&v) {
            return Err(fail("counter out of range"));
        }
        if level == 1 {
            let (e1, f0) = (self.layout.e(1), self.layout.f0);
            // Alternating two-process steps advance the counter by one,
            // trading which of e.1 / f.0 holds it; the final hop to `z`
            // is a singleton because the resting process reads the
            // neighborhood minimum from its anchor.
            let mut w = v;
            let mut counter_on_f0 = false; // class c: counter on e.1
            for _ in 0..2 {
                if w == z - 1 {
                    self.push(&[(if counter_on_f0 { f0 } else { e1 }, RuleId::HC2)]);
                    return Ok(z);
                }
                self.push(&[(e1, RuleId::HC2), (f0, RuleId::HC2)]);
                w += 1;
                counter_on_f0 = !counter_on_f0;
            }
            Ok(w)
        } else {
            if !(z - v).is_multiple_of(2) || v > z - 2 {
                return Err(fail("counter must approach z in full units"));
            }
            let e_top = self.layout.e(level);
            let e_low = self.layout.e(level - 1);
            let f_low = self.layout.f(level - 1);
            self.push(&[(e_top, RuleId::HC2), (f_low, RuleId::HC2)]);
            if v == z - 2 {
                // Boundary: the lower pump and the top pump both read
                // the minimum from their anchors, so only the mirror
                // moves.
                self.push(&[(f_low, RuleId::HC2)]);
            } else {
                self.push(&[
                    (e_top, RuleId::HC2),
                    (e_low, RuleId::HC2),
                    (f_low, RuleId::HC2),
                ]);
                // The triple step spent the whole lower level's
                // saturation; rebuild it before the next unit.
                self.drive(level - 1, v + 2)?;
            }
            Ok(v + 2)
        }
    }
}

/// Appends one counter-advancing unit of the level-`level` drive
/// (starting from a class-c configuration with counter `v`) to
/// `schedule`; returns the counter after the unit, `min(v + 2, z)`.
pub fn exec_phase_unit(
    schedule: &mut Vec<Vec<Move>>,
    layout: &GkLayout,
    level: u32,
    v: u32,
    z: u32,
) -> Result<u32, ScenarioError> {
    let mut gen = DriveGen {
        layout,
        z,
        schedule: std::mem::take(schedule),
    };
    let result = gen.unit(level, v);
    *schedule = gen.schedule;
    result
}

/// Appends the full level-`level` drive from counter `v` to saturation
/// at `z`.
pub fn exec_phase(
    schedule: &mut Vec<Vec<Move>>,
    layout: &GkLayout,
    level: u32,
    v: u32,
    z: u32,
) -> Result<(), ScenarioError> {
    let mut gen = DriveGen {
        layout,
        z,
        schedule: std::mem::take(schedule),
    };
    let result = gen.drive(level, v);
    *schedule = gen.schedule;
    result
}

/// The phase-concatenated exponential schedule: level 1 through level
/// `k`, each driven from 1 to `z = 2k + 3`, for a total of
/// `(2k+2)(2^k − 1)` steps consisting solely of neighborhood-minimum
/// chasing moves. The constructor simulates the whole schedule and
/// checks the class invariants at every phase boundary, so a returned
/// scenario is known-executable.
pub fn scenario_exponential(k: u32, d_cap: u32) -> Result<Scenario, ScenarioError> {
    const NAME: &str = "exponential";
    if k < 1 {
        return Err(invalid(NAME, "k must be at least 1"));
    }
    let z = 2 * k + 3;
    if d_cap < z {
        return Err(invalid(NAME, format!("cap must be at least 2k + 3 = {z}")));
    }
    let graph = build_gk(k).map_err(|e| invalid(NAME, e.to_string()))?;
    let layout = GkLayout::from_graph(&graph).map_err(|e| invalid(NAME, e.to_string()))?;
    let init = exponential_start(&graph, &layout, z);
    let spec = AlgorithmSpec::hc(d_cap);

    let mut schedule: Vec<Vec<Move>> = Vec::new();
    let mut conf = init.clone();
    let mut cursor = 0usize;
    for level in 1..=k {
        let at_phase = |reason: String, v: u32| ScenarioError::PhaseFailure {
            level,
            v,
            z,
            reason,
        };
        if !in_conf_class(&graph, &layout, &conf, ConfClass::C, level, 1, z)
            .map_err(|e| at_phase(e.to_string(), 1))?
        {
            return Err(at_phase("phase does not start in class c".into(), 1));
        }
        exec_phase(&mut schedule, &layout, level, 1, z)?;
        // Validate the freshly appended steps by executing them.
        while cursor < schedule.len() {
            conf = apply_step(&spec, &graph, &conf, &schedule[cursor])
                .map_err(|e| at_phase(e.to_string(), 1))?
                .0;
            cursor += 1;
        }
        if !in_conf_class(&graph, &layout, &conf, ConfClass::C, level, z, z)
            .map_err(|e| at_phase(e.to_string(), z))?
        {
            return Err(at_phase("phase does not end saturated".into(), z));
        }
    }

    let steps = schedule.len() as u64;
    Ok(Scenario {
        name: NAME.into(),
        spec,
        graph,
        init,
        strategy: DaemonStrategy::scripted(schedule),
        expected: Expected {
            rounds: CountReq::Exact(0),
            steps: CountReq::Exact(steps),
        },
        sync_tail: true,
    })
}

/// Re-executes a scripted minimum-chasing schedule under the capped
/// two-rule variant: a chasing move maps to the distance-fixing rule
/// when the process's distance is off the neighborhood minimum plus one,
/// and to the parent-fixing rule otherwise. Both perform the identical
/// write, so the mapped run tracks the original configuration for
/// configuration; the returned trace proves every mapped move was
/// enabled.
pub fn replay_schedule_as_b(sc: &Scenario) -> Result<ExecutionTrace, ScenarioError> {
    let schedule = match &sc.strategy {
        DaemonStrategy::Scripted { schedule } => schedule,
        _ => return Err(invalid(&sc.name, "only scripted scenarios can be remapped")),
    };
    let b_spec = AlgorithmSpec::bounded(sc.spec.cap());
    let mut conf = sc.init.clone();
    let mut mapped: Vec<Vec<Move>> = Vec::with_capacity(schedule.len());
    for (step, moves) in schedule.iter().enumerate() {
        let remapped: Vec<Move> = moves
            .iter()
            .map(|mv| {
                if mv.rule != RuleId::HC2 {
                    return Err(invalid(
                        &sc.name,
                        format!("step {step} uses {}, not a chasing move", mv.rule),
                    ));
                }
                let rule = if d_ok(&sc.graph, &conf, mv.process) {
                    RuleId::B2
                } else {
                    RuleId::B1
                };
                Ok(Move::new(mv.process, rule))
            })
            .collect::<Result<_, _>>()?;
        conf = apply_step(&b_spec, &sc.graph, &conf, &remapped)
            .map_err(|kind| ScenarioError::MappedStep {
                step: step as u64,
                kind,
            })?
            .0;
        mapped.push(remapped);
    }
    let trace = run(
        &b_spec,
        &sc.graph,
        &DaemonStrategy::scripted(mapped),
        &sc.init,
        schedule.len() as u64 + 1,
    );
    match trace.outcome {
        Outcome::ScheduleViolation { .. } | Outcome::StepBudgetExceeded => {
            Err(ScenarioError::DidNotTerminate {
                name: sc.name.clone(),
                outcome: trace.outcome.clone(),
            })
        }
        _ => Ok(trace),
    }
}
