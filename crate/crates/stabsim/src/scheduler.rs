//! Daemon strategies: deciding who moves at each step.
//!
//! A *step* activates a non-empty set of enabled processes; the daemon is the
//! adversary (or ally) that picks this set, and — when a process has two
//! enabled rules — which rule it fires. Strategies here are pure functions of
//! the pre-step configuration and the step index: [`choose`] owns no mutable
//! state and derives any randomness from the strategy seed mixed with the
//! step index. Any step of a run can therefore be recomputed on its own,
//! which is what makes replay and divergence checks cheap.
//!
//! Rule selection is resolved in three layers: an algorithm-level pin
//! ([`RulePriority`] on the [`AlgorithmSpec`]) wins over the strategy's own preference
//! ([`RulePref`]), which wins over a uniform draw. Only the height-chasing
//! variant can enable two rules at once, so the layers only matter there.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

use crate::algorithms::{
    enabled_map, enabled_rules, AlgorithmSpec, Configuration, RuleId, RulePriority, RuleSet,
};
use crate::topology::{Graph, NodeId};

/// One process firing one rule within a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Move {
    #[serde(rename = "p")]
    pub process: NodeId,
    pub rule: RuleId,
}

impl Move {
    pub fn new(process: NodeId, rule: RuleId) -> Self {
        Move { process, rule }
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.process, self.rule)
    }
}

/// Which rule a strategy favours when a process has several enabled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RulePref {
    /// Favour the parent-chasing rule (`HC1`).
    Hc1First,
    /// Favour the full update rule (`HC2`). This is the default because it
    /// is the choice that makes progress towards correct distances.
    #[default]
    Hc2First,
}

impl RulePref {
    fn want(self) -> RuleId {
        match self {
            RulePref::Hc1First => RuleId::HC1,
            RulePref::Hc2First => RuleId::HC2,
        }
    }
}

/// How the daemon builds each step.
///
/// Everything serializes with a `kind` tag so strategies can travel inside
/// scenario bundles and trace headers:
/// `{"kind":"central-random","seed":7}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DaemonStrategy {
    /// Every enabled process fires at every step.
    Synchronous {
        #[serde(default)]
        rule_pref: RulePref,
    },
    /// Exactly one enabled process fires per step, drawn uniformly.
    CentralRandom { seed: u64 },
    /// Each enabled process is activated independently with probability
    /// `activation_prob` (in `(0, 1]`). If every coin comes up tails, one
    /// enabled process is drawn uniformly so the step is never empty.
    DistributedRandom { seed: u64, activation_prob: f64 },
    /// A fixed schedule: entry `i` is the move set of step `i`, verbatim.
    /// Running past the end is reported as [`ChooseError::Exhausted`].
    Scripted { schedule: Vec<Vec<Move>> },
    /// Defer process selection to `base`, then re-pick every selected
    /// process's rule according to `rule_pref`.
    Priority {
        base: Box<DaemonStrategy>,
        #[serde(default)]
        rule_pref: RulePref,
    },
}

impl DaemonStrategy {
    pub fn synchronous() -> Self {
        DaemonStrategy::Synchronous {
            rule_pref: RulePref::default(),
        }
    }

    pub fn central(seed: u64) -> Self {
        DaemonStrategy::CentralRandom { seed }
    }

    /// Panics unless `activation_prob` lies in `(0, 1]`.
    pub fn distributed(seed: u64, activation_prob: f64) -> Self {
        assert!(
            activation_prob > 0.0 && activation_prob <= 1.0,
            "activation probability must lie in (0, 1], got {activation_prob}"
        );
        DaemonStrategy::DistributedRandom {
            seed,
            activation_prob,
        }
    }

    pub fn scripted(schedule: Vec<Vec<Move>>) -> Self {
        DaemonStrategy::Scripted { schedule }
    }

    pub fn priority(base: DaemonStrategy, rule_pref: RulePref) -> Self {
        DaemonStrategy::Priority {
            base: Box::new(base),
            rule_pref,
        }
    }

    /// Short name for summaries and tables.
    pub fn name(&self) -> &'static str {
        match self {
            DaemonStrategy::Synchronous { .. } => "synchronous",
            DaemonStrategy::CentralRandom { .. } => "central-random",
            DaemonStrategy::DistributedRandom { .. } => "distributed-random",
            DaemonStrategy::Scripted { .. } => "scripted",
            DaemonStrategy::Priority { .. } => "priority",
        }
    }

    /// Number of scripted steps, if this strategy ever runs dry.
    pub fn script_len(&self) -> Option<usize> {
        match self {
            DaemonStrategy::Scripted { schedule } => Some(schedule.len()),
            DaemonStrategy::Priority { base, .. } => base.script_len(),
            _ => None,
        }
    }
}

/// Why a strategy could not produce a step.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChooseError {
    /// A scripted schedule has no entry for this step.
    #[error("the schedule has no entry for step {step}")]
    Exhausted { step: u64 },
}

/// Picks the move set for step `step` from configuration `conf`.
///
/// Pure in all arguments: the same inputs always yield the same moves, and
/// no call depends on any earlier one. The result is empty only when no
/// process is enabled (callers normally test for termination first) — with
/// the scripted exception: a script may contain an explicitly empty entry,
/// which the engine rejects as a schedule violation.
pub fn choose(
    strategy: &DaemonStrategy,
    spec: &AlgorithmSpec,
    g: &Graph,
    conf: &Configuration,
    step: u64,
) -> Result<Vec<Move>, ChooseError> {
    match strategy {
        DaemonStrategy::Synchronous { rule_pref } => Ok(enabled_map(spec, g, conf)
            .into_iter()
            .map(|(p, rules)| Move::new(p, pick_rule(spec, Some(*rule_pref), rules, None)))
            .collect()),
        DaemonStrategy::CentralRandom { seed } => {
            let enabled = enabled_map(spec, g, conf);
            if enabled.is_empty() {
                return Ok(Vec::new());
            }
            let mut rng = step_rng(*seed, step);
            let (p, rules) = enabled[rng.gen_range(0..enabled.len())];
            Ok(vec![Move::new(p, pick_rule(spec, None, rules, Some(&mut rng)))])
        }
        DaemonStrategy::DistributedRandom {
            seed,
            activation_prob,
        } => {
            assert!(
                *activation_prob > 0.0 && *activation_prob <= 1.0,
                "activation probability must lie in (0, 1], got {activation_prob}"
            );
            let enabled = enabled_map(spec, g, conf);
            if enabled.is_empty() {
                return Ok(Vec::new());
            }
            let mut rng = step_rng(*seed, step);
            let mut moves = Vec::new();
            for &(p, rules) in &enabled {
                if rng.gen_bool(*activation_prob) {
                    moves.push(Move::new(p, pick_rule(spec, None, rules, Some(&mut rng))));
                }
            }
            if moves.is_empty() {
                let (p, rules) = enabled[rng.gen_range(0..enabled.len())];
                moves.push(Move::new(p, pick_rule(spec, None, rules, Some(&mut rng))));
            }
            Ok(moves)
        }
        DaemonStrategy::Scripted { schedule } => schedule
            .get(step as usize)
            .cloned()
            .ok_or(ChooseError::Exhausted { step }),
        DaemonStrategy::Priority { base, rule_pref } => {
            let mut moves = choose(base, spec, g, conf, step)?;
            for mv in &mut moves {
                let rules = enabled_rules(spec, g, conf, mv.process);
                // A base that selected a disabled process is passed through
                // untouched; the engine reports the violation with context.
                if !rules.is_empty() {
                    mv.rule = pick_rule(spec, Some(*rule_pref), rules, None);
                }
            }
            Ok(moves)
        }
    }
}

/// Resolves which of `rules` fires. The algorithm-level pin wins over the
/// strategy preference, which wins over a uniform draw; with no preference
/// and no generator the first rule in declaration order is taken.
fn pick_rule(
    spec: &AlgorithmSpec,
    pref: Option<RulePref>,
    rules: RuleSet,
    rng: Option<&mut ChaCha8Rng>,
) -> RuleId {
    debug_assert!(!rules.is_empty());
    let first = || rules.iter().next().expect("non-empty rule set");
    if rules.len() == 1 {
        return first();
    }
    let effective = match spec.rule_priority {
        RulePriority::Hc1First => Some(RulePref::Hc1First),
        RulePriority::Hc2First => Some(RulePref::Hc2First),
        RulePriority::DaemonDecides => pref,
    };
    match effective {
        Some(p) if rules.contains(p.want()) => p.want(),
        Some(_) => first(),
        None => match rng {
            Some(rng) => {
                let options: Vec<RuleId> = rules.iter().collect();
                options[rng.gen_range(0..options.len())]
            }
            None => first(),
        },
    }
}

/// Per-step generator: mixing the step index into the seed gives every step
/// an independent stream, so steps never need each other's history.
fn step_rng(seed: u64, step: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ step.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Problems turning schedule text into moves.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("schedule is not valid JSON: {0}")]
    Json(String),
    #[error("unknown process label {0:?}")]
    UnknownLabel(String),
    #[error("process id {0} is out of range")]
    ProcessOutOfRange(u64),
    #[error("a process must be given as a numeric id or a label string")]
    BadProcess,
}

/// Reads a scripted schedule from JSON text.
///
/// The format is an array of steps, each step an array of moves, and a
/// process may be named by numeric id or by graph label:
/// `[[{"p":"b","rule":"HC1"}],[{"p":2,"rule":"HC2"}]]`.
pub fn parse_schedule(text: &str, g: &Graph) -> Result<Vec<Vec<Move>>, ScheduleError> {
    #[derive(Deserialize)]
    struct RawMove {
        p: serde_json::Value,
        rule: RuleId,
    }
    let raw: Vec<Vec<RawMove>> =
        serde_json::from_str(text).map_err(|e| ScheduleError::Json(e.to_string()))?;
    raw.into_iter()
        .map(|step| {
            step.into_iter()
                .map(|mv| Ok(Move::new(resolve_process(&mv.p, g)?, mv.rule)))
                .collect()
        })
        .collect()
}

fn resolve_process(value: &serde_json::Value, g: &Graph) -> Result<NodeId, ScheduleError> {
    match value {
        serde_json::Value::Number(n) => {
            let id = n.as_u64().ok_or(ScheduleError::BadProcess)?;
            if id >= g.node_count() as u64 {
                return Err(ScheduleError::ProcessOutOfRange(id));
            }
            Ok(NodeId(id as u32))
        }
        serde_json::Value::String(s) => g
            .find_label(s)
            .ok_or_else(|| ScheduleError::UnknownLabel(s.clone())),
        _ => Err(ScheduleError::BadProcess),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::random_configuration;
    use crate::topology::{build_line, random_connected};
    use proptest::prelude::*;
    use std::collections::HashSet;

    /// Line R - a - b with cap 4 where a has both rules enabled: d_a = 2
    /// matches neither neighbour height (b at 2, root at 0), so a may chase
    /// its parent (HC1, to 3) or update (HC2, to 1).
    fn both_rules_setup() -> (AlgorithmSpec, Graph, Configuration) {
        let g = build_line(2).unwrap();
        let spec = AlgorithmSpec::hc(4);
        let conf = Configuration {
            d: vec![0, 2, 2],
            par: vec![None, Some(NodeId(2)), Some(NodeId(1))],
        };
        let a = NodeId(1);
        assert_eq!(
            enabled_rules(&spec, &g, &conf, a),
            [RuleId::HC1, RuleId::HC2].into_iter().collect::<RuleSet>()
        );
        (spec, g, conf)
    }

    #[test]
    fn synchronous_selects_every_enabled_process() {
        let g = random_connected(8, 0.3, 11).unwrap();
        let spec = AlgorithmSpec::bounded(6);
        let conf = random_configuration(&spec, &g, 5, None).unwrap();
        let moves = choose(&DaemonStrategy::synchronous(), &spec, &g, &conf, 0).unwrap();
        let expected: Vec<NodeId> = enabled_map(&spec, &g, &conf)
            .into_iter()
            .map(|(p, _)| p)
            .collect();
        assert!(!expected.is_empty(), "fixture should have enabled processes");
        assert_eq!(
            moves.iter().map(|m| m.process).collect::<Vec<_>>(),
            expected
        );
        for mv in &moves {
            assert!(enabled_rules(&spec, &g, &conf, mv.process).contains(mv.rule));
        }
    }

    #[test]
    fn synchronous_rule_pref_picks_among_doubly_enabled() {
        let (spec, g, conf) = both_rules_setup();
        let a = NodeId(1);
        let hc2 = choose(&DaemonStrategy::synchronous(), &spec, &g, &conf, 0).unwrap();
        assert!(hc2.contains(&Move::new(a, RuleId::HC2)));
        let strategy = DaemonStrategy::Synchronous {
            rule_pref: RulePref::Hc1First,
        };
        let hc1 = choose(&strategy, &spec, &g, &conf, 0).unwrap();
        assert!(hc1.contains(&Move::new(a, RuleId::HC1)));
    }

    #[test]
    fn central_random_draws_single_enabled_moves_and_covers_everyone() {
        let g = random_connected(7, 0.4, 3).unwrap();
        let spec = AlgorithmSpec::bounded(5);
        let conf = random_configuration(&spec, &g, 9, None).unwrap();
        let enabled: HashSet<NodeId> = enabled_map(&spec, &g, &conf)
            .into_iter()
            .map(|(p, _)| p)
            .collect();
        assert!(enabled.len() >= 2, "fixture should have at least two choices");
        let strategy = DaemonStrategy::central(42);
        let mut seen = HashSet::new();
        for step in 0..300 {
            let moves = choose(&strategy, &spec, &g, &conf, step).unwrap();
            assert_eq!(moves.len(), 1);
            let mv = moves[0];
            assert!(enabled.contains(&mv.process));
            assert!(enabled_rules(&spec, &g, &conf, mv.process).contains(mv.rule));
            seen.insert(mv.process);
        }
        assert_eq!(seen, enabled, "300 draws should cover every enabled process");
    }

    #[test]
    fn choose_is_a_pure_function_of_its_arguments() {
        let g = random_connected(9, 0.3, 21).unwrap();
        let spec = AlgorithmSpec::fhc(7);
        let conf = random_configuration(&spec, &g, 2, None).unwrap();
        for strategy in [
            DaemonStrategy::synchronous(),
            DaemonStrategy::central(5),
            DaemonStrategy::distributed(5, 0.4),
        ] {
            for step in [0, 1, 17] {
                let a = choose(&strategy, &spec, &g, &conf, step).unwrap();
                let b = choose(&strategy, &spec, &g, &conf, step).unwrap();
                assert_eq!(a, b, "{} step {step}", strategy.name());
            }
        }
        // Different steps draw from different streams: over a handful of
        // steps the central daemon must not always pick the same process.
        let strategy = DaemonStrategy::central(5);
        let picks: HashSet<NodeId> = (0..20)
            .map(|s| choose(&strategy, &spec, &g, &conf, s).unwrap()[0].process)
            .collect();
        assert!(picks.len() > 1);
    }

    #[test]
    fn distributed_random_is_never_empty_and_obeys_full_activation() {
        let g = random_connected(8, 0.3, 7).unwrap();
        let spec = AlgorithmSpec::bounded(6);
        let conf = random_configuration(&spec, &g, 13, None).unwrap();
        let all: Vec<NodeId> = enabled_map(&spec, &g, &conf)
            .into_iter()
            .map(|(p, _)| p)
            .collect();
        // Probability 1 activates exactly the enabled set, like synchronous.
        let full = choose(&DaemonStrategy::distributed(1, 1.0), &spec, &g, &conf, 4).unwrap();
        assert_eq!(full.iter().map(|m| m.process).collect::<Vec<_>>(), all);
        // A tiny probability still yields a non-empty step (fallback draw).
        for step in 0..50 {
            let moves =
                choose(&DaemonStrategy::distributed(9, 1e-9), &spec, &g, &conf, step).unwrap();
            assert!(!moves.is_empty());
            for mv in &moves {
                assert!(enabled_rules(&spec, &g, &conf, mv.process).contains(mv.rule));
            }
        }
    }

    #[test]
    fn scripted_returns_entries_verbatim_then_exhausts() {
        let g = build_line(3).unwrap();
        let spec = AlgorithmSpec::unbounded();
        let conf = Configuration::legitimate(&g);
        let schedule = vec![
            vec![Move::new(NodeId(2), RuleId::U1)],
            vec![],
            vec![Move::new(NodeId(1), RuleId::U1), Move::new(NodeId(3), RuleId::U2)],
        ];
        let strategy = DaemonStrategy::scripted(schedule.clone());
        for (i, step) in schedule.iter().enumerate() {
            assert_eq!(
                choose(&strategy, &spec, &g, &conf, i as u64).unwrap(),
                *step
            );
        }
        assert_eq!(
            choose(&strategy, &spec, &g, &conf, 3),
            Err(ChooseError::Exhausted { step: 3 })
        );
        assert_eq!(strategy.script_len(), Some(3));
    }

    #[test]
    fn priority_rewrites_rules_of_the_base_strategy() {
        let (spec, g, conf) = both_rules_setup();
        let a = NodeId(1);
        let strategy =
            DaemonStrategy::priority(DaemonStrategy::central(3), RulePref::Hc1First);
        let mut saw_a = false;
        for step in 0..40 {
            for mv in choose(&strategy, &spec, &g, &conf, step).unwrap() {
                if mv.process == a {
                    saw_a = true;
                    assert_eq!(mv.rule, RuleId::HC1);
                }
            }
        }
        assert!(saw_a, "central daemon should select a at least once");
    }

    #[test]
    fn algorithm_level_rule_pin_beats_strategy_preference() {
        let (spec, g, conf) = both_rules_setup();
        let pinned = spec.with_rule_priority(RulePriority::Hc2First);
        let a = NodeId(1);
        let strategy = DaemonStrategy::Synchronous {
            rule_pref: RulePref::Hc1First,
        };
        let moves = choose(&strategy, &pinned, &g, &conf, 0).unwrap();
        assert!(moves.contains(&Move::new(a, RuleId::HC2)));
    }

    #[test]
    fn strategies_roundtrip_through_json() {
        let strategies = [
            DaemonStrategy::synchronous(),
            DaemonStrategy::central(7),
            DaemonStrategy::distributed(1, 0.25),
            DaemonStrategy::scripted(vec![vec![Move::new(NodeId(4), RuleId::B3)]]),
            DaemonStrategy::priority(DaemonStrategy::synchronous(), RulePref::Hc1First),
        ];
        for s in strategies {
            let json = serde_json::to_string(&s).unwrap();
            let back: DaemonStrategy = serde_json::from_str(&json).unwrap();
            assert_eq!(back, s, "{json}");
        }
        let json =
            serde_json::to_string(&DaemonStrategy::central(7)).unwrap();
        assert_eq!(json, r#"{"kind":"central-random","seed":7}"#);
        // rule_pref defaults when omitted.
        let s: DaemonStrategy = serde_json::from_str(r#"{"kind":"synchronous"}"#).unwrap();
        assert_eq!(s, DaemonStrategy::synchronous());
    }

    #[test]
    fn schedules_parse_ids_labels_and_errors() {
        let g = build_line(3).unwrap(); // labels p0..p3
        let parsed = parse_schedule(
            r#"[[{"p":"p2","rule":"U1"}],[{"p":1,"rule":"U2"},{"p":"p3","rule":"U1"}]]"#,
            &g,
        )
        .unwrap();
        assert_eq!(
            parsed,
            vec![
                vec![Move::new(NodeId(2), RuleId::U1)],
                vec![Move::new(NodeId(1), RuleId::U2), Move::new(NodeId(3), RuleId::U1)],
            ]
        );
        assert_eq!(
            parse_schedule(r#"[[{"p":"nope","rule":"U1"}]]"#, &g),
            Err(ScheduleError::UnknownLabel("nope".into()))
        );
        assert_eq!(
            parse_schedule(r#"[[{"p":9,"rule":"U1"}]]"#, &g),
            Err(ScheduleError::ProcessOutOfRange(9))
        );
        assert_eq!(
            parse_schedule(r#"[[{"p":true,"rule":"U1"}]]"#, &g),
            Err(ScheduleError::BadProcess)
        );
        assert!(matches!(
            parse_schedule(r#"[[{"p":1,"rule":"NOPE"}]]"#, &g),
            Err(ScheduleError::Json(_))
        ));
        // Moves embedded in strategies serialize with the same shape the
        // parser accepts for numeric ids.
        let mv = Move::new(NodeId(2), RuleId::HC2);
        assert_eq!(serde_json::to_string(&mv).unwrap(), r#"{"p":2,"rule":"HC2"}"#);
    }

    proptest! {
        /// Synchronous steps list each enabled process exactly once with an
        /// enabled rule, on arbitrary sampled configurations.
        #[test]
        fn synchronous_moves_are_exactly_the_enabled_processes(
            n in 2u32..10,
            graph_seed in 0u64..500,
            conf_seed in 0u64..500,
        ) {
            let g = random_connected(n, 0.3, graph_seed).unwrap();
            let spec = AlgorithmSpec::hc(6);
            let conf = random_configuration(&spec, &g, conf_seed, None).unwrap();
            let moves = choose(&DaemonStrategy::synchronous(), &spec, &g, &conf, 0).unwrap();
            let mut seen = HashSet::new();
            for mv in &moves {
                prop_assert!(seen.insert(mv.process), "duplicate process in step");
                prop_assert!(enabled_rules(&spec, &g, &conf, mv.process).contains(mv.rule));
            }
            let enabled: HashSet<NodeId> =
                enabled_map(&spec, &g, &conf).into_iter().map(|(p, _)| p).collect();
            prop_assert_eq!(seen, enabled);
        }
    }
}
