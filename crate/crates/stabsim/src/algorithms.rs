//! The four rule systems and their shared local state.
//!
//! Every process except the root holds a distance estimate `d` and a parent
//! pointer `par` into its neighborhood; the root's distance is the constant 0
//! and it has no parent and no rules. A rule is *enabled* at a process when
//! its guard holds in the current configuration; firing it replaces the
//! process's local state wholesale. Guards and actions only ever read the
//! pre-step configuration, so simultaneous moves compose without interference
//! (the engine exploits this).
//!
//! The variants:
//!
//! * `U` — unbounded distances. `U1` recomputes `d` from the neighborhood
//!   minimum whenever it is off by anything; `U2` only repoints the parent.
//! * `B` — distances capped at a bound `D`. `B1`/`B2` mirror `U1`/`U2` but
//!   are guarded by the neighborhood minimum being below the cap; `B3` parks
//!   the distance at `D` when the whole neighborhood is already there.
//! * `HC` — also capped at `D`, but driven by the parent pointer: `HC1`
//!   chases the current parent's value (`d := d_par + 1`), `HC2` switches to
//!   a best neighbor when the parent is worse than the neighborhood minimum.
//!   The two guards overlap, so a single process can have both enabled.
//! * `FHC` — `HC` with the chase restricted to parents that are already
//!   locally minimal, which makes the two guards mutually exclusive and
//!   removes the exponential-step behaviour `HC` suffers from.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::{Graph, NodeId};

/// Which rule system governs the processes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Variant {
    U,
    B,
    Hc,
    Fhc,
}

impl Variant {
    pub fn is_bounded(self) -> bool {
        !matches!(self, Variant::U)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::U => "U",
            Variant::B => "B",
            Variant::Hc => "HC",
            Variant::Fhc => "FHC",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "U" => Ok(Variant::U),
            "B" => Ok(Variant::B),
            "HC" => Ok(Variant::Hc),
            "FHC" => Ok(Variant::Fhc),
            other => Err(format!("unknown algorithm {other:?} (expected U, B, HC or FHC)")),
        }
    }
}

/// How `best_parent` breaks ties between equally good neighbors.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TiePolicy {
    /// Deterministically pick the neighbor with the smallest id.
    #[default]
    SmallestId,
    /// Keep the current parent when it is among the minima, otherwise fall
    /// back to the smallest id. Cuts down on gratuitous repointing.
    KeepCurrentIfMinimal,
}

/// What happens when `HC` enables both of its rules at one process.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RulePriority {
    /// The scheduler picks (its own preference or at random).
    #[default]
    DaemonDecides,
    /// Force the chase rule `HC1`.
    Hc1First,
    /// Force the repoint rule `HC2`.
    Hc2First,
}

/// A fully parameterized algorithm: variant, distance cap, and the two
/// determinism knobs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub variant: Variant,
    /// Distance cap `D`; `None` exactly for the unbounded variant.
    pub d_bound: Option<u32>,
    #[serde(default)]
    pub tie_policy: TiePolicy,
    #[serde(default)]
    pub rule_priority: RulePriority,
}

impl AlgorithmSpec {
    pub fn unbounded() -> AlgorithmSpec {
        AlgorithmSpec {
            variant: Variant::U,
            d_bound: None,
            tie_policy: TiePolicy::default(),
            rule_priority: RulePriority::default(),
        }
    }

    pub fn bounded(d: u32) -> AlgorithmSpec {
        assert!(d >= 1, "distance cap must be at least 1");
        AlgorithmSpec {
            variant: Variant::B,
            d_bound: Some(d),
            tie_policy: TiePolicy::default(),
            rule_priority: RulePriority::default(),
        }
    }

    pub fn hc(d: u32) -> AlgorithmSpec {
        assert!(d >= 1, "distance cap must be at least 1");
        AlgorithmSpec {
            variant: Variant::Hc,
            d_bound: Some(d),
            tie_policy: TiePolicy::default(),
            rule_priority: RulePriority::default(),
        }
    }

    pub fn fhc(d: u32) -> AlgorithmSpec {
        assert!(d >= 1, "distance cap must be at least 1");
        AlgorithmSpec {
            variant: Variant::Fhc,
            d_bound: Some(d),
            tie_policy: TiePolicy::default(),
            rule_priority: RulePriority::default(),
        }
    }

    pub fn with_tie_policy(mut self, policy: TiePolicy) -> AlgorithmSpec {
        self.tie_policy = policy;
        self
    }

    pub fn with_rule_priority(mut self, priority: RulePriority) -> AlgorithmSpec {
        self.rule_priority = priority;
        self
    }

    /// The cap `D`, panicking for the unbounded variant (callers branch on
    /// `variant.is_bounded()` first).
    pub fn cap(&self) -> u32 {
        self.d_bound.expect("unbounded variant has no distance cap")
    }

    /// Short human-readable tag, e.g. `U`, `B(7)`, `HC(4)`.
    pub fn tag(&self) -> String {
        match self.d_bound {
            Some(d) => format!("{}({d})", self.variant),
            None => self.variant.to_string(),
        }
    }
}

/// Identifier of a single guarded rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RuleId {
    U1,
    U2,
    B1,
    B2,
    B3,
    HC1,
    HC2,
    FHC1,
}

impl RuleId {
    pub const ALL: [RuleId; 8] = [
        RuleId::U1,
        RuleId::U2,
        RuleId::B1,
        RuleId::B2,
        RuleId::B3,
        RuleId::HC1,
        RuleId::HC2,
        RuleId::FHC1,
    ];

    fn bit(self) -> u8 {
        1 << (Self::ALL.iter().position(|&r| r == self).unwrap() as u8)
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl std::str::FromStr for RuleId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RuleId::ALL
            .iter()
            .copied()
            .find(|r| format!("{r:?}").eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown rule {s:?}"))
    }
}

/// Small set of rules enabled at one process.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RuleSet(u8);

impl RuleSet {
    pub const EMPTY: RuleSet = RuleSet(0);

    pub fn singleton(rule: RuleId) -> RuleSet {
        RuleSet(rule.bit())
    }

    pub fn insert(&mut self, rule: RuleId) {
        self.0 |= rule.bit();
    }

    pub fn contains(self, rule: RuleId) -> bool {
        self.0 & rule.bit() != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Enabled rules in declaration order (`U1` .. `FHC1`).
    pub fn iter(self) -> impl Iterator<Item = RuleId> {
        RuleId::ALL.into_iter().filter(move |r| self.contains(*r))
    }
}

impl FromIterator<RuleId> for RuleSet {
    fn from_iter<T: IntoIterator<Item = RuleId>>(iter: T) -> Self {
        let mut set = RuleSet::EMPTY;
        for r in iter {
            set.insert(r);
        }
        set
    }
}

/// Global configuration: one `(d, par)` pair per node, indexed by id. The
/// root's entry is pinned to `(0, None)`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    pub d: Vec<u32>,
    pub par: Vec<Option<NodeId>>,
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Configuration{{")?;
        for i in 0..self.d.len() {
            if i > 0 {
                write!(f, ", ")?;
            }
            match self.par[i] {
                Some(p) => write!(f, "{i}:(d={},par={p})", self.d[i])?,
                None => write!(f, "{i}:(d={})", self.d[i])?,
            }
        }
        write!(f, "}}")
    }
}

impl Configuration {
    /// Builds a configuration from per-process closures; the root is pinned
    /// automatically and the closures are not consulted for it.
    pub fn build(
        g: &Graph,
        mut d_of: impl FnMut(NodeId) -> u32,
        mut par_of: impl FnMut(NodeId) -> NodeId,
    ) -> Configuration {
        let mut d = vec![0; g.node_count()];
        let mut par = vec![None; g.node_count()];
        for p in g.processes() {
            d[p.index()] = d_of(p);
            par[p.index()] = Some(par_of(p));
        }
        Configuration { d, par }
    }

    /// The target configuration: exact root distances and smallest-id parents
    /// one level up.
    pub fn legitimate(g: &Graph) -> Configuration {
        Configuration::build(
            g,
            |p| g.distance(p),
            |p| {
                *g.neighbors(p)
                    .iter()
                    .find(|&&q| g.distance(q) + 1 == g.distance(p))
                    .expect("every non-root node has a neighbor one level up")
            },
        )
    }

    pub fn d(&self, p: NodeId) -> u32 {
        self.d[p.index()]
    }

    pub fn par(&self, p: NodeId) -> Option<NodeId> {
        self.par[p.index()]
    }

    /// Checks shape and domains against a graph and algorithm: pinned root,
    /// parents that are actual neighbors, distances within `[1, D]` for the
    /// capped variants and at least 1 for the unbounded one (only the root
    /// holds distance 0).
    pub fn validate(&self, spec: &AlgorithmSpec, g: &Graph) -> Result<(), AlgoError> {
        if self.d.len() != g.node_count() || self.par.len() != g.node_count() {
            return Err(AlgoError::WrongLength {
                expected: g.node_count(),
            });
        }
        if self.d(g.root()) != 0 {
            return Err(AlgoError::RootDistanceNotZero);
        }
        if self.par(g.root()).is_some() {
            return Err(AlgoError::RootHasParent);
        }
        for p in g.processes() {
            let par = self.par(p).ok_or(AlgoError::MissingParent(p))?;
            if !g.neighbors(p).contains(&par) {
                return Err(AlgoError::ParentNotNeighbor { process: p, par });
            }
            if self.d(p) == 0 {
                return Err(AlgoError::DistanceZero(p));
            }
            if spec.variant.is_bounded() {
                let cap = spec.cap();
                if self.d(p) > cap {
                    return Err(AlgoError::DistanceOutOfRange {
                        process: p,
                        d: self.d(p),
                        cap,
                    });
                }
            }
        }
        Ok(())
    }

    /// One line per node, for logs and example output.
    pub fn render(&self, g: &Graph) -> String {
        let mut out = String::new();
        for p in g.nodes() {
            let name = g.display_name(p);
            match self.par(p) {
                Some(q) => out.push_str(&format!(
                    "  {name}: d={} par={}\n",
                    self.d(p),
                    g.display_name(q)
                )),
                None => out.push_str(&format!("  {name}: d={} (root)\n", self.d(p))),
            }
        }
        out
    }
}

/// Replacement local state produced by firing one rule at one process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessWrite {
    pub d: u32,
    pub par: NodeId,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlgoError {
    #[error("configuration has the wrong number of entries (expected {expected})")]
    WrongLength { expected: usize },
    #[error("the root's distance must be 0")]
    RootDistanceNotZero,
    #[error("the root must not have a parent")]
    RootHasParent,
    #[error("process {0} has no parent")]
    MissingParent(NodeId),
    #[error("process {process} points at {par}, which is not a neighbor")]
    ParentNotNeighbor { process: NodeId, par: NodeId },
    #[error("process {process} has d={d}, outside [1, {cap}]")]
    DistanceOutOfRange { process: NodeId, d: u32, cap: u32 },
    #[error("process {0} has d=0, but only the root holds distance 0")]
    DistanceZero(NodeId),
    #[error("rule {rule} is not enabled at process {process}")]
    RuleNotEnabled { process: NodeId, rule: RuleId },
    #[error("sampling an unbounded configuration needs an explicit distance cap")]
    UnboundedNeedsCap,
}

/// Minimum distance value in `p`'s neighborhood.
pub fn min_d(g: &Graph, conf: &Configuration, p: NodeId) -> u32 {
    g.neighbors(p)
        .iter()
        .map(|&q| conf.d(q))
        .min()
        .expect("connected graph: every node has a neighbor")
}

/// Neighbor of `p` holding the minimum distance, ties broken per `policy`.
pub fn best_parent(g: &Graph, conf: &Configuration, p: NodeId, policy: TiePolicy) -> NodeId {
    let best = min_d(g, conf, p);
    if policy == TiePolicy::KeepCurrentIfMinimal {
        if let Some(cur) = conf.par(p) {
            if conf.d(cur) == best {
                return cur;
            }
        }
    }
    *g.neighbors(p)
        .iter()
        .find(|&&q| conf.d(q) == best)
        .expect("some neighbor attains the minimum")
}

/// `d_p` is exactly one more than the neighborhood minimum.
pub fn d_ok(g: &Graph, conf: &Configuration, p: NodeId) -> bool {
    conf.d(p) == min_d(g, conf, p) + 1
}

/// `d_p` is exactly one more than the parent's distance.
pub fn par_ok(conf: &Configuration, p: NodeId) -> bool {
    match conf.par(p) {
        Some(q) => conf.d(p) == conf.d(q) + 1,
        None => false,
    }
}

/// Rules enabled at `p` under `spec`. Empty for the root. At most one rule
/// for `U`, `B` and `FHC`; `HC` can enable both of its rules at once.
pub fn enabled_rules(spec: &AlgorithmSpec, g: &Graph, conf: &Configuration, p: NodeId) -> RuleSet {
    if g.is_root(p) {
        return RuleSet::EMPTY;
    }
    let mut set = RuleSet::EMPTY;
    match spec.variant {
        Variant::U => {
            if !d_ok(g, conf, p) {
                set.insert(RuleId::U1);
            } else if !par_ok(conf, p) {
                set.insert(RuleId::U2);
            }
        }
        Variant::B => {
            let cap = spec.cap();
            let min = min_d(g, conf, p);
            if min < cap {
                if !d_ok(g, conf, p) {
                    set.insert(RuleId::B1);
                } else if !par_ok(conf, p) {
                    set.insert(RuleId::B2);
                }
            } else if conf.d(p) != cap {
                set.insert(RuleId::B3);
            }
        }
        Variant::Hc => {
            let cap = spec.cap();
            let d_par = conf.d(conf.par(p).expect("non-root process has a parent"));
            if !par_ok(conf, p) && d_par < cap {
                set.insert(RuleId::HC1);
            }
            if d_par > min_d(g, conf, p) {
                set.insert(RuleId::HC2);
            }
        }
        Variant::Fhc => {
            let cap = spec.cap();
            let d_par = conf.d(conf.par(p).expect("non-root process has a parent"));
            let min = min_d(g, conf, p);
            if !par_ok(conf, p) && d_par < cap && d_par == min {
                set.insert(RuleId::FHC1);
            }
            if d_par > min {
                set.insert(RuleId::HC2);
            }
        }
    }
    set
}

/// The local state `p` would adopt by firing `rule` in `conf`. Pure: reads
/// only the pre-step configuration. Callers are expected to have checked the
/// guard (`apply_rule` does).
pub fn rule_write(
    spec: &AlgorithmSpec,
    g: &Graph,
    conf: &Configuration,
    p: NodeId,
    rule: RuleId,
) -> ProcessWrite {
    let cur_par = || conf.par(p).expect("non-root process has a parent");
    match rule {
        // Full recompute: adopt the neighborhood minimum plus one.
        RuleId::U1 | RuleId::B1 | RuleId::HC2 => ProcessWrite {
            d: min_d(g, conf, p) + 1,
            par: best_parent(g, conf, p, spec.tie_policy),
        },
        // Repoint only.
        RuleId::U2 | RuleId::B2 => ProcessWrite {
            d: conf.d(p),
            par: best_parent(g, conf, p, spec.tie_policy),
        },
        // Park at the cap.
        RuleId::B3 => ProcessWrite {
            d: spec.cap(),
            par: cur_par(),
        },
        // Chase the current parent.
        RuleId::HC1 | RuleId::FHC1 => ProcessWrite {
            d: conf.d(cur_par()) + 1,
            par: cur_par(),
        },
    }
}

/// Fires one rule at one process, checking the guard first.
pub fn apply_rule(
    spec: &AlgorithmSpec,
    g: &Graph,
    conf: &Configuration,
    p: NodeId,
    rule: RuleId,
) -> Result<Configuration, AlgoError> {
    if !enabled_rules(spec, g, conf, p).contains(rule) {
        return Err(AlgoError::RuleNotEnabled { process: p, rule });
    }
    let write = rule_write(spec, g, conf, p, rule);
    let mut next = conf.clone();
    next.d[p.index()] = write.d;
    next.par[p.index()] = Some(write.par);
    Ok(next)
}

/// All processes with at least one enabled rule, in id order.
pub fn enabled_map(
    spec: &AlgorithmSpec,
    g: &Graph,
    conf: &Configuration,
) -> Vec<(NodeId, RuleSet)> {
    g.processes()
        .filter_map(|p| {
            let set = enabled_rules(spec, g, conf, p);
            (!set.is_empty()).then_some((p, set))
        })
        .collect()
}

/// No process has an enabled rule.
pub fn is_terminal(spec: &AlgorithmSpec, g: &Graph, conf: &Configuration) -> bool {
    g.processes()
        .all(|p| enabled_rules(spec, g, conf, p).is_empty())
}

/// Seeded uniform configuration: every parent pointer uniform over the
/// neighborhood, every distance uniform over the domain. The unbounded
/// variant has no finite domain, so a cap for sampling must be supplied
/// (distances are then drawn from `[1, cap]`).
pub fn random_configuration(
    spec: &AlgorithmSpec,
    g: &Graph,
    seed: u64,
    unbounded_d_cap: Option<u32>,
) -> Result<Configuration, AlgoError> {
    let range = match spec.d_bound {
        Some(cap) => 1..=cap,
        None => 1..=unbounded_d_cap.ok_or(AlgoError::UnboundedNeedsCap)?,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = vec![0u32; g.node_count()];
    let mut par = vec![None; g.node_count()];
    for p in g.processes() {
        d[p.index()] = rng.gen_range(range.clone());
        let nbs = g.neighbors(p);
        par[p.index()] = Some(nbs[rng.gen_range(0..nbs.len())]);
    }
    Ok(Configuration { d, par })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_line, build_lollipop, random_connected};
    use proptest::prelude::*;

    fn line3() -> Graph {
        build_line(3).unwrap()
    }

    /// Graphs and matching seeds for property tests.
    fn small_graph(n: u32, seed: u64) -> Graph {
        random_connected(n, 0.3, seed).unwrap()
    }

    #[test]
    fn neighborhood_minimum_and_predicates() {
        let g = line3();
        // p0(root,d=0) - p1(d=5) - p2(d=2) - p3(d=3), parents chained left.
        let conf = Configuration {
            d: vec![0, 5, 2, 3],
            par: vec![None, Some(NodeId(0)), Some(NodeId(1)), Some(NodeId(2))],
        };
        assert_eq!(min_d(&g, &conf, NodeId(1)), 0);
        assert_eq!(min_d(&g, &conf, NodeId(2)), 3);
        assert_eq!(min_d(&g, &conf, NodeId(3)), 2);
        assert!(!d_ok(&g, &conf, NodeId(1)));
        assert!(d_ok(&g, &conf, NodeId(3)));
        assert!(par_ok(&conf, NodeId(3)));
        assert!(!par_ok(&conf, NodeId(1)));
    }

    #[test]
    fn best_parent_tie_breaking() {
        // Lollipop(2): p3 neighbors are p1, p2 (chord); give both d=1.
        let g = build_lollipop(2).unwrap();
        let conf = Configuration {
            d: vec![0, 1, 1, 2],
            par: vec![None, Some(NodeId(0)), Some(NodeId(1)), Some(NodeId(2))],
        };
        assert_eq!(g.neighbors(NodeId(3)), &[NodeId(1), NodeId(2)]);
        assert_eq!(
            best_parent(&g, &conf, NodeId(3), TiePolicy::SmallestId),
            NodeId(1)
        );
        // Current parent p2 is among the minima, so it is kept.
        assert_eq!(
            best_parent(&g, &conf, NodeId(3), TiePolicy::KeepCurrentIfMinimal),
            NodeId(2)
        );
        // If the current parent is not minimal, fall back to smallest id.
        let conf2 = Configuration {
            d: vec![0, 1, 5, 2],
            par: vec![None, Some(NodeId(0)), Some(NodeId(1)), Some(NodeId(2))],
        };
        assert_eq!(
            best_parent(&g, &conf2, NodeId(3), TiePolicy::KeepCurrentIfMinimal),
            NodeId(1)
        );
    }

    #[test]
    fn both_predicates_pin_the_parent_to_the_minimum() {
        // d_ok and par_ok together force d_par = min_d: d_p = min_d + 1 and
        // d_p = d_par + 1. par_ok alone does not.
        for seed in 0..200 {
            let g = small_graph(6, seed);
            let spec = AlgorithmSpec::bounded(4);
            let conf = random_configuration(&spec, &g, seed * 31, None).unwrap();
            for p in g.processes() {
                if d_ok(&g, &conf, p) && par_ok(&conf, p) {
                    let par = conf.par(p).unwrap();
                    assert_eq!(conf.d(par), min_d(&g, &conf, p));
                }
            }
        }
        // Witness that par_ok alone is weaker: p3 agrees with its parent p2
        // (3 = 2 + 1) while the chord neighbor p1 undercuts it.
        let g = build_lollipop(2).unwrap();
        let conf = Configuration {
            d: vec![0, 1, 2, 3],
            par: vec![None, Some(NodeId(0)), Some(NodeId(1)), Some(NodeId(2))],
        };
        assert!(par_ok(&conf, NodeId(3)));
        assert_ne!(conf.d(NodeId(2)), min_d(&g, &conf, NodeId(3)));
    }

    #[test]
    fn unbounded_rules() {
        let g = line3();
        let spec = AlgorithmSpec::unbounded();
        let conf = Configuration {
            d: vec![0, 5, 2, 3],
            par: vec![None, Some(NodeId(0)), Some(NodeId(1)), Some(NodeId(2))],
        };
        // p1: d=5 but min is 0 -> full recompute.
        assert_eq!(
            enabled_rules(&spec, &g, &conf, NodeId(1)),
            RuleSet::singleton(RuleId::U1)
        );
        // p3: distance right, parent right -> idle.
        assert!(enabled_rules(&spec, &g, &conf, NodeId(3)).is_empty());
        let next = apply_rule(&spec, &g, &conf, NodeId(1), RuleId::U1).unwrap();
        assert_eq!(next.d(NodeId(1)), 1);
        assert_eq!(next.par(NodeId(1)), Some(NodeId(0)));
        // Repoint-only rule: distance already right but parent points away.
        let conf2 = Configuration {
            d: vec![0, 1, 1, 2],
            par: vec![None, Some(NodeId(0)), Some(NodeId(3)), Some(NodeId(2))],
        };
        // p2 neighbors: p1(d=1), p3(d=2); min=1; d=1 is NOT min+1, so U1.
        assert_eq!(
            enabled_rules(&spec, &g, &conf2, NodeId(2)),
            RuleSet::singleton(RuleId::U1)
        );
        let conf3 = Configuration {
            d: vec![0, 1, 2, 2],
            par: vec![None, Some(NodeId(0)), Some(NodeId(3)), Some(NodeId(2))],
        };
        // p2: min over {p1:1, p3:2} is 1, d=2=min+1 ok, parent p3 has d=2 != 1.
        assert_eq!(
            enabled_rules(&spec, &g, &conf3, NodeId(2)),
            RuleSet::singleton(RuleId::U2)
        );
        let next = apply_rule(&spec, &g, &conf3, NodeId(2), RuleId::U2).unwrap();
        assert_eq!(next.d(NodeId(2)), 2);
        assert_eq!(next.par(NodeId(2)), Some(NodeId(1)));
    }

    #[test]
    fn cap_rule_parks_at_the_bound() {
        let g = build_line(2).unwrap();
        let spec = AlgorithmSpec::bounded(2);
        // p2's only neighbor p1 is at the cap, p2 is below it.
        let conf = Configuration {
            d: vec![0, 2, 1],
            par: vec![None, Some(NodeId(0)), Some(NodeId(1))],
        };
        assert_eq!(
            enabled_rules(&spec, &g, &conf, NodeId(2)),
            RuleSet::singleton(RuleId::B3)
        );
        let next = apply_rule(&spec, &g, &conf, NodeId(2), RuleId::B3).unwrap();
        assert_eq!(next.d(NodeId(2)), 2);
        assert_eq!(next.par(NodeId(2)), Some(NodeId(1)), "parking keeps the parent");
        // Once parked, nothing is enabled there.
        assert!(enabled_rules(&spec, &g, &next, NodeId(2)).is_empty());
    }

    #[test]
    fn chasing_variant_can_enable_both_rules() {
        // R - a - b with cap 4: a at d=2 pointing at b (d=2). The parent is
        // both chaseable (2 < 4) and worse than the minimum (2 > 0).
        let g = build_line(2).unwrap();
        let spec = AlgorithmSpec::hc(4);
        let conf = Configuration {
            d: vec![0, 2, 2],
            par: vec![None, Some(NodeId(2)), Some(NodeId(1))],
        };
        let set = enabled_rules(&spec, &g, &conf, NodeId(1));
        assert_eq!(set.len(), 2);
        assert!(set.contains(RuleId::HC1) && set.contains(RuleId::HC2));
        // The two rules disagree on the result: chase yields 3, repoint 1.
        assert_eq!(rule_write(&spec, &g, &conf, NodeId(1), RuleId::HC1).d, 3);
        assert_eq!(rule_write(&spec, &g, &conf, NodeId(1), RuleId::HC2).d, 1);
        // The fast variant refuses the chase there (parent not minimal).
        let fast = AlgorithmSpec::fhc(4);
        assert_eq!(
            enabled_rules(&fast, &g, &conf, NodeId(1)),
            RuleSet::singleton(RuleId::HC2)
        );
    }

    #[test]
    fn fast_variant_chases_only_minimal_parents() {
        let g = line3();
        let fast = AlgorithmSpec::fhc(5);
        // p2's parent p1 holds the neighborhood minimum but p2 disagrees.
        let conf = Configuration {
            d: vec![0, 1, 4, 5],
            par: vec![None, Some(NodeId(0)), Some(NodeId(1)), Some(NodeId(2))],
        };
        assert_eq!(
            enabled_rules(&fast, &g, &conf, NodeId(2)),
            RuleSet::singleton(RuleId::FHC1)
        );
        let w = rule_write(&fast, &g, &conf, NodeId(2), RuleId::FHC1);
        assert_eq!((w.d, w.par), (2, NodeId(1)));
    }

    #[test]
    fn rule_application_rejects_disabled_rules() {
        let g = line3();
        let spec = AlgorithmSpec::unbounded();
        let conf = Configuration::legitimate(&g);
        assert!(is_terminal(&spec, &g, &conf));
        assert_eq!(
            apply_rule(&spec, &g, &conf, NodeId(1), RuleId::U1),
            Err(AlgoError::RuleNotEnabled {
                process: NodeId(1),
                rule: RuleId::U1
            })
        );
    }

    #[test]
    fn legitimate_configuration_is_terminal_for_all_variants() {
        for seed in 0..30 {
            let g = small_graph(7, seed);
            let diam = g.diameter();
            let conf = Configuration::legitimate(&g);
            for spec in [
                AlgorithmSpec::unbounded(),
                AlgorithmSpec::bounded(diam),
                AlgorithmSpec::bounded(diam + 3),
                AlgorithmSpec::hc(diam + 1),
                AlgorithmSpec::fhc(diam),
            ] {
                assert!(
                    is_terminal(&spec, &g, &conf),
                    "{} not terminal on seed {seed}",
                    spec.tag()
                );
            }
        }
    }

    #[test]
    fn validation_catches_domain_violations() {
        let g = line3();
        let spec = AlgorithmSpec::bounded(3);
        let ok = Configuration::legitimate(&g);
        assert_eq!(ok.validate(&spec, &g), Ok(()));
        let mut bad = ok.clone();
        bad.d[0] = 1;
        assert_eq!(bad.validate(&spec, &g), Err(AlgoError::RootDistanceNotZero));
        let mut bad = ok.clone();
        bad.d[2] = 9;
        assert!(matches!(
            bad.validate(&spec, &g),
            Err(AlgoError::DistanceOutOfRange { .. })
        ));
        // 9 is fine for the unbounded variant.
        assert_eq!(bad.validate(&AlgorithmSpec::unbounded(), &g), Ok(()));
        // Distance 0 is root-only in every variant, including the unbounded one.
        let mut bad = ok.clone();
        bad.d[1] = 0;
        assert_eq!(
            bad.validate(&spec, &g),
            Err(AlgoError::DistanceZero(NodeId(1)))
        );
        assert_eq!(
            bad.validate(&AlgorithmSpec::unbounded(), &g),
            Err(AlgoError::DistanceZero(NodeId(1)))
        );
        let mut bad = ok.clone();
        bad.par[3] = Some(NodeId(0));
        assert!(matches!(
            bad.validate(&spec, &g),
            Err(AlgoError::ParentNotNeighbor { .. })
        ));
        let mut bad = ok;
        bad.par[1] = None;
        assert_eq!(bad.validate(&spec, &g), Err(AlgoError::MissingParent(NodeId(1))));
    }

    #[test]
    fn sampled_configurations_are_valid_and_reproducible() {
        let g = small_graph(9, 3);
        for spec in [
            AlgorithmSpec::bounded(5),
            AlgorithmSpec::hc(4),
            AlgorithmSpec::fhc(6),
        ] {
            let a = random_configuration(&spec, &g, 77, None).unwrap();
            let b = random_configuration(&spec, &g, 77, None).unwrap();
            assert_eq!(a, b);
            a.validate(&spec, &g).unwrap();
        }
        let u = AlgorithmSpec::unbounded();
        assert_eq!(
            random_configuration(&u, &g, 1, None),
            Err(AlgoError::UnboundedNeedsCap)
        );
        let c = random_configuration(&u, &g, 1, Some(10)).unwrap();
        c.validate(&u, &g).unwrap();
        assert!(c.d.iter().all(|&d| d <= 10));
    }

    #[test]
    fn rule_set_iterates_in_declaration_order() {
        let set: RuleSet = [RuleId::HC2, RuleId::B1, RuleId::HC1].into_iter().collect();
        assert_eq!(
            set.iter().collect::<Vec<_>>(),
            vec![RuleId::B1, RuleId::HC1, RuleId::HC2]
        );
        assert_eq!(set.len(), 3);
        assert!(!set.contains(RuleId::U1));
    }

    #[test]
    fn serde_shapes() {
        let conf = Configuration {
            d: vec![0, 2, 1],
            par: vec![None, Some(NodeId(2)), Some(NodeId(0))],
        };
        let json = serde_json::to_string(&conf).unwrap();
        assert_eq!(json, r#"{"d":[0,2,1],"par":[null,2,0]}"#);
        let back: Configuration = serde_json::from_str(&json).unwrap();
        assert_eq!(back, conf);

        let spec = AlgorithmSpec::hc(4);
        let json = serde_json::to_string(&spec).unwrap();
        let back: AlgorithmSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        assert!(json.contains(r#""variant":"HC""#));
        // Policies have defaults, so terse specs deserialize too.
        let terse: AlgorithmSpec =
            serde_json::from_str(r#"{"variant":"FHC","d_bound":7}"#).unwrap();
        assert_eq!(terse, AlgorithmSpec::fhc(7));
    }

    proptest! {
        /// Only the HC variant may enable two rules at one process.
        #[test]
        fn at_most_one_rule_outside_hc(n in 2u32..8, gseed in 0u64..60, cseed in 0u64..60) {
            let g = small_graph(n, gseed);
            for spec in [
                AlgorithmSpec::unbounded(),
                AlgorithmSpec::bounded(4),
                AlgorithmSpec::fhc(4),
            ] {
                let conf = match spec.variant {
                    Variant::U => random_configuration(&spec, &g, cseed, Some(6)).unwrap(),
                    _ => random_configuration(&spec, &g, cseed, None).unwrap(),
                };
                for p in g.processes() {
                    prop_assert!(enabled_rules(&spec, &g, &conf, p).len() <= 1);
                }
            }
            let hc = AlgorithmSpec::hc(4);
            let conf = random_configuration(&hc, &g, cseed, None).unwrap();
            for p in g.processes() {
                prop_assert!(enabled_rules(&hc, &g, &conf, p).len() <= 2);
            }
        }

        /// Firing any enabled rule keeps capped configurations inside their
        /// domain and parents inside the neighborhood.
        #[test]
        fn writes_stay_in_domain(n in 2u32..8, gseed in 0u64..40, cseed in 0u64..40, cap in 1u32..6) {
            let g = small_graph(n, gseed);
            for spec in [
                AlgorithmSpec::bounded(cap),
                AlgorithmSpec::hc(cap),
                AlgorithmSpec::fhc(cap),
            ] {
                let conf = random_configuration(&spec, &g, cseed, None).unwrap();
                for p in g.processes() {
                    for rule in enabled_rules(&spec, &g, &conf, p).iter() {
                        let next = apply_rule(&spec, &g, &conf, p, rule).unwrap();
                        prop_assert_eq!(next.validate(&spec, &g), Ok(()),
                            "{} fired {} at {}", spec.tag(), rule, p);
                    }
                }
            }
        }

        /// A terminal configuration of the uncapped variant has exact
        /// distances: termination is never an artifact of the sampler.
        #[test]
        fn unbounded_terminal_means_exact(n in 2u32..7, gseed in 0u64..40, cseed in 0u64..40) {
            let g = small_graph(n, gseed);
            let spec = AlgorithmSpec::unbounded();
            let conf = random_configuration(&spec, &g, cseed, Some(4)).unwrap();
            if is_terminal(&spec, &g, &conf) {
                for p in g.processes() {
                    prop_assert_eq!(conf.d(p), g.distance(p));
                }
            }
        }
    }
}
