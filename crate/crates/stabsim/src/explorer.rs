//! Exhaustive state-space checking on small bounded instances.
//!
//! For the capped variants the set of configurations is finite: a non-root
//! process has `D · deg(p)` local states (a distance in `[1, D]` and a
//! parent pointer). On instances small enough to enumerate — the default
//! cap is [`DEFAULT_ENUMERATION_CAP`] configurations — we can build the
//! *entire* step relation (every nonempty subset of enabled processes,
//! every choice among multiply-enabled rules) and decide properties by
//! inspection instead of sampling: termination is acyclicity of the
//! relation, partial correctness is "sinks are exactly the legitimate
//! configurations", and the worst-case step count is the longest path.
//!
//! A couple of deliberately corrupted rule sets ([`Mutation`]) serve as
//! negative controls: they confirm the checkers actually fire when an
//! algorithm is broken, rather than vacuously passing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithms::{
    enabled_rules, min_d, rule_write, AlgorithmSpec, Configuration, RuleId, RuleSet, Variant,
};
use crate::scheduler::Move;
use crate::topology::{Graph, NodeId};
use crate::verifier::is_legitimate;

/// Default ceiling on how many configurations we are willing to enumerate.
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

/// Problems setting up or running an exhaustive exploration.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExploreError {
    #[error("the unbounded variant has an infinite configuration space")]
    UnboundedVariant,
    #[error("configuration count overflows 128-bit arithmetic")]
    Overflow,
    #[error("{count} configurations exceed the enumeration cap of {cap}")]
    TooLarge { count: u128, cap: u128 },
    #[error("the step relation has a cycle; longest path is undefined")]
    HasCycle,
    #[error("graph census is limited to n <= {max}, got {n}")]
    CensusTooLarge { n: u32, max: u32 },
}

/// The finite space of all valid configurations of a bounded variant on a
/// graph, addressable by index.
///
/// Indices are mixed-radix numbers: non-root process `p` contributes a
/// digit of radix `D · deg(p)` encoding `(d_p − 1, parent position)`,
/// least-significant digit first in id order. The root is pinned and
/// contributes nothing.
pub struct ConfigSpace<'a> {
    spec: AlgorithmSpec,
    g: &'a Graph,
    radices: Vec<u128>,
    count: u128,
}

impl<'a> ConfigSpace<'a> {
    pub fn new(spec: &AlgorithmSpec, g: &'a Graph) -> Result<Self, ExploreError> {
        let d_cap = spec.d_bound.ok_or(ExploreError::UnboundedVariant)?;
        let mut radices = Vec::new();
        let mut count: u128 = 1;
        for p in g.processes() {
            let radix = d_cap as u128 * g.degree(p) as u128;
            count = count.checked_mul(radix).ok_or(ExploreError::Overflow)?;
            radices.push(radix);
        }
        Ok(ConfigSpace {
            spec: *spec,
            g,
            radices,
            count,
        })
    }

    pub fn spec(&self) -> &AlgorithmSpec {
        &self.spec
    }

    pub fn graph(&self) -> &Graph {
        self.g
    }

    /// Total number of configurations, `∏ D · deg(p)` over processes.
    pub fn count(&self) -> u128 {
        self.count
    }

    /// Whether the space fits under an enumeration cap.
    pub fn require_enumerable(&self, cap: u128) -> Result<(), ExploreError> {
        if self.count > cap {
            return Err(ExploreError::TooLarge {
                count: self.count,
                cap,
            });
        }
        Ok(())
    }

    /// Decodes an index into its configuration.
    pub fn config_at(&self, mut index: u128) -> Configuration {
        debug_assert!(index < self.count);
        let mut d = vec![0u32; self.g.node_count()];
        let mut par = vec![None; self.g.node_count()];
        for (k, p) in self.g.processes().enumerate() {
            let digit = (index % self.radices[k]) as u32;
            index /= self.radices[k];
            let deg = self.g.degree(p) as u32;
            d[p.index()] = digit / deg + 1;
            par[p.index()] = Some(self.g.neighbors(p)[(digit % deg) as usize]);
        }
        Configuration { d, par }
    }

    /// Encodes a configuration back into its index.
    pub fn index_of(&self, conf: &Configuration) -> u128 {
        let mut index: u128 = 0;
        let mut scale: u128 = 1;
        for (k, p) in self.g.processes().enumerate() {
            let deg = self.g.degree(p) as u32;
            let parent = conf.par(p).expect("process without parent");
            let pos = self
                .g
                .neighbors(p)
                .iter()
                .position(|&q| q == parent)
                .expect("parent is a neighbor") as u32;
            let digit = (conf.d(p) - 1) * deg + pos;
            index += digit as u128 * scale;
            scale *= self.radices[k];
        }
        index
    }

    /// All configurations in index order. Check
    /// [`Self::require_enumerable`] first.
    pub fn iter(&self) -> impl Iterator<Item = Configuration> + '_ {
        (0..self.count).map(|i| self.config_at(i))
    }
}

/// Deliberate corruptions of the bounded variant's rule set, used as
/// negative controls for the checkers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mutation {
    /// Remove the cap-parking rule: a process whose whole neighborhood
    /// sits at the cap has no enabled rule at all.
    DropB3,
    /// Fire the cap-parking rule whenever the neighborhood minimum is at
    /// the cap — even if the process already holds the cap, in which case
    /// the write changes nothing and the process can spin forever.
    WeakenB3Guard,
}

/// Enabled rules under an optional rule-set corruption. With `None` this
/// is exactly [`enabled_rules`].
pub fn mutated_enabled_rules(
    mutation: Option<Mutation>,
    spec: &AlgorithmSpec,
    g: &Graph,
    conf: &Configuration,
    p: NodeId,
) -> RuleSet {
    let base = enabled_rules(spec, g, conf, p);
    match mutation {
        None => base,
        Some(Mutation::DropB3) => base
            .iter()
            .filter(|&r| r != RuleId::B3)
            .collect(),
        Some(Mutation::WeakenB3Guard) => {
            if spec.variant == Variant::B
                && !g.is_root(p)
                && min_d(g, conf, p) == spec.cap()
            {
                let mut set = base;
                set.insert(RuleId::B3);
                set
            } else {
                base
            }
        }
    }
}

/// The complete step relation over a configuration space.
pub struct TransitionGraph {
    /// Successor configuration indices, sorted and deduplicated.
    pub successors: Vec<Vec<u32>>,
    /// Whether the configuration has no enabled process.
    pub terminal: Vec<bool>,
}

/// Builds the full step relation: for every configuration, one successor
/// per nonempty subset of enabled processes and per choice of one enabled
/// rule for each selected process (distinct choices may collide on the
/// same successor state; successors are kept as a set).
pub fn build_transition_graph(
    space: &ConfigSpace,
    mutation: Option<Mutation>,
) -> Result<TransitionGraph, ExploreError> {
    space.require_enumerable(DEFAULT_ENUMERATION_CAP)?;
    let n = space.count() as usize;
    let (spec, g) = (space.spec(), space.graph());
    let mut successors: Vec<Vec<u32>> = Vec::with_capacity(n);
    let mut terminal = Vec::with_capacity(n);
    for index in 0..n {
        let conf = space.config_at(index as u128);
        let enabled: Vec<(NodeId, Vec<RuleId>)> = g
            .processes()
            .filter_map(|p| {
                let rules: Vec<RuleId> =
                    mutated_enabled_rules(mutation, spec, g, &conf, p).iter().collect();
                (!rules.is_empty()).then_some((p, rules))
            })
            .collect();
        terminal.push(enabled.is_empty());
        let mut succ = Vec::new();
        for_each_step(&enabled, |moves| {
            let mut next = conf.clone();
            // Composite atomicity: writes computed against `conf`, then
            // landed together.
            for mv in moves {
                let w = rule_write(spec, g, &conf, mv.process, mv.rule);
                next.d[mv.process.index()] = w.d;
                next.par[mv.process.index()] = Some(w.par);
            }
            succ.push(space.index_of(&next) as u32);
        });
        succ.sort_unstable();
        succ.dedup();
        successors.push(succ);
    }
    Ok(TransitionGraph {
        successors,
        terminal,
    })
}

/// Calls `f` once per daemon choice: every nonempty subset of `enabled`,
/// with every combination of one rule per selected process.
fn for_each_step(enabled: &[(NodeId, Vec<RuleId>)], mut f: impl FnMut(&[Move])) {
    let n = enabled.len();
    assert!(n < 24, "too many enabled processes to expand subsets");
    let mut moves: Vec<Move> = Vec::with_capacity(n);
    for mask in 1u32..(1u32 << n) {
        let selected: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let mut choice = vec![0usize; selected.len()];
        loop {
            moves.clear();
            for (slot, &i) in selected.iter().enumerate() {
                moves.push(Move::new(enabled[i].0, enabled[i].1[choice[slot]]));
            }
            f(&moves);
            // Odometer over the per-process rule choices.
            let mut carry = 0;
            while carry < selected.len() {
                choice[carry] += 1;
                if choice[carry] < enabled[selected[carry]].1.len() {
                    break;
                }
                choice[carry] = 0;
                carry += 1;
            }
            if carry == selected.len() {
                break;
            }
        }
    }
}

/// Result of the acyclicity check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TerminationReport {
    pub acyclic: bool,
    /// A witness cycle as configuration indices (the first index is
    /// reachable again from the last), when one exists.
    pub cycle: Option<Vec<u32>>,
}

/// Decides whether the step relation is acyclic. Over a finite space,
/// acyclicity is exactly "every execution is finite".
pub fn check_termination(tg: &TransitionGraph) -> TerminationReport {
    const WHITE: u8 = 0;
    const GRAY: u8 = 1;
    const BLACK: u8 = 2;
    let n = tg.successors.len();
    let mut color = vec![WHITE; n];
    for root in 0..n {
        if color[root] != WHITE {
            continue;
        }
        // Iterative DFS; the stack holds (node, next successor position).
        let mut stack: Vec<(u32, usize)> = vec![(root as u32, 0)];
        color[root] = GRAY;
        while let Some(&mut (node, ref mut pos)) = stack.last_mut() {
            let succ = &tg.successors[node as usize];
            if *pos == succ.len() {
                color[node as usize] = BLACK;
                stack.pop();
                continue;
            }
            let next = succ[*pos];
            *pos += 1;
            match color[next as usize] {
                WHITE => {
                    color[next as usize] = GRAY;
                    stack.push((next, 0));
                }
                GRAY => {
                    // Found a back edge: the cycle is the stack suffix
                    // starting at `next`.
                    let start = stack
                        .iter()
                        .position(|&(v, _)| v == next)
                        .expect("gray nodes are on the stack");
                    let cycle = stack[start..].iter().map(|&(v, _)| v).collect();
                    return TerminationReport {
                        acyclic: false,
                        cycle: Some(cycle),
                    };
                }
                _ => {}
            }
        }
    }
    TerminationReport {
        acyclic: true,
        cycle: None,
    }
}

/// Longest path in the (acyclic) step relation: the exact worst-case
/// number of steps any execution can take on this instance. At most
/// `count − 1`, since an execution never revisits a configuration.
pub fn longest_path(tg: &TransitionGraph) -> Result<u64, ExploreError> {
    longest_path_filtered(tg, |_| true)
}

/// Longest path through *illegitimate* configurations only: the exact
/// worst-case number of steps before legitimacy holds, excluding
/// the final step into the legitimate sink. This is the quantity the
/// generic `count − 2` bound applies to — an execution's illegitimate
/// prefix consists of distinct configurations and omits at least the
/// legitimate configuration it eventually reaches.
pub fn longest_illegitimate_path(
    space: &ConfigSpace,
    tg: &TransitionGraph,
) -> Result<u64, ExploreError> {
    let g = space.graph();
    let illegit: Vec<bool> = (0..space.count())
        .map(|i| !is_legitimate(g, &space.config_at(i)))
        .collect();
    longest_path_filtered(tg, |i| illegit[i])
}

/// DAG longest-path over the subgraph induced by `keep`.
fn longest_path_filtered(
    tg: &TransitionGraph,
    keep: impl Fn(usize) -> bool,
) -> Result<u64, ExploreError> {
    let n = tg.successors.len();
    let mut depth: Vec<Option<u64>> = vec![None; n];
    for root in 0..n {
        if depth[root].is_some() || !keep(root) {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        while let Some(&mut (node, ref mut pos)) = stack.last_mut() {
            let succ = &tg.successors[node];
            if *pos == succ.len() {
                let best = succ
                    .iter()
                    .filter(|&&s| keep(s as usize))
                    .map(|&s| depth[s as usize].expect("successors resolved first"))
                    .max()
                    .map_or(0, |m| m + 1);
                depth[node] = Some(best);
                stack.pop();
                continue;
            }
            let next = succ[*pos] as usize;
            *pos += 1;
            if keep(next) && depth[next].is_none() {
                if stack.iter().any(|&(v, _)| v == next) {
                    return Err(ExploreError::HasCycle);
                }
                stack.push((next, 0));
            }
        }
    }
    Ok(depth.into_iter().flatten().max().unwrap_or(0))
}

/// Comparison of the sinks of the step relation against the legitimate
/// configurations, with both inclusions checked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SinkReport {
    pub sink_count: u64,
    pub legitimate_count: u64,
    /// True when sinks and legitimate configurations coincide as sets.
    pub equal: bool,
    /// Sample of terminal-but-not-legitimate configuration indices.
    pub spurious_sinks: Vec<u32>,
    /// Sample of legitimate-but-not-terminal configuration indices.
    pub live_legitimate: Vec<u32>,
}

const REPORT_SAMPLE: usize = 16;

/// Checks that the sinks of the relation are exactly the legitimate
/// configurations. With a cap below the graph's root eccentricity the
/// equality genuinely fails (no legitimate configuration even exists);
/// the report states the facts and leaves judgement to the caller.
pub fn check_sinks(space: &ConfigSpace, tg: &TransitionGraph) -> SinkReport {
    let g = space.graph();
    let mut report = SinkReport {
        sink_count: 0,
        legitimate_count: 0,
        equal: true,
        spurious_sinks: Vec::new(),
        live_legitimate: Vec::new(),
    };
    for index in 0..space.count() {
        let conf = space.config_at(index);
        let sink = tg.terminal[index as usize];
        let legit = is_legitimate(g, &conf);
        report.sink_count += sink as u64;
        report.legitimate_count += legit as u64;
        if sink != legit {
            report.equal = false;
            let bucket = if sink {
                &mut report.spurious_sinks
            } else {
                &mut report.live_legitimate
            };
            if bucket.len() < REPORT_SAMPLE {
                bucket.push(index as u32);
            }
        }
    }
    report
}

/// The generic step bound for the bounded variants: the number of
/// configurations minus two, clamped at zero. (The clamp matters only for
/// the degenerate single-edge, `D = 1` instance whose space has exactly
/// one configuration.) Useful as a default run budget.
pub fn state_space_bound(spec: &AlgorithmSpec, g: &Graph) -> Result<u128, ExploreError> {
    let space = ConfigSpace::new(spec, g)?;
    Ok(space.count().saturating_sub(2))
}

/// Largest `n` accepted by [`connected_census`]; the census is brute force
/// over all edge subsets, so it grows as `2^(n(n-1)/2)`.
pub const CENSUS_MAX_NODES: u32 = 6;

/// Every connected labeled graph on `n` nodes, rooted at node 0.
///
/// Fixing the root at node 0 loses nothing: relabeling maps any rooted
/// connected graph onto one in this list. Counts for n = 1..4 are
/// 1, 1, 4, 38 (no isomorphism dedup — duplicates are harmless for
/// exhaustive checking).
pub fn connected_census(n: u32) -> Result<Vec<Graph>, ExploreError> {
    if n == 0 || n > CENSUS_MAX_NODES {
        return Err(ExploreError::CensusTooLarge {
            n,
            max: CENSUS_MAX_NODES,
        });
    }
    let pairs: Vec<(NodeId, NodeId)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (NodeId(i), NodeId(j))))
        .collect();
    let mut graphs = Vec::new();
    for mask in 0u64..(1u64 << pairs.len()) {
        let edges: Vec<(NodeId, NodeId)> = pairs
            .iter()
            .enumerate()
            .filter(|(b, _)| mask & (1 << b) != 0)
            .map(|(_, &e)| e)
            .collect();
        // `from_edges` rejects disconnected graphs, which is the filter.
        if let Ok(g) = Graph::from_edges(n, NodeId(0), &edges, &[]) {
            graphs.push(g);
        }
    }
    Ok(graphs)
}

/// One instance's worth of exhaustive results.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub nodes: u32,
    pub edges: u32,
    pub variant: Variant,
    pub d: u32,
    pub config_count: u64,
    pub acyclic: bool,
    pub sinks_equal: bool,
    /// Longest execution overall; at most `config_count − 1`.
    pub longest_path: u64,
    /// Longest execution fragment within illegitimate configurations; at
    /// most `bound`.
    pub stabilization_path: u64,
    pub bound: u64,
}

/// Runs the full exhaustive battery: every connected graph on up to
/// `n_max` nodes, every bounded variant, every cap `D` from the diameter
/// (at least 1) to diameter + `extra_d`. Returns one entry per instance;
/// asserting over them is the caller's business.
pub fn exhaustive_sweep(n_max: u32, extra_d: u32) -> Result<Vec<SweepEntry>, ExploreError> {
    let mut entries = Vec::new();
    for n in 1..=n_max {
        for g in connected_census(n)? {
            let diam = g.diameter();
            let d_lo = diam.max(1);
            for d in d_lo..=diam + extra_d {
                for variant in [Variant::B, Variant::Hc, Variant::Fhc] {
                    let spec = match variant {
                        Variant::B => AlgorithmSpec::bounded(d),
                        Variant::Hc => AlgorithmSpec::hc(d),
                        Variant::Fhc => AlgorithmSpec::fhc(d),
                        Variant::U => unreachable!(),
                    };
                    let space = ConfigSpace::new(&spec, &g)?;
                    let tg = build_transition_graph(&space, None)?;
                    let termination = check_termination(&tg);
                    let (longest, stab) = if termination.acyclic {
                        (
                            longest_path(&tg)?,
                            longest_illegitimate_path(&space, &tg)?,
                        )
                    } else {
                        (0, 0)
                    };
                    let sinks = check_sinks(&space, &tg);
                    entries.push(SweepEntry {
                        nodes: n,
                        edges: g.edge_count() as u32,
                        variant,
                        d,
                        config_count: space.count() as u64,
                        acyclic: termination.acyclic,
                        sinks_equal: sinks.equal,
                        longest_path: longest,
                        stabilization_path: stab,
                        bound: state_space_bound(&spec, &g)? as u64,
                    });
                }
            }
        }
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::apply_step;
    use crate::topology::{build_line, build_lollipop};
    use std::collections::{BTreeSet, HashSet};

    #[test]
    fn space_counts_follow_the_degree_product() {
        // R - p1 - p2 with D = 2: p1 has 2 neighbors, p2 has 1, so the
        // space holds (2·2)·(2·1) = 8 configurations and the generic step
        // bound is 6.
        let g = build_line(2).unwrap();
        let spec = AlgorithmSpec::bounded(2);
        let space = ConfigSpace::new(&spec, &g).unwrap();
        assert_eq!(space.count(), 8);
        assert_eq!(state_space_bound(&spec, &g).unwrap(), 6);
        assert_eq!(space.count(), state_space_bound(&spec, &g).unwrap() + 2);
    }

    #[test]
    fn single_edge_space_is_degenerate() {
        let g = build_line(1).unwrap();
        let spec = AlgorithmSpec::bounded(1);
        let space = ConfigSpace::new(&spec, &g).unwrap();
        assert_eq!(space.count(), 1);
        // 1 − 2 clamps to zero.
        assert_eq!(state_space_bound(&spec, &g).unwrap(), 0);
        let only = space.config_at(0);
        assert!(is_legitimate(&g, &only));
        let tg = build_transition_graph(&space, None).unwrap();
        assert!(tg.terminal[0]);
        let sinks = check_sinks(&space, &tg);
        assert!(sinks.equal);
        assert_eq!((sinks.sink_count, sinks.legitimate_count), (1, 1));
    }

    #[test]
    fn unbounded_variant_is_rejected() {
        let g = build_line(2).unwrap();
        assert_eq!(
            ConfigSpace::new(&AlgorithmSpec::unbounded(), &g).err(),
            Some(ExploreError::UnboundedVariant)
        );
    }

    #[test]
    fn indices_and_configurations_roundtrip() {
        let g = build_lollipop(2).unwrap();
        let spec = AlgorithmSpec::hc(3);
        let space = ConfigSpace::new(&spec, &g).unwrap();
        let mut seen = HashSet::new();
        for (i, conf) in space.iter().enumerate() {
            conf.validate(&spec, &g).unwrap();
            assert_eq!(space.index_of(&conf), i as u128);
            assert!(seen.insert(conf.clone()), "duplicate configuration");
        }
        assert_eq!(seen.len() as u128, space.count());
    }

    #[test]
    fn successors_match_an_independent_recomputation() {
        // Recompute a few configurations' successor sets through the
        // engine's validated step application instead of the builder's
        // inline write loop.
        let g = build_line(2).unwrap();
        let spec = AlgorithmSpec::hc(3);
        let space = ConfigSpace::new(&spec, &g).unwrap();
        let tg = build_transition_graph(&space, None).unwrap();
        for index in (0..space.count()).step_by(2) {
            let conf = space.config_at(index);
            let enabled: Vec<(NodeId, Vec<RuleId>)> = g
                .processes()
                .filter_map(|p| {
                    let rules: Vec<RuleId> =
                        enabled_rules(&spec, &g, &conf, p).iter().collect();
                    (!rules.is_empty()).then_some((p, rules))
                })
                .collect();
            let mut expected = BTreeSet::new();
            for_each_step(&enabled, |moves| {
                let (next, _) = apply_step(&spec, &g, &conf, moves).unwrap();
                expected.insert(space.index_of(&next) as u32);
            });
            assert_eq!(
                tg.successors[index as usize]
                    .iter()
                    .copied()
                    .collect::<BTreeSet<_>>(),
                expected
            );
            assert_eq!(tg.terminal[index as usize], expected.is_empty());
        }
    }

    #[test]
    fn two_singly_enabled_processes_give_three_successors() {
        // d = [0, 2, 1] with a roomy cap: both processes are off their
        // neighborhood minimum, so each has exactly one enabled rule and
        // the daemon has three choices: {p1}, {p2}, {p1, p2}.
        let g = build_line(2).unwrap();
        let spec = AlgorithmSpec::bounded(3);
        let space = ConfigSpace::new(&spec, &g).unwrap();
        let conf = Configuration {
            d: vec![0, 2, 1],
            par: vec![None, Some(NodeId(0)), Some(NodeId(1))],
        };
        let tg = build_transition_graph(&space, None).unwrap();
        assert_eq!(tg.successors[space.index_of(&conf) as usize].len(), 3);
    }

    #[test]
    fn bounded_variants_terminate_and_sinks_are_legitimate() {
        for g in [build_line(3).unwrap(), build_lollipop(2).unwrap()] {
            let diam = g.diameter();
            for d in diam..=diam + 1 {
                for spec in [
                    AlgorithmSpec::bounded(d),
                    AlgorithmSpec::hc(d),
                    AlgorithmSpec::fhc(d),
                ] {
                    let space = ConfigSpace::new(&spec, &g).unwrap();
                    let tg = build_transition_graph(&space, None).unwrap();
                    let termination = check_termination(&tg);
                    assert!(termination.acyclic, "{} D={d}", spec.tag());
                    let sinks = check_sinks(&space, &tg);
                    assert!(sinks.equal, "{} D={d}: {sinks:?}", spec.tag());
                    let longest = longest_path(&tg).unwrap();
                    let stab = longest_illegitimate_path(&space, &tg).unwrap();
                    let bound = state_space_bound(&spec, &g).unwrap();
                    assert!(stab as u128 <= bound, "{} D={d}", spec.tag());
                    assert!((longest as u128) < space.count(), "{} D={d}", spec.tag());
                    assert!(stab <= longest && longest <= stab + 1, "{} D={d}", spec.tag());
                    assert!(longest >= diam as u64, "{} D={d}", spec.tag());
                }
            }
        }
    }

    #[test]
    fn caps_below_the_eccentricity_lose_legitimacy_and_gain_sinks() {
        // Height-chasing with D = 2 on a diameter-3 line: no configuration
        // can be legitimate (p3 would need distance 3), yet terminal
        // configurations exist — the report states the mismatch.
        let g = build_line(3).unwrap();
        let spec = AlgorithmSpec::hc(2);
        let space = ConfigSpace::new(&spec, &g).unwrap();
        let tg = build_transition_graph(&space, None).unwrap();
        assert!(check_termination(&tg).acyclic);
        let sinks = check_sinks(&space, &tg);
        assert!(!sinks.equal);
        assert_eq!(sinks.legitimate_count, 0);
        assert!(sinks.sink_count > 0);
        assert!(!sinks.spurious_sinks.is_empty());
    }

    #[test]
    fn fast_variant_relation_is_a_subrelation_of_the_chasing_one() {
        let g = build_lollipop(2).unwrap();
        let d = 3;
        let hc_space = ConfigSpace::new(&AlgorithmSpec::hc(d), &g).unwrap();
        let fhc_space = ConfigSpace::new(&AlgorithmSpec::fhc(d), &g).unwrap();
        assert_eq!(hc_space.count(), fhc_space.count());
        let hc = build_transition_graph(&hc_space, None).unwrap();
        let fhc = build_transition_graph(&fhc_space, None).unwrap();
        let mut strictly_smaller = false;
        for i in 0..hc_space.count() as usize {
            let hc_succ: BTreeSet<u32> = hc.successors[i].iter().copied().collect();
            let fhc_succ: BTreeSet<u32> = fhc.successors[i].iter().copied().collect();
            assert!(
                fhc_succ.is_subset(&hc_succ),
                "config {i}: fast variant invented a step"
            );
            strictly_smaller |= fhc_succ.len() < hc_succ.len();
        }
        assert!(strictly_smaller, "restriction should bite somewhere");
    }

    #[test]
    fn fast_variant_never_enables_two_rules() {
        for g in [build_line(2).unwrap(), build_lollipop(2).unwrap()] {
            let diam = g.diameter();
            for d in diam..=diam + 2 {
                let spec = AlgorithmSpec::fhc(d);
                let space = ConfigSpace::new(&spec, &g).unwrap();
                for conf in space.iter() {
                    for p in g.processes() {
                        assert!(
                            enabled_rules(&spec, &g, &conf, p).len() <= 1,
                            "two rules at {p} in {conf:?}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn census_counts_match_the_labeled_connected_series() {
        for (n, expected) in [(1u32, 1usize), (2, 1), (3, 4), (4, 38)] {
            let graphs = connected_census(n).unwrap();
            assert_eq!(graphs.len(), expected, "n = {n}");
            for g in &graphs {
                assert_eq!(g.node_count() as u32, n);
                assert!(g.is_root(NodeId(0)));
            }
        }
        assert_eq!(
            connected_census(CENSUS_MAX_NODES + 1).err(),
            Some(ExploreError::CensusTooLarge {
                n: CENSUS_MAX_NODES + 1,
                max: CENSUS_MAX_NODES
            })
        );
    }

    #[test]
    fn weakened_cap_guard_produces_a_livelock_cycle() {
        // With the guard weakened, a process already parked at the cap
        // whose neighborhood minimum equals the cap rewrites its own state
        // unchanged: a self-loop the cycle checker must find.
        let g = build_line(2).unwrap();
        let spec = AlgorithmSpec::bounded(2);
        let space = ConfigSpace::new(&spec, &g).unwrap();
        let tg = build_transition_graph(&space, Some(Mutation::WeakenB3Guard)).unwrap();
        let report = check_termination(&tg);
        assert!(!report.acyclic);
        let cycle = report.cycle.unwrap();
        assert!(!cycle.is_empty());
        // The witness here is a genuine livelock: a single state stepping
        // to itself.
        assert_eq!(cycle.len(), 1);
        let idx = cycle[0];
        assert!(tg.successors[idx as usize].contains(&idx));
        // And it is the d = D livelock: the spinning process reads the cap
        // everywhere and already holds it.
        let conf = space.config_at(idx as u128);
        assert!(g
            .processes()
            .any(|p| conf.d(p) == 2 && min_d(&g, &conf, p) == 2));
    }

    #[test]
    fn dropping_the_cap_rule_cannot_create_cycles() {
        // Removing a rule only removes steps: the remaining relation is a
        // subrelation of a provably acyclic one, so it stays acyclic. With
        // the cap at or above the diameter the sinks are even unchanged —
        // the mutation is invisible to both checkers on such instances.
        for n in 2..=3 {
            for g in connected_census(n).unwrap() {
                let diam = g.diameter();
                for d in diam.max(1)..=diam + 1 {
                    let spec = AlgorithmSpec::bounded(d);
                    let space = ConfigSpace::new(&spec, &g).unwrap();
                    let tg = build_transition_graph(&space, Some(Mutation::DropB3)).unwrap();
                    assert!(check_termination(&tg).acyclic, "n={n} D={d}");
                    let sinks = check_sinks(&space, &tg);
                    assert!(sinks.equal, "n={n} D={d}: {sinks:?}");
                }
            }
        }
    }

    #[test]
    fn sweep_entries_cover_every_instance_and_pass() {
        let entries = exhaustive_sweep(3, 2).unwrap();
        // 1 + 1 + 4 graphs, 3 caps each, 3 variants each — except the
        // single-node graph, whose diameter-0 cap range collapses by the
        // clamp to [1..2], giving 2 caps.
        let expected = 3 * (2 + 3 + 4 * 3);
        assert_eq!(entries.len(), expected);
        for e in &entries {
            assert!(e.acyclic, "{e:?}");
            assert!(e.sinks_equal, "{e:?}");
            assert!(e.stabilization_path <= e.bound, "{e:?}");
            assert!(e.longest_path < e.config_count, "{e:?}");
        }
        // The full-path bound is tight: the single-edge cap-2 instance has
        // two configurations and a one-step execution between them, so its
        // longest path exceeds the stabilization bound by one.
        assert!(entries
            .iter()
            .any(|e| e.longest_path == e.bound + 1 && e.config_count == 2));
    }
}
