//! Checking configurations and runs: is the output really a breadth-first
//! spanning tree, and how far along is a run that has not finished yet?
//!
//! Beyond the final yes/no ([`is_legitimate`], [`verify_bfs_tree`]), this
//! module measures *partial* progress through staged milestone chains, one
//! per algorithm family. Stage `i` of a chain is a predicate over
//! configurations that, once reached, is never left (an attractor), and the
//! convergence arguments promise one more stage per round. Tracking the
//! highest contiguous stage along a run therefore gives a monotone progress
//! bar, and checking "stage ≥ round number" validates the round bounds far
//! more sharply than waiting for termination.
//!
//! The module also recognizes the recursively-defined configuration classes
//! of the layered worst-case family (see [`crate::topology::build_gk`]),
//! which the exponential-step schedule in [`crate::scenarios`] walks
//! through; class membership is what makes that schedule auditable instead
//! of just long.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::algorithms::{Configuration, Variant};
use crate::engine::ExecutionTrace;
use crate::topology::{GkLayout, Graph, NodeId};

/// A configuration is legitimate when every distance equals the true
/// distance from the root and every parent sits one step closer: exactly
/// the terminal configurations encoding a breadth-first spanning tree.
pub fn is_legitimate(g: &Graph, conf: &Configuration) -> bool {
    if conf.d(g.root()) != 0 || conf.par(g.root()).is_some() {
        return false;
    }
    g.processes().all(|p| {
        conf.d(p) == g.distance(p)
            && match conf.par(p) {
                Some(q) => g.neighbors(p).contains(&q) && g.distance(q) + 1 == g.distance(p),
                None => false,
            }
    })
}

/// The parent edges `(p, par_p)` claimed by a configuration, one per
/// process, in id order. Input for [`verify_bfs_tree`], and handy for
/// rendering.
pub fn extract_tree(g: &Graph, conf: &Configuration) -> Vec<(NodeId, NodeId)> {
    g.processes()
        .filter_map(|p| conf.par(p).map(|q| (p, q)))
        .collect()
}

/// Verdict on the parent structure of a configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum TreeVerdict {
    /// The parent pointers form a spanning tree of shortest paths.
    Valid,
    /// Adding `closing`'s parent edge closed a cycle.
    Cycle { closing: NodeId },
    /// Some processes have no parent path to the root.
    NotSpanning { unreached: Vec<NodeId> },
    /// The tree spans, but `process`'s tree path is longer than its
    /// distance to the root.
    NotShortest { process: NodeId },
}

/// Checks whether the parent pointers form a spanning tree in which every
/// tree path is a shortest path. Only the pointer structure is judged here;
/// distance *labels* are [`is_legitimate`]'s concern.
pub fn verify_bfs_tree(g: &Graph, conf: &Configuration) -> TreeVerdict {
    // Union-find over the undirected parent edges: a repeated component
    // means a cycle, since each process contributes exactly one edge.
    let mut parent: Vec<usize> = (0..g.node_count()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for p in g.processes() {
        let Some(q) = conf.par(p) else {
            return TreeVerdict::NotSpanning {
                unreached: vec![p],
            };
        };
        let (a, b) = (find(&mut parent, p.index()), find(&mut parent, q.index()));
        if a == b {
            return TreeVerdict::Cycle { closing: p };
        }
        parent[a] = b;
    }
    let root_comp = find(&mut parent, g.root().index());
    let unreached: Vec<NodeId> = g
        .processes()
        .filter(|p| find(&mut parent, p.index()) != root_comp)
        .collect();
    if !unreached.is_empty() {
        return TreeVerdict::NotSpanning { unreached };
    }
    for p in g.processes() {
        let q = conf.par(p).expect("checked above");
        if g.distance(q) + 1 != g.distance(p) {
            return TreeVerdict::NotShortest { process: p };
        }
    }
    TreeVerdict::Valid
}

/// Groups all nodes by their current distance value (the root lands in
/// group 0, and is the only possible member of it for valid
/// configurations).
pub fn partition_by_distance_value(
    g: &Graph,
    conf: &Configuration,
) -> BTreeMap<u32, Vec<NodeId>> {
    let mut groups: BTreeMap<u32, Vec<NodeId>> = BTreeMap::new();
    for p in g.nodes() {
        groups.entry(conf.d(p)).or_default().push(p);
    }
    groups
}

// --- Milestone chains ----------------------------------------------------

/// Stage `i` of the tree chain: every process within distance `i` of the
/// root carries its exact distance *and* a correct parent.
fn stage_correct_node(g: &Graph, conf: &Configuration, i: u32) -> bool {
    g.processes().all(|p| {
        g.distance(p) > i
            || (conf.d(p) == g.distance(p)
                && conf
                    .par(p)
                    .is_some_and(|q| conf.d(p) == conf.d(q) + 1))
    })
}

/// Stage `i` of the lower-bound chain: every process farther than `i` from
/// the root holds a distance value larger than `i`.
fn stage_sub(g: &Graph, conf: &Configuration, i: u32) -> bool {
    g.nodes()
        .all(|p| g.distance(p) <= i || conf.d(p) > i)
}

/// Stage `i` of the distance chain: every node within distance `i` carries
/// its exact distance (parents unconstrained).
fn stage_correct_d(g: &Graph, conf: &Configuration, i: u32) -> bool {
    g.nodes()
        .all(|p| g.distance(p) > i || conf.d(p) == g.distance(p))
}

/// Stage `i` of the chasing lower-bound chain: a process farther than `i`
/// holds a value larger than `i` — or exactly `i`, tolerated as long as a
/// neighbor sits at `i + 1` or below (the pair is still sinking together).
fn stage_ub(g: &Graph, conf: &Configuration, i: u32) -> bool {
    g.processes().all(|p| {
        g.distance(p) <= i
            || conf.d(p) > i
            || (conf.d(p) == i && g.neighbors(p).iter().any(|&q| conf.d(q) <= i + 1))
    })
}

/// Largest contiguous stage of a chain: the maximum `i ≤ diameter` such
/// that `stage(j)` holds for every `j ≤ i`. Taking the contiguous prefix —
/// rather than the largest single holding stage — is what makes the index
/// monotone along executions, because each stage is individually preserved
/// once the chain has climbed past it but stages are not nested in `i`.
fn chain_index(diameter: u32, stage: impl Fn(u32) -> bool) -> u32 {
    let mut reached = 0;
    for i in 0..=diameter {
        if !stage(i) {
            break;
        }
        reached = i;
    }
    reached
}

/// Progress of the update-style algorithms (unbounded and bounded): the
/// largest `i` such that all stages `j ≤ i` of the tree chain hold. Stage
/// `diameter` is exactly legitimacy.
pub fn att_index(g: &Graph, conf: &Configuration) -> u32 {
    chain_index(g.diameter(), |i| stage_correct_node(g, conf, i))
}

/// Progress measure matching the round-convergence argument for the
/// update-style algorithms: the tree chain joined with the lower-bound
/// chain. Climbs at least one stage per round under any daemon.
pub fn att_b_index(g: &Graph, conf: &Configuration) -> u32 {
    chain_index(g.diameter(), |i| {
        stage_correct_node(g, conf, i) && stage_sub(g, conf, i)
    })
}

/// Progress measure for the height-chasing algorithms: the distance chain
/// joined with its tolerant lower-bound chain. Stage 0 holds in every
/// configuration (non-root distances start at 1), and the fast variant
/// climbs one stage per synchronous round.
pub fn att_hc_index(g: &Graph, conf: &Configuration) -> u32 {
    chain_index(g.diameter(), |i| {
        stage_correct_d(g, conf, i) && stage_ub(g, conf, i)
    })
}

/// The chain appropriate to a variant: update-style algorithms are measured
/// by [`att_b_index`], chasing ones by [`att_hc_index`].
pub fn variant_index(variant: Variant, g: &Graph, conf: &Configuration) -> u32 {
    match variant {
        Variant::U | Variant::B => att_b_index(g, conf),
        Variant::Hc | Variant::Fhc => att_hc_index(g, conf),
    }
}

/// Milestone progress of a run, sampled at round boundaries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttractorReport {
    /// `indices[r]` is the variant-appropriate chain index after `r`
    /// completed rounds (entry 0 is the initial configuration).
    pub indices: Vec<u32>,
    /// Whether the final configuration is legitimate.
    pub legitimate: bool,
}

impl AttractorReport {
    /// Chain indices never decrease along a run.
    pub fn is_monotone(&self) -> bool {
        self.indices.windows(2).all(|w| w[0] <= w[1])
    }

    /// Whether the run climbed at least one stage per completed round — the
    /// sharp form of the round bounds: `indices[r] ≥ min(r, cap)`.
    pub fn one_stage_per_round(&self, cap: u32) -> bool {
        self.indices
            .iter()
            .enumerate()
            .all(|(r, &idx)| idx >= (r as u32).min(cap))
    }
}

/// Measures the variant-appropriate chain index at every round boundary of
/// a trace (plus the initial configuration).
pub fn round_progress(trace: &ExecutionTrace) -> AttractorReport {
    let g = &trace.graph;
    let mut indices = vec![variant_index(trace.spec.variant, g, &trace.initial)];
    for r in 0..trace.round_count {
        let conf = trace.config_at(trace.round_boundaries[r as usize]);
        indices.push(variant_index(trace.spec.variant, g, &conf));
    }
    AttractorReport {
        indices,
        legitimate: is_legitimate(g, &trace.final_config),
    }
}

// --- Configuration classes of the layered family -------------------------

/// The four recursively-defined configuration classes of the layered
/// family, parameterized by a counter `x` and a ceiling `z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConfClass {
    /// Level `l > 1` only: prefix in `C(x, z)`, new spine low, new tail high.
    A,
    /// Spine and tail high, counter on the previous tail (level 1: on `f.0`).
    B,
    /// Counter on the spine node `e.l`, everything below saturated.
    C,
    /// Counter on the tail node `f.l`, everything below saturated.
    Four,
}

impl ConfClass {
    pub const ALL: [ConfClass; 4] = [ConfClass::A, ConfClass::B, ConfClass::C, ConfClass::Four];

    pub fn name(self) -> &'static str {
        match self {
            ConfClass::A => "a",
            ConfClass::B => "b",
            ConfClass::C => "c",
            ConfClass::Four => "4",
        }
    }
}

/// Ill-posed class queries.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClassError {
    #[error("class level must be in [1, {k}], got {level}")]
    LevelOutOfRange { level: u32, k: u32 },
    #[error("class a does not exist at level 1")]
    ClassAAtLevelOne,
    #[error("class parameters need x >= 1 and z > 1, got x={x}, z={z}")]
    BadParameters { x: u32, z: u32 },
}

/// Tests whether `conf` restricted to the level-`level` prefix of the
/// layered family lies in `class(x, z)`.
///
/// Membership constrains only what the class definition pins down:
/// * the side nodes: `d = z - 1` on `h.0` and on `g.j`, `h.j` for `j ≤ level`;
/// * the couplings: `d_{e.j} = z` exactly when `par_{e.j} = g.j`, and
///   `d_{f.j} = z` exactly when `par_{f.j} = h.j` (with `h.0` for `f.0`);
/// * the class's own distance values on `e.j`/`f.j`/`f.0`, unfolded
///   recursively through the prefix levels.
///
/// Everything else — parents of side nodes, parents of spine/tail nodes
/// away from the ceiling, all state above `level` — is free, which is what
/// lets mid-drive configurations (whose low parents point upward) still be
/// classified.
pub fn in_conf_class(
    g: &Graph,
    layout: &GkLayout,
    conf: &Configuration,
    class: ConfClass,
    level: u32,
    x: u32,
    z: u32,
) -> Result<bool, ClassError> {
    if level < 1 || level > layout.k {
        return Err(ClassError::LevelOutOfRange {
            level,
            k: layout.k,
        });
    }
    if x < 1 || z <= 1 {
        return Err(ClassError::BadParameters { x, z });
    }
    let mut expected: Vec<(NodeId, u32)> = Vec::new();
    class_values(layout, class, level, x, z, &mut expected)?;
    // Side fixtures and couplings, shared by every class at this level.
    if conf.d(layout.h(0)) != z - 1 {
        return Ok(false);
    }
    for j in 1..=level {
        if conf.d(layout.g(j)) != z - 1 || conf.d(layout.h(j)) != z - 1 {
            return Ok(false);
        }
        let e = layout.e(j);
        if (conf.d(e) == z) != (conf.par(e) == Some(layout.g(j))) {
            return Ok(false);
        }
    }
    for j in 0..=level {
        let f = layout.f(j);
        if (conf.d(f) == z) != (conf.par(f) == Some(layout.h(j))) {
            return Ok(false);
        }
    }
    let _ = g; // the adjacency itself is implied by the layout
    Ok(expected.into_iter().all(|(p, d)| conf.d(p) == d))
}

/// Unfolds the recursive definition into explicit `(node, distance)`
/// requirements for the spine/tail nodes of levels `1..=level`.
fn class_values(
    layout: &GkLayout,
    class: ConfClass,
    level: u32,
    x: u32,
    z: u32,
    out: &mut Vec<(NodeId, u32)>,
) -> Result<(), ClassError> {
    if level == 1 {
        let (e1, f1, f0) = (layout.e(1), layout.f(1), layout.f(0));
        match class {
            ConfClass::A => return Err(ClassError::ClassAAtLevelOne),
            ConfClass::B => out.extend([(e1, z), (f1, z), (f0, x)]),
            ConfClass::C => out.extend([(e1, x), (f1, z), (f0, z)]),
            ConfClass::Four => out.extend([(e1, z), (f1, x), (f0, z)]),
        }
        return Ok(());
    }
    let (e, f) = (layout.e(level), layout.f(level));
    match class {
        ConfClass::A => {
            class_values(layout, ConfClass::C, level - 1, x, z, out)?;
            out.extend([(e, x), (f, z)]);
        }
        ConfClass::B => {
            class_values(layout, ConfClass::Four, level - 1, x, z, out)?;
            out.extend([(e, z), (f, z)]);
        }
        ConfClass::C => {
            class_values(layout, ConfClass::C, level - 1, z, z, out)?;
            out.extend([(e, x), (f, z)]);
        }
        ConfClass::Four => {
            class_values(layout, ConfClass::C, level - 1, z, z, out)?;
            out.extend([(e, z), (f, x)]);
        }
    }
    Ok(())
}
