//! Rooted undirected topologies.
//!
//! Node ids are dense integers `0..n-1` and the distinguished root is always
//! id `0` in built graphs; optional string labels name nodes after the roles
//! they play in the worst-case families (`p3`, `e.2`, `h.0`, ...). Every graph
//! carries an eagerly computed BFS distance oracle from the root, which the
//! rest of the crate treats as the ground truth for legitimacy and attractor
//! checks.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense process identifier. The root of a built graph is always `NodeId(0)`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TopologyError {
    #[error("line length must be at least 1")]
    LineTooShort,
    #[error("lollipop diameter must be at least 2")]
    LollipopTooSmall,
    #[error("family index k must be at least 1")]
    FamilyIndexZero,
    #[error("graph must have at least one node")]
    Empty,
    #[error("root id {0} out of range")]
    RootOutOfRange(u32),
    #[error("edge ({0}, {1}) mentions a node out of range")]
    EdgeOutOfRange(u32, u32),
    #[error("self-loop on node {0}")]
    SelfLoop(u32),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(u32, u32),
    #[error("graph is not connected (node {0} unreachable from the root)")]
    Disconnected(u32),
    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),
    #[error("label references node {0} out of range")]
    LabelOutOfRange(u32),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("graph does not carry the labels of the layered family (missing {0:?})")]
    NotLayeredFamily(String),
}

/// Rooted, connected, undirected graph with a cached root-distance oracle.
pub struct Graph {
    root: NodeId,
    adj: Vec<Vec<NodeId>>,
    labels: Vec<Option<String>>,
    label_index: HashMap<String, NodeId>,
    root_dist: Vec<u32>,
    diameter: OnceLock<u32>,
}

impl Clone for Graph {
    fn clone(&self) -> Self {
        let diameter = OnceLock::new();
        if let Some(d) = self.diameter.get() {
            let _ = diameter.set(*d);
        }
        Graph {
            root: self.root,
            adj: self.adj.clone(),
            labels: self.labels.clone(),
            label_index: self.label_index.clone(),
            root_dist: self.root_dist.clone(),
            diameter,
        }
    }
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root && self.adj == other.adj && self.labels == other.labels
    }
}
impl Eq for Graph {}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("root", &self.root)
            .field("n", &self.adj.len())
            .field("edges", &self.edge_count())
            .finish()
    }
}

impl Graph {
    /// Builds and validates a graph from an undirected edge list.
    ///
    /// Edges are symmetric and irreflexive; listing an edge twice (in either
    /// orientation) is rejected so that text-format round trips stay
    /// canonical. The graph must be connected.
    pub fn from_edges(
        n: u32,
        root: NodeId,
        edges: &[(NodeId, NodeId)],
        labels: &[(NodeId, &str)],
    ) -> Result<Graph, TopologyError> {
        if n == 0 {
            return Err(TopologyError::Empty);
        }
        if root.0 >= n {
            return Err(TopologyError::RootOutOfRange(root.0));
        }
        let mut adj = vec![Vec::new(); n as usize];
        let mut seen = BTreeSet::new();
        for &(u, v) in edges {
            if u.0 >= n || v.0 >= n {
                return Err(TopologyError::EdgeOutOfRange(u.0, v.0));
            }
            if u == v {
                return Err(TopologyError::SelfLoop(u.0));
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(TopologyError::DuplicateEdge(key.0 .0, key.1 .0));
            }
            adj[u.index()].push(v);
            adj[v.index()].push(u);
        }
        for list in &mut adj {
            list.sort();
        }
        let mut labels_vec = vec![None; n as usize];
        let mut label_index = HashMap::new();
        for &(id, text) in labels {
            if id.0 >= n {
                return Err(TopologyError::LabelOutOfRange(id.0));
            }
            if label_index.insert(text.to_owned(), id).is_some() {
                return Err(TopologyError::DuplicateLabel(text.to_owned()));
            }
            labels_vec[id.index()] = Some(text.to_owned());
        }
        let root_dist = bfs(&adj, root);
        if let Some(unreached) = root_dist.iter().position(|&d| d == u32::MAX) {
            return Err(TopologyError::Disconnected(unreached as u32));
        }
        Ok(Graph {
            root,
            adj,
            labels: labels_vec,
            label_index,
            root_dist,
            diameter: OnceLock::new(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn is_root(&self, p: NodeId) -> bool {
        p == self.root
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.adj.len() as u32).map(NodeId)
    }

    /// Non-root nodes in id order.
    pub fn processes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes().filter(move |&p| p != self.root)
    }

    pub fn neighbors(&self, p: NodeId) -> &[NodeId] {
        &self.adj[p.index()]
    }

    pub fn degree(&self, p: NodeId) -> usize {
        self.adj[p.index()].len()
    }

    pub fn label(&self, p: NodeId) -> Option<&str> {
        self.labels[p.index()].as_deref()
    }

    pub fn find_label(&self, label: &str) -> Option<NodeId> {
        self.label_index.get(label).copied()
    }

    /// Name used in diagnostics: the label when present, else the id.
    pub fn display_name(&self, p: NodeId) -> String {
        match self.label(p) {
            Some(l) => l.to_owned(),
            None => p.to_string(),
        }
    }

    /// Cached BFS distances from the root.
    pub fn root_distances(&self) -> &[u32] {
        &self.root_dist
    }

    /// `‖root, p‖`.
    pub fn distance(&self, p: NodeId) -> u32 {
        self.root_dist[p.index()]
    }

    /// BFS distances from an arbitrary source (uncached).
    pub fn distances_from(&self, s: NodeId) -> Vec<u32> {
        bfs(&self.adj, s)
    }

    /// Graph diameter, computed on first use and cached.
    pub fn diameter(&self) -> u32 {
        *self.diameter.get_or_init(|| {
            self.nodes()
                .map(|s| self.distances_from(s).into_iter().max().unwrap_or(0))
                .max()
                .unwrap_or(0)
        })
    }

    /// Undirected edge list with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for u in self.nodes() {
            for &v in self.neighbors(u) {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }
}

fn bfs(adj: &[Vec<NodeId>], s: NodeId) -> Vec<u32> {
    let mut dist = vec![u32::MAX; adj.len()];
    dist[s.index()] = 0;
    let mut queue = VecDeque::from([s]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u.index()] {
            if dist[v.index()] == u32::MAX {
                dist[v.index()] = dist[u.index()] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

/// Line `p0 - p1 - ... - p<len>` with `len` edges, rooted at `p0`.
pub fn build_line(len: u32) -> Result<Graph, TopologyError> {
    if len == 0 {
        return Err(TopologyError::LineTooShort);
    }
    let edges: Vec<_> = (0..len).map(|i| (NodeId(i), NodeId(i + 1))).collect();
    let labels: Vec<String> = (0..=len).map(|i| format!("p{i}")).collect();
    let label_refs: Vec<(NodeId, &str)> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (NodeId(i as u32), l.as_str()))
        .collect();
    Graph::from_edges(len + 1, NodeId(0), &edges, &label_refs)
}

/// Path `p0 ... p<diam+1>` plus the chord `{p<diam+1>, p<diam-1>}`; the
/// resulting diameter is exactly `diam`. Used by the bounded-variant and fast
/// parent-chasing lower-bound scenarios.
pub fn build_lollipop(diam: u32) -> Result<Graph, TopologyError> {
    if diam < 2 {
        return Err(TopologyError::LollipopTooSmall);
    }
    let n = diam + 2;
    let mut edges: Vec<_> = (0..diam + 1).map(|i| (NodeId(i), NodeId(i + 1))).collect();
    edges.push((NodeId(diam + 1), NodeId(diam - 1)));
    let labels: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
    let label_refs: Vec<(NodeId, &str)> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (NodeId(i as u32), l.as_str()))
        .collect();
    Graph::from_edges(n, NodeId(0), &edges, &label_refs)
}

/// Layered family on which the parent-chasing variant admits exponential
/// executions. `build_gk(k)` has `4k + 3` nodes and diameter `2k + 3`.
///
/// Level 1 is the chain `R - h.0 - f.0 - e.1 - f.1 - h.1` plus the pendant
/// `g.1 - e.1`; each later level `j` attaches `e.j` to `f.(j-1)`, the pendant
/// `g.j`, and the tail `e.j - f.j - h.j`.
pub fn build_gk(k: u32) -> Result<Graph, TopologyError> {
    if k == 0 {
        return Err(TopologyError::FamilyIndexZero);
    }
    let mut labels: Vec<String> = Vec::new();
    let add = |labels: &mut Vec<String>, text: String| -> NodeId {
        labels.push(text);
        NodeId(labels.len() as u32 - 1)
    };
    let root = add(&mut labels, "R".into());
    let f0 = add(&mut labels, "f.0".into());
    let e1 = add(&mut labels, "e.1".into());
    let f1 = add(&mut labels, "f.1".into());
    let h0 = add(&mut labels, "h.0".into());
    let g1 = add(&mut labels, "g.1".into());
    let h1 = add(&mut labels, "h.1".into());
    let mut edges = vec![(root, h0), (h0, f0), (f0, e1), (e1, f1), (f1, h1), (g1, e1)];
    let mut prev_f = f1;
    for j in 2..=k {
        let ej = add(&mut labels, format!("e.{j}"));
        let fj = add(&mut labels, format!("f.{j}"));
        let gj = add(&mut labels, format!("g.{j}"));
        let hj = add(&mut labels, format!("h.{j}"));
        edges.extend([(prev_f, ej), (gj, ej), (ej, fj), (fj, hj)]);
        prev_f = fj;
    }
    let label_refs: Vec<(NodeId, &str)> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (NodeId(i as u32), l.as_str()))
        .collect();
    Graph::from_edges(labels.len() as u32, NodeId(0), &edges, &label_refs)
}

/// Returns a copy of `g` with `y` fresh leaves attached to the root, labelled
/// `v.1`, `v.2`, ... (numbering continues across repeated calls).
pub fn add_root_leaves(g: &Graph, y: u32) -> Graph {
    let n = g.node_count() as u32;
    let mut edges = g.edges();
    let mut labels: Vec<(NodeId, String)> = g
        .nodes()
        .filter_map(|p| g.label(p).map(|l| (p, l.to_owned())))
        .collect();
    let existing_leaves = labels
        .iter()
        .filter(|(_, l)| l.starts_with("v."))
        .count() as u32;
    for i in 0..y {
        let id = NodeId(n + i);
        edges.push((g.root(), id));
        labels.push((id, format!("v.{}", existing_leaves + i + 1)));
    }
    let label_refs: Vec<(NodeId, &str)> = labels.iter().map(|(id, l)| (*id, l.as_str())).collect();
    Graph::from_edges(n + y, g.root(), &edges, &label_refs)
        .expect("adding leaves preserves validity")
}

/// Seeded random connected graph on `n` nodes rooted at 0: a random
/// attachment tree plus each remaining pair as an edge with probability
/// `extra_edge_prob`.
pub fn random_connected(n: u32, extra_edge_prob: f64, seed: u64) -> Result<Graph, TopologyError> {
    if n == 0 {
        return Err(TopologyError::Empty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 1..n {
        let parent = rng.gen_range(0..i);
        edges.push((NodeId(parent), NodeId(i)));
    }
    let tree: BTreeSet<_> = edges
        .iter()
        .map(|&(u, v)| (u.min(v), u.max(v)))
        .collect();
    for u in 0..n {
        for v in u + 1..n {
            let key = (NodeId(u), NodeId(v));
            if !tree.contains(&key) && rng.gen_bool(extra_edge_prob) {
                edges.push(key);
            }
        }
    }
    Graph::from_edges(n, NodeId(0), &edges, &[])
}

// ---------------------------------------------------------------------------
// Edge-list text format
// ---------------------------------------------------------------------------

/// Parses the edge-list text format:
///
/// ```text
/// # comment
/// root 0
/// label 0 R
/// 0 1
/// 1 2
/// ```
///
/// Node ids must be dense `0..n-1`; `#` starts a comment anywhere on a line.
pub fn parse_graph(input: &str) -> Result<Graph, TopologyError> {
    let mut root: Option<u32> = None;
    let mut edges: Vec<(u32, u32)> = Vec::new();
    let mut labels: Vec<(u32, String)> = Vec::new();
    for (lineno, raw) in input.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: &str| TopologyError::Parse {
            line: lineno + 1,
            msg: msg.to_owned(),
        };
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("root") => {
                let id: u32 = parts
                    .next()
                    .ok_or_else(|| err("`root` needs a node id"))?
                    .parse()
                    .map_err(|_| err("`root` needs a numeric node id"))?;
                if parts.next().is_some() {
                    return Err(err("trailing tokens after root id"));
                }
                if root.replace(id).is_some() {
                    return Err(err("multiple `root` lines"));
                }
            }
            Some("label") => {
                let id: u32 = parts
                    .next()
                    .ok_or_else(|| err("`label` needs a node id"))?
                    .parse()
                    .map_err(|_| err("`label` needs a numeric node id"))?;
                let text = parts
                    .next()
                    .ok_or_else(|| err("`label` needs a label string"))?;
                if parts.next().is_some() {
                    return Err(err("labels cannot contain whitespace"));
                }
                labels.push((id, text.to_owned()));
            }
            Some(u_tok) => {
                let u: u32 = u_tok.parse().map_err(|_| err("expected a node id"))?;
                let v: u32 = parts
                    .next()
                    .ok_or_else(|| err("edge line needs two node ids"))?
                    .parse()
                    .map_err(|_| err("expected a node id"))?;
                if parts.next().is_some() {
                    return Err(err("trailing tokens after edge"));
                }
                edges.push((u, v));
            }
            None => unreachable!("blank lines were skipped"),
        }
    }
    let root = root.ok_or(TopologyError::Parse {
        line: 0,
        msg: "missing `root` line".into(),
    })?;
    let n = edges
        .iter()
        .flat_map(|&(u, v)| [u, v])
        .chain([root])
        .max()
        .unwrap_or(root)
        + 1;
    let edge_ids: Vec<_> = edges
        .iter()
        .map(|&(u, v)| (NodeId(u), NodeId(v)))
        .collect();
    let label_refs: Vec<(NodeId, &str)> = labels
        .iter()
        .map(|(id, l)| (NodeId(*id), l.as_str()))
        .collect();
    Graph::from_edges(n, NodeId(root), &edge_ids, &label_refs)
}

/// Serializes to the canonical edge-list text form: `root`, sorted labels,
/// sorted edges with the smaller endpoint first. `parse_graph` of the output
/// reproduces the graph exactly.
pub fn serialize_graph(g: &Graph) -> String {
    let mut out = String::new();
    out.push_str(&format!("root {}\n", g.root()));
    for p in g.nodes() {
        if let Some(l) = g.label(p) {
            out.push_str(&format!("label {p} {l}\n"));
        }
    }
    for (u, v) in g.edges() {
        out.push_str(&format!("{u} {v}\n"));
    }
    out
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    root: u32,
    nodes: u32,
    edges: Vec<(u32, u32)>,
    #[serde(default)]
    labels: Vec<(u32, String)>,
}

impl Serialize for Graph {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        let repr = GraphRepr {
            root: self.root.0,
            nodes: self.node_count() as u32,
            edges: self.edges().iter().map(|&(u, v)| (u.0, v.0)).collect(),
            labels: self
                .nodes()
                .filter_map(|p| self.label(p).map(|l| (p.0, l.to_owned())))
                .collect(),
        };
        repr.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Graph {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let repr = GraphRepr::deserialize(de)?;
        let edges: Vec<_> = repr
            .edges
            .iter()
            .map(|&(u, v)| (NodeId(u), NodeId(v)))
            .collect();
        let labels: Vec<(NodeId, &str)> = repr
            .labels
            .iter()
            .map(|(id, l)| (NodeId(*id), l.as_str()))
            .collect();
        Graph::from_edges(repr.nodes, NodeId(repr.root), &edges, &labels)
            .map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Layered-family layout
// ---------------------------------------------------------------------------

/// Resolved node roles of a `build_gk(k)` graph, recovered from labels.
#[derive(Debug, Clone)]
pub struct GkLayout {
    pub k: u32,
    pub root: NodeId,
    pub h0: NodeId,
    pub f0: NodeId,
    /// `e[j]` is `e.(j+1)`; same convention for `f`, `g`, `h`.
    e: Vec<NodeId>,
    f: Vec<NodeId>,
    g: Vec<NodeId>,
    h: Vec<NodeId>,
}

impl GkLayout {
    pub fn from_graph(g: &Graph) -> Result<GkLayout, TopologyError> {
        let find = |name: &str| {
            g.find_label(name)
                .ok_or_else(|| TopologyError::NotLayeredFamily(name.to_owned()))
        };
        let root = find("R")?;
        let h0 = find("h.0")?;
        let f0 = find("f.0")?;
        let mut e = Vec::new();
        let mut f = Vec::new();
        let mut gg = Vec::new();
        let mut h = Vec::new();
        let mut j = 1;
        while let Some(ej) = g.find_label(&format!("e.{j}")) {
            e.push(ej);
            f.push(find(&format!("f.{j}"))?);
            gg.push(find(&format!("g.{j}"))?);
            h.push(find(&format!("h.{j}"))?);
            j += 1;
        }
        if e.is_empty() {
            return Err(TopologyError::NotLayeredFamily("e.1".into()));
        }
        Ok(GkLayout {
            k: e.len() as u32,
            root,
            h0,
            f0,
            e,
            f,
            g: gg,
            h,
        })
    }

    /// `e.j` for `j` in `1..=k`.
    pub fn e(&self, j: u32) -> NodeId {
        self.e[j as usize - 1]
    }
    /// `f.j` for `j` in `0..=k`.
    pub fn f(&self, j: u32) -> NodeId {
        if j == 0 {
            self.f0
        } else {
            self.f[j as usize - 1]
        }
    }
    /// `g.j` for `j` in `1..=k`.
    pub fn g(&self, j: u32) -> NodeId {
        self.g[j as usize - 1]
    }
    /// `h.j` for `j` in `0..=k`.
    pub fn h(&self, j: u32) -> NodeId {
        if j == 0 {
            self.h0
        } else {
            self.h[j as usize - 1]
        }
    }
}
