//! Directed graph with node costs and edge propagation probabilities.
//!
//! Node ids are dense (`0..n`). Edge ids are positions in the edge list and are
//! stable for the lifetime of the graph; realizations and partial realizations
//! are indexed by them.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use num_rational::Rational64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{stream_rng, STREAM_COSTS, STREAM_PROBABILITIES};
use crate::scalar::Cost;

pub type NodeId = usize;
pub type EdgeId = usize;

/// Header comment carrying the node count, so isolated nodes survive a round trip.
pub const NODES_HEADER: &str = "# nodes:";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub source: NodeId,
    pub target: NodeId,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectedGraph<C = Rational64> {
    costs: Vec<C>,
    edges: Vec<Edge>,
    out_edges: Vec<Vec<EdgeId>>,
    in_edges: Vec<Vec<EdgeId>>,
}

impl<C: Cost> DirectedGraph<C> {
    /// Builds and validates a graph. Edge ids follow the iteration order of `edges`.
    pub fn new<I>(costs: Vec<C>, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, NodeId, f64)>,
    {
        let n = costs.len();
        if n == 0 {
            return Err(Error::InvalidArgument("graph has no nodes".into()));
        }
        for (node, c) in costs.iter().enumerate() {
            if c.partial_cmp(&C::zero()) != Some(Ordering::Greater) {
                return Err(Error::InvalidCost {
                    node,
                    value: c.render(),
                });
            }
        }
        let mut seen = HashSet::new();
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        let mut list = Vec::new();
        for (idx, (source, target, probability)) in edges.into_iter().enumerate() {
            for node in [source, target] {
                if node >= n {
                    return Err(Error::NodeOutOfRange {
                        node,
                        node_count: n,
                    });
                }
            }
            if source == target {
                return Err(Error::SelfLoop(source));
            }
            if !(0.0..=1.0).contains(&probability) {
                return Err(Error::ProbabilityOutOfRange {
                    line: idx + 1,
                    value: probability,
                });
            }
            if !seen.insert((source, target)) {
                return Err(Error::DuplicateEdge {
                    source_node: source,
                    target,
                });
            }
            out_edges[source].push(list.len());
            in_edges[target].push(list.len());
            list.push(Edge {
                source,
                target,
                probability,
            });
        }
        Ok(Self {
            costs,
            edges: list,
            out_edges,
            in_edges,
        })
    }

    /// Graph where every node costs one unit.
    pub fn with_unit_costs<I>(node_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, NodeId, f64)>,
    {
        Self::new(vec![C::one(); node_count], edges)
    }

    pub fn node_count(&self) -> usize {
        self.costs.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    pub fn out_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.out_edges[node]
    }

    pub fn in_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.in_edges[node]
    }

    pub fn cost(&self, node: NodeId) -> C {
        self.costs[node]
    }

    pub fn costs(&self) -> &[C] {
        &self.costs
    }

    pub fn has_unit_costs(&self) -> bool {
        self.costs.iter().all(|c| *c == C::one())
    }

    pub fn max_cost(&self) -> C {
        self.costs
            .iter()
            .copied()
            .fold(self.costs[0], |a, b| if b > a { b } else { a })
    }

    pub fn min_cost(&self) -> C {
        self.costs
            .iter()
            .copied()
            .fold(self.costs[0], |a, b| if b < a { b } else { a })
    }

    pub fn total_cost(&self) -> C {
        self.costs.iter().copied().fold(C::zero(), |a, b| a + b)
    }

    /// Same topology and probabilities with a new cost vector.
    pub fn with_costs(&self, costs: Vec<C>) -> Result<Self> {
        if costs.len() != self.node_count() {
            return Err(Error::InvalidArgument(format!(
                "expected {} costs, got {}",
                self.node_count(),
                costs.len()
            )));
        }
        Self::new(costs, self.edge_triples())
    }

    /// Same topology and costs with new per-edge probabilities (indexed by edge id).
    pub fn with_probabilities(&self, probabilities: &[f64]) -> Result<Self> {
        if probabilities.len() != self.edge_count() {
            return Err(Error::InvalidArgument(format!(
                "expected {} probabilities, got {}",
                self.edge_count(),
                probabilities.len()
            )));
        }
        Self::new(
            self.costs.clone(),
            self.edges
                .iter()
                .zip(probabilities)
                .map(|(e, &p)| (e.source, e.target, p)),
        )
    }

    pub fn edge_triples(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        self.edges
            .iter()
            .map(|e| (e.source, e.target, e.probability))
    }
}

/// Maps dense internal ids back to the ids used in the source file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdMap {
    external: Vec<u64>,
    internal: HashMap<u64, NodeId>,
}

impl IdMap {
    fn new(external: Vec<u64>) -> Self {
        let internal = external.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        Self { external, internal }
    }

    pub fn identity(node_count: usize) -> Self {
        Self::new((0..node_count as u64).collect())
    }

    pub fn is_identity(&self) -> bool {
        self.external
            .iter()
            .enumerate()
            .all(|(i, &e)| e == i as u64)
    }

    pub fn external(&self, node: NodeId) -> u64 {
        self.external[node]
    }

    pub fn internal(&self, external: u64) -> Option<NodeId> {
        self.internal.get(&external).copied()
    }

    /// Sidecar text: one `internal<TAB>external` line per node.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, e) in self.external.iter().enumerate() {
            let _ = writeln!(out, "{i}\t{e}");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedGraph<C = Rational64> {
    pub graph: DirectedGraph<C>,
    pub id_map: IdMap,
}

/// Parses a tab-separated edge list (`u<TAB>v<TAB>p`) into a validated graph.
///
/// Lines starting with `#` are comments, except for an optional
/// `# nodes: N` header which fixes the node count (ids must then lie in
/// `0..N`). Without the header, the distinct ids are sorted and remapped to
/// `0..n`; dense files map to themselves. The file is taken as directed,
/// exactly as written.
pub fn load_graph_with_ids<C: Cost>(text: &str, default_cost: C) -> Result<LoadedGraph<C>> {
    let mut declared_nodes: Option<u64> = None;
    let mut raw = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(count) = line.strip_prefix(NODES_HEADER) {
                let count = count.trim().parse::<u64>().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("malformed node-count header: {comment:?}"),
                })?;
                declared_nodes = Some(count);
            }
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        let parse_id = |s: &str| {
            s.trim().parse::<u64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("malformed node id {s:?}"),
            })
        };
        let u = parse_id(fields[0])?;
        let v = parse_id(fields[1])?;
        let p = fields[2].trim().parse::<f64>().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("malformed probability {:?}", fields[2]),
        })?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ProbabilityOutOfRange {
                line: line_no,
                value: p,
            });
        }
        if u == v {
            return Err(Error::Parse {
                line: line_no,
                message: format!("self-loop on node {u}"),
            });
        }
        if !seen.insert((u, v)) {
            return Err(Error::DuplicateEdge {
                source_node: u as usize,
                target: v as usize,
            });
        }
        raw.push((u, v, p));
    }

    let external: Vec<u64> = match declared_nodes {
        Some(count) => {
            if let Some(&(u, v, _)) = raw.iter().find(|(u, v, _)| *u >= count || *v >= count) {
                return Err(Error::Parse {
                    line: 0,
                    message: format!("edge ({u}, {v}) exceeds declared node count {count}"),
                });
            }
            (0..count).collect()
        }
        None => {
            let ids: BTreeSet<u64> = raw.iter().flat_map(|(u, v, _)| [*u, *v]).collect();
            ids.into_iter().collect()
        }
    };
    let id_map = IdMap::new(external);
    let costs = vec![default_cost; id_map.external.len()];
    let edges = raw
        .iter()
        .map(|&(u, v, p)| (id_map.internal[&u], id_map.internal[&v], p));
    let graph = DirectedGraph::new(costs, edges)?;
    Ok(LoadedGraph { graph, id_map })
}

pub fn load_graph<C: Cost>(text: &str, default_cost: C) -> Result<DirectedGraph<C>> {
    load_graph_with_ids(text, default_cost).map(|l| l.graph)
}

/// Writes the node-count header followed by one `u<TAB>v<TAB>p` line per edge.
pub fn serialize_graph<C: Cost>(graph: &DirectedGraph<C>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{NODES_HEADER} {}", graph.node_count());
    for e in graph.edges() {
        let _ = writeln!(out, "{}\t{}\t{}", e.source, e.target, e.probability);
    }
    out
}

/// Applies a `v<TAB>c` cost file. Ids are external ids resolved through `id_map`.
/// Nodes not listed keep their current cost.
pub fn apply_costs<C: Cost>(
    graph: &DirectedGraph<C>,
    text: &str,
    id_map: Option<&IdMap>,
) -> Result<DirectedGraph<C>> {
    let mut costs = graph.costs().to_vec();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 2 tab-separated fields, found {}", fields.len()),
            });
        }
        let ext = fields[0].trim().parse::<u64>().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("malformed node id {:?}", fields[0]),
        })?;
        let node = match id_map {
            Some(map) => map.internal(ext),
            None => Some(ext as usize).filter(|&v| v < graph.node_count()),
        }
        .ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("unknown node {ext}"),
        })?;
        let cost = C::parse_cost(fields[1]).ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("malformed cost {:?}", fields[1]),
        })?;
        if cost.partial_cmp(&C::zero()) != Some(Ordering::Greater) {
            return Err(Error::InvalidCost {
                node,
                value: fields[1].to_string(),
            });
        }
        costs[node] = cost;
    }
    graph.with_costs(costs)
}

pub fn serialize_costs<C: Cost>(graph: &DirectedGraph<C>) -> String {
    let mut out = String::new();
    for (v, c) in graph.costs().iter().enumerate() {
        let _ = writeln!(out, "{v}\t{}", c.render());
    }
    out
}

/// Trivalency-style probabilities: each edge gets `i * 0.01` or `i * 0.001`
/// with equal chance.
pub fn assign_trivalency_probabilities<C: Cost>(
    graph: &DirectedGraph<C>,
    i: u32,
    rng_seed: u64,
) -> Result<DirectedGraph<C>> {
    assign_trivalency_scaled(graph, i, 1, rng_seed)
}

/// Generalized trivalency scheme: `i * scale * {0.01, 0.001}`.
/// `scale = 10` turns the `i = 4` pair `{0.04, 0.004}` into `{0.4, 0.04}`.
pub fn assign_trivalency_scaled<C: Cost>(
    graph: &DirectedGraph<C>,
    i: u32,
    scale: u32,
    rng_seed: u64,
) -> Result<DirectedGraph<C>> {
    if i == 0 || scale == 0 {
        return Err(Error::InvalidArgument(
            "trivalency index and scale must be positive".into(),
        ));
    }
    let units = i as u64 * scale as u64;
    if units > 100 {
        return Err(Error::InvalidArgument(format!(
            "trivalency probability {units}/100 exceeds 1"
        )));
    }
    let high = units as f64 / 100.0;
    let low = units as f64 / 1000.0;
    let mut rng = stream_rng(rng_seed, STREAM_PROBABILITIES);
    let probabilities: Vec<f64> = (0..graph.edge_count())
        .map(|_| if rng.gen::<bool>() { high } else { low })
        .collect();
    graph.with_probabilities(&probabilities)
}

/// Draws every node cost uniformly from `[lo, hi]`.
pub fn assign_random_costs<C: Cost>(
    graph: &DirectedGraph<C>,
    lo: C,
    hi: C,
    rng_seed: u64,
) -> Result<DirectedGraph<C>> {
    if lo.partial_cmp(&C::zero()) != Some(Ordering::Greater) {
        return Err(Error::InvalidArgument(format!(
            "cost lower bound must be positive, got {}",
            lo.render()
        )));
    }
    if hi < lo {
        return Err(Error::InvalidArgument(format!(
            "empty cost range [{}, {}]",
            lo.render(),
            hi.render()
        )));
    }
    let mut rng = stream_rng(rng_seed, STREAM_COSTS);
    let costs = (0..graph.node_count())
        .map(|_| C::sample_uniform(lo, hi, &mut rng))
        .collect();
    graph.with_costs(costs)
}

/// Largest shortest-path hop count over ordered reachable pairs, ignoring
/// probabilities. Unreachable pairs do not contribute.
pub fn diameter<C>(graph: &DirectedGraph<C>) -> usize {
    let n = graph.costs.len();
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    let mut best = 0;
    for start in 0..n {
        dist.iter_mut().for_each(|d| *d = usize::MAX);
        dist[start] = 0;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            best = best.max(dist[u]);
            for &e in &graph.out_edges[u] {
                let v = graph.edges[e].target;
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    best
}
