//! Independent Cascade diffusion: realizations, slot-by-slot propagation and
//! the partial-feedback observation rule.
//!
//! A seed activated at slot `t` has age `d = current - t`. Once `d >= 1`, the
//! out-edges of every node within `d - 1` live hops of the seed are observed
//! with their true status. Blocked edges leaving those nodes are revealed too,
//! but never extend the frontier.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, EdgeId, NodeId};
use crate::rng::{stream_rng, STREAM_REALIZATION};

pub type Slot = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeState {
    Live,
    Blocked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Observation {
    Live,
    Blocked,
    Unobserved,
}

impl Observation {
    pub fn is_observed(self) -> bool {
        self != Observation::Unobserved
    }

    fn symbol(self) -> char {
        match self {
            Observation::Live => 'L',
            Observation::Blocked => 'B',
            Observation::Unobserved => 'U',
        }
    }
}

impl From<EdgeState> for Observation {
    fn from(s: EdgeState) -> Self {
        match s {
            EdgeState::Live => Observation::Live,
            EdgeState::Blocked => Observation::Blocked,
        }
    }
}

/// Live/blocked ground truth for every edge of one diffusion world.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FullRealization {
    live: Vec<bool>,
}

impl FullRealization {
    /// Each edge is independently live with its propagation probability.
    pub fn sample<C>(graph: &DirectedGraph<C>, rng_seed: u64) -> Self
    where
        C: crate::scalar::Cost,
    {
        let mut rng = stream_rng(rng_seed, STREAM_REALIZATION);
        let live = graph
            .edges()
            .iter()
            .map(|e| rng.gen::<f64>() < e.probability)
            .collect();
        Self { live }
    }

    pub fn from_live(live: Vec<bool>) -> Self {
        Self { live }
    }

    pub fn from_states(states: &[EdgeState]) -> Self {
        Self {
            live: states.iter().map(|s| *s == EdgeState::Live).collect(),
        }
    }

    /// Bit `i` of `mask` is the state of edge `i`. Requires `edge_count <= 64`.
    pub fn from_mask(edge_count: usize, mask: u64) -> Self {
        debug_assert!(edge_count <= 64);
        Self {
            live: (0..edge_count).map(|e| mask >> e & 1 == 1).collect(),
        }
    }

    pub fn edge_count(&self) -> usize {
        self.live.len()
    }

    pub fn is_live(&self, edge: EdgeId) -> bool {
        self.live[edge]
    }

    pub fn state(&self, edge: EdgeId) -> EdgeState {
        if self.live[edge] {
            EdgeState::Live
        } else {
            EdgeState::Blocked
        }
    }

    pub fn live_mask(&self) -> &[bool] {
        &self.live
    }

    /// Prior probability of this realization under independent edges.
    pub fn probability<C>(&self, graph: &DirectedGraph<C>) -> f64
    where
        C: crate::scalar::Cost,
    {
        graph
            .edges()
            .iter()
            .zip(&self.live)
            .map(|(e, &l)| {
                if l {
                    e.probability
                } else {
                    1.0 - e.probability
                }
            })
            .product()
    }
}

/// Observed edge statuses; grows monotonically over a run.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartialRealization {
    states: Vec<Observation>,
}

impl PartialRealization {
    pub fn empty(edge_count: usize) -> Self {
        Self {
            states: vec![Observation::Unobserved; edge_count],
        }
    }

    pub fn from_observations(states: Vec<Observation>) -> Self {
        Self { states }
    }

    pub fn edge_count(&self) -> usize {
        self.states.len()
    }

    pub fn get(&self, edge: EdgeId) -> Observation {
        self.states[edge]
    }

    pub fn observations(&self) -> &[Observation] {
        &self.states
    }

    pub fn observed_count(&self) -> usize {
        self.states.iter().filter(|s| s.is_observed()).count()
    }

    /// Reveals `edge` with the status it has in `truth`.
    pub fn reveal(&mut self, edge: EdgeId, truth: &FullRealization) {
        self.states[edge] = truth.state(edge).into();
    }

    /// Every observed entry agrees with `truth`.
    pub fn is_consistent_with(&self, truth: &FullRealization) -> bool {
        self.states
            .iter()
            .enumerate()
            .all(|(e, s)| !s.is_observed() || *s == Observation::from(truth.state(e)))
    }

    /// Every observed entry of `self` is observed identically in `other`.
    pub fn is_contained_in(&self, other: &PartialRealization) -> bool {
        self.states
            .iter()
            .zip(&other.states)
            .all(|(a, b)| !a.is_observed() || a == b)
    }

    /// Debug dump: one `u<TAB>v<TAB>{L|B|U}` line per edge.
    pub fn render<C>(&self, graph: &DirectedGraph<C>) -> String
    where
        C: crate::scalar::Cost,
    {
        let mut out = String::new();
        for (e, s) in graph.edges().iter().zip(&self.states) {
            let _ = writeln!(out, "{}\t{}\t{}", e.source, e.target, s.symbol());
        }
        out
    }
}

/// Seeds with the slot at which each was activated.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct SeedSchedule {
    entries: Vec<(NodeId, Slot)>,
}

impl SeedSchedule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries<I: IntoIterator<Item = (NodeId, Slot)>>(entries: I) -> Result<Self> {
        let mut s = Self::new();
        for (node, slot) in entries {
            s.push(node, slot)?;
        }
        Ok(s)
    }

    /// All seeds at slot 0.
    pub fn at_slot_zero(nodes: &[NodeId]) -> Result<Self> {
        Self::from_entries(nodes.iter().map(|&v| (v, 0)))
    }

    pub fn push(&mut self, node: NodeId, slot: Slot) -> Result<()> {
        if self.contains(node) {
            return Err(Error::AlreadySeed(node));
        }
        if let Some(&(_, last)) = self.entries.last() {
            if slot < last {
                return Err(Error::InvalidArgument(format!(
                    "activation slot {slot} precedes previous slot {last}"
                )));
            }
        }
        self.entries.push((node, slot));
        Ok(())
    }

    pub fn entries(&self) -> &[(NodeId, Slot)] {
        &self.entries
    }

    pub fn nodes(&self) -> Vec<NodeId> {
        self.entries.iter().map(|&(v, _)| v).collect()
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.entries.iter().any(|&(v, _)| v == node)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn last_slot(&self) -> Option<Slot> {
        self.entries.last().map(|&(_, s)| s)
    }
}

/// Realized activation slot of every node (`None` = never activated).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffusionTrace {
    slots: Vec<Option<Slot>>,
}

impl DiffusionTrace {
    pub fn activation_slot(&self, node: NodeId) -> Option<Slot> {
        self.slots[node]
    }

    pub fn slots(&self) -> &[Option<Slot>] {
        &self.slots
    }

    pub fn activated_count(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }

    pub fn last_activation(&self) -> Option<Slot> {
        self.slots.iter().flatten().copied().max()
    }
}

/// Multi-source BFS over live edges; each seed starts at its own slot.
pub fn propagate<C>(
    graph: &DirectedGraph<C>,
    realization: &FullRealization,
    schedule: &SeedSchedule,
) -> DiffusionTrace
where
    C: crate::scalar::Cost,
{
    let mut slots: Vec<Option<Slot>> = vec![None; graph.node_count()];
    let mut heap = BinaryHeap::new();
    for &(v, t) in schedule.entries() {
        if slots[v].is_none_or(|s| t < s) {
            slots[v] = Some(t);
            heap.push(Reverse((t, v)));
        }
    }
    while let Some(Reverse((t, u))) = heap.pop() {
        if slots[u] != Some(t) {
            continue;
        }
        for &e in graph.out_edges(u) {
            if !realization.is_live(e) {
                continue;
            }
            let v = graph.edge(e).target;
            if slots[v].is_none_or(|s| t + 1 < s) {
                slots[v] = Some(t + 1);
                heap.push(Reverse((t + 1, v)));
            }
        }
    }
    DiffusionTrace { slots }
}

/// Edges observed at `current_slot` under partial feedback.
///
/// A node's out-edges are visible exactly when some seed reached it over live
/// edges strictly before `current_slot`, i.e. its realized activation slot is
/// `< current_slot`.
pub fn observe<C>(
    graph: &DirectedGraph<C>,
    realization: &FullRealization,
    schedule: &SeedSchedule,
    current_slot: Slot,
) -> PartialRealization
where
    C: crate::scalar::Cost,
{
    let trace = propagate(graph, realization, schedule);
    observe_from_trace(graph, realization, &trace, current_slot)
}

pub fn observe_from_trace<C>(
    graph: &DirectedGraph<C>,
    realization: &FullRealization,
    trace: &DiffusionTrace,
    current_slot: Slot,
) -> PartialRealization
where
    C: crate::scalar::Cost,
{
    let mut psi = PartialRealization::empty(graph.edge_count());
    for (v, slot) in trace.slots().iter().enumerate() {
        if matches!(slot, Some(t) if *t < current_slot) {
            for &e in graph.out_edges(v) {
                psi.reveal(e, realization);
            }
        }
    }
    psi
}

/// True when waiting past `current_slot` can reveal nothing new.
pub fn is_settled<C>(
    graph: &DirectedGraph<C>,
    realization: &FullRealization,
    schedule: &SeedSchedule,
    current_slot: Slot,
) -> bool
where
    C: crate::scalar::Cost,
{
    propagate(graph, realization, schedule)
        .slots()
        .iter()
        .flatten()
        .all(|&t| t < current_slot)
}

/// Diameter of the live subgraph of `realization`: the largest live-hop
/// distance over ordered pairs connected by live edges.
///
/// This, not the diameter of the full graph, bounds how long observation can
/// keep growing: a blocked shortcut can force a longer live route.
pub fn live_diameter<C>(graph: &DirectedGraph<C>, realization: &FullRealization) -> usize
where
    C: crate::scalar::Cost,
{
    let n = graph.node_count();
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    let mut best = 0;
    for start in 0..n {
        dist.iter_mut().for_each(|d| *d = usize::MAX);
        dist[start] = 0;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            best = best.max(dist[u]);
            for &e in graph.out_edges(u) {
                let v = graph.edge(e).target;
                if realization.is_live(e) && dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    best
}

/// Number of nodes reachable from `seeds` over live edges, seeds included.
pub fn cascade_size<C>(
    graph: &DirectedGraph<C>,
    realization: &FullRealization,
    seeds: &[NodeId],
) -> usize
where
    C: crate::scalar::Cost,
{
    let mut seen = vec![false; graph.node_count()];
    let mut queue = VecDeque::new();
    let mut count = 0;
    for &s in seeds {
        if !seen[s] {
            seen[s] = true;
            count += 1;
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        for &e in graph.out_edges(u) {
            let v = graph.edge(e).target;
            if realization.is_live(e) && !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count
}
