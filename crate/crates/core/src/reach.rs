//! Per-world reachability kernels shared by the estimators.
//!
//! A "world" is a live-edge mask. For a seed set `S` with live-reachable set
//! `R`, the gain of a candidate `c` in that world is `|reach(c) \ R|`. `R` is
//! closed under live edges, so the gains only depend on the live subgraph
//! induced by `V \ R`; they are computed for all candidates at once from the
//! SCC condensation of that subgraph (Tarjan emits components sinks-first, so
//! each component's reach bitset is the union of its members and its already
//! finished successors).

use std::collections::VecDeque;

use crate::graph::{DirectedGraph, NodeId};
use crate::scalar::Cost;

const UNVISITED: usize = usize::MAX;

/// Above this node count the per-candidate BFS is used instead of bitsets.
const BITSET_NODE_LIMIT: usize = 4096;

// The forced strategies exist for cross-checking in tests.
#[cfg_attr(not(test), allow(dead_code))]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum GainStrategy {
    Auto,
    Condensation,
    Bfs,
}

pub(crate) struct WorldEvaluator {
    n: usize,
    words: usize,
    pub(crate) reached: Vec<bool>,
    queue: VecDeque<NodeId>,
    // Tarjan state
    index: Vec<usize>,
    low: Vec<usize>,
    on_stack: Vec<bool>,
    comp: Vec<usize>,
    stack: Vec<NodeId>,
    call: Vec<(NodeId, usize)>,
    members: Vec<NodeId>,
    comp_bits: Vec<u64>,
    comp_size: Vec<u64>,
    // BFS state
    stamp: Vec<u32>,
    epoch: u32,
    strategy: GainStrategy,
}

impl WorldEvaluator {
    pub(crate) fn new(n: usize) -> Self {
        Self::with_strategy(n, GainStrategy::Auto)
    }

    pub(crate) fn with_strategy(n: usize, strategy: GainStrategy) -> Self {
        Self {
            n,
            words: n.div_ceil(64),
            reached: vec![false; n],
            queue: VecDeque::new(),
            index: vec![UNVISITED; n],
            low: vec![0; n],
            on_stack: vec![false; n],
            comp: vec![UNVISITED; n],
            stack: Vec::new(),
            call: Vec::new(),
            members: Vec::new(),
            comp_bits: Vec::new(),
            comp_size: Vec::new(),
            stamp: vec![0; n],
            epoch: 0,
            strategy,
        }
    }

    /// Marks `self.reached` with everything live-reachable from `seeds`.
    pub(crate) fn reach_from<C: Cost>(
        &mut self,
        graph: &DirectedGraph<C>,
        live: &[bool],
        seeds: &[NodeId],
    ) -> usize {
        self.reached.iter_mut().for_each(|r| *r = false);
        self.queue.clear();
        let mut count = 0;
        for &s in seeds {
            if !self.reached[s] {
                self.reached[s] = true;
                count += 1;
                self.queue.push_back(s);
            }
        }
        while let Some(u) = self.queue.pop_front() {
            for &e in graph.out_edges(u) {
                if !live[e] {
                    continue;
                }
                let v = graph.edge(e).target;
                if !self.reached[v] {
                    self.reached[v] = true;
                    count += 1;
                    self.queue.push_back(v);
                }
            }
        }
        count
    }

    /// Adds `|reach(c) \ R|` to `acc[i]` for each `candidates[i]`, where `R` is
    /// the set marked by the last `reach_from` call.
    pub(crate) fn accumulate_gains<C: Cost>(
        &mut self,
        graph: &DirectedGraph<C>,
        live: &[bool],
        candidates: &[NodeId],
        acc: &mut [u64],
    ) {
        let use_bits = match self.strategy {
            GainStrategy::Auto => self.n <= BITSET_NODE_LIMIT,
            GainStrategy::Condensation => true,
            GainStrategy::Bfs => false,
        };
        if use_bits {
            self.condensation_gains(graph, live, candidates, acc);
        } else {
            for (i, &c) in candidates.iter().enumerate() {
                acc[i] += self.bfs_gain(graph, live, c);
            }
        }
    }

    fn bfs_gain<C: Cost>(&mut self, graph: &DirectedGraph<C>, live: &[bool], c: NodeId) -> u64 {
        if self.reached[c] {
            return 0;
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        let epoch = self.epoch;
        self.stamp[c] = epoch;
        self.queue.clear();
        self.queue.push_back(c);
        let mut count = 0;
        while let Some(u) = self.queue.pop_front() {
            count += 1;
            for &e in graph.out_edges(u) {
                let v = graph.edge(e).target;
                if live[e] && !self.reached[v] && self.stamp[v] != epoch {
                    self.stamp[v] = epoch;
                    self.queue.push_back(v);
                }
            }
        }
        count
    }

    fn condensation_gains<C: Cost>(
        &mut self,
        graph: &DirectedGraph<C>,
        live: &[bool],
        candidates: &[NodeId],
        acc: &mut [u64],
    ) {
        let words = self.words;
        self.index.iter_mut().for_each(|x| *x = UNVISITED);
        self.comp.iter_mut().for_each(|x| *x = UNVISITED);
        self.comp_bits.clear();
        self.comp_size.clear();
        let mut counter = 0;

        for &start in candidates {
            if self.reached[start] || self.index[start] != UNVISITED {
                continue;
            }
            self.index[start] = counter;
            self.low[start] = counter;
            counter += 1;
            self.stack.push(start);
            self.on_stack[start] = true;
            self.call.push((start, 0));

            while let Some(&(v, pos)) = self.call.last() {
                let outs = graph.out_edges(v);
                if pos < outs.len() {
                    self.call.last_mut().unwrap().1 += 1;
                    let e = outs[pos];
                    if !live[e] {
                        continue;
                    }
                    let w = graph.edge(e).target;
                    if self.reached[w] {
                        continue;
                    }
                    if self.index[w] == UNVISITED {
                        self.index[w] = counter;
                        self.low[w] = counter;
                        counter += 1;
                        self.stack.push(w);
                        self.on_stack[w] = true;
                        self.call.push((w, 0));
                    } else if self.on_stack[w] {
                        self.low[v] = self.low[v].min(self.index[w]);
                    }
                    continue;
                }
                self.call.pop();
                if let Some(&(parent, _)) = self.call.last() {
                    self.low[parent] = self.low[parent].min(self.low[v]);
                }
                if self.low[v] != self.index[v] {
                    continue;
                }
                let id = self.comp_size.len();
                let base = self.comp_bits.len();
                self.comp_bits.resize(base + words, 0);
                self.members.clear();
                loop {
                    let w = self.stack.pop().expect("tarjan stack underflow");
                    self.on_stack[w] = false;
                    self.comp[w] = id;
                    self.comp_bits[base + w / 64] |= 1u64 << (w % 64);
                    self.members.push(w);
                    if w == v {
                        break;
                    }
                }
                for mi in 0..self.members.len() {
                    let w = self.members[mi];
                    for &e in graph.out_edges(w) {
                        if !live[e] {
                            continue;
                        }
                        let x = graph.edge(e).target;
                        if self.reached[x] {
                            continue;
                        }
                        let cx = self.comp[x];
                        if cx != id {
                            let other = cx * words;
                            for k in 0..words {
                                let bits = self.comp_bits[other + k];
                                self.comp_bits[base + k] |= bits;
                            }
                        }
                    }
                }
                let size = self.comp_bits[base..base + words]
                    .iter()
                    .map(|w| w.count_ones() as u64)
                    .sum();
                self.comp_size.push(size);
            }
        }

        for (i, &c) in candidates.iter().enumerate() {
            if !self.reached[c] {
                acc[i] += self.comp_size[self.comp[c]];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;
    use proptest::prelude::*;

    type G = DirectedGraph<Rational64>;

    fn brute_gain(g: &G, live: &[bool], seeds: &[NodeId], c: NodeId) -> u64 {
        let reach = |sources: &[NodeId]| {
            let mut seen = vec![false; g.node_count()];
            let mut stack: Vec<NodeId> = sources.to_vec();
            for &s in sources {
                seen[s] = true;
            }
            while let Some(u) = stack.pop() {
                for &e in g.out_edges(u) {
                    let v = g.edge(e).target;
                    if live[e] && !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            seen
        };
        let base = reach(seeds);
        let mut with = seeds.to_vec();
        with.push(c);
        let ext = reach(&with);
        (0..g.node_count()).filter(|&v| ext[v] && !base[v]).count() as u64
    }

    proptest! {
        #[test]
        fn strategies_match_brute_force(
            n in 2usize..12,
            raw_edges in proptest::collection::vec((0usize..12, 0usize..12, any::<bool>()), 0..40),
            seeds in proptest::collection::vec(0usize..12, 0..3),
        ) {
            let mut seen = std::collections::HashSet::new();
            let mut edges = Vec::new();
            let mut live = Vec::new();
            for (u, v, l) in raw_edges {
                let (u, v) = (u % n, v % n);
                if u != v && seen.insert((u, v)) {
                    edges.push((u, v, 0.5));
                    live.push(l);
                }
            }
            let g = G::with_unit_costs(n, edges).unwrap();
            let seeds: Vec<usize> = seeds.into_iter().map(|s| s % n).collect();
            let candidates: Vec<usize> = (0..n).collect();
            let expected: Vec<u64> = candidates.iter().map(|&c| brute_gain(&g, &live, &seeds, c)).collect();
            for strategy in [GainStrategy::Condensation, GainStrategy::Bfs] {
                let mut w = WorldEvaluator::with_strategy(n, strategy);
                w.reach_from(&g, &live, &seeds);
                let mut acc = vec![0u64; n];
                w.accumulate_gains(&g, &live, &candidates, &mut acc);
                prop_assert_eq!(&acc, &expected);
                // Reuse across worlds must not leak state.
                w.reach_from(&g, &live, &seeds);
                let mut again = vec![0u64; n];
                w.accumulate_gains(&g, &live, &candidates, &mut again);
                prop_assert_eq!(&again, &expected);
            }
        }
    }
}
