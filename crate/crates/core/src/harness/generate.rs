//! Synthetic graphs and tiny random instances.

use num_rational::Rational64;
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, NodeId};
use crate::rng::{stream_rng, STREAM_GENERATOR, STREAM_INSTANCES};
use crate::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphModel {
    /// `m` distinct ordered pairs drawn uniformly.
    ErdosRenyi,
    /// Sources uniform, targets drawn proportionally to in-degree + 1.
    ScaleFree,
}

impl GraphModel {
    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "erdos-renyi" | "er" => Some(GraphModel::ErdosRenyi),
            "scale-free-ish" | "scale-free" => Some(GraphModel::ScaleFree),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GraphModel::ErdosRenyi => "erdos-renyi",
            GraphModel::ScaleFree => "scale-free-ish",
        }
    }
}

fn pair(index: usize, n: usize) -> (NodeId, NodeId) {
    let u = index / (n - 1);
    let r = index % (n - 1);
    (u, if r >= u { r + 1 } else { r })
}

fn pair_index(u: NodeId, v: NodeId, n: usize) -> usize {
    u * (n - 1) + if v > u { v - 1 } else { v }
}

/// Simple directed graph with `m` edges; every probability is 1 until the
/// caller assigns a scheme.
pub fn generate_graph(model: GraphModel, n: usize, m: usize, rng_seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(Error::InvalidArgument("node count must be positive".into()));
    }
    let cap = n.saturating_mul(n - 1);
    if m > cap {
        return Err(Error::InvalidArgument(format!(
            "{m} edges exceed the simple-graph maximum n(n-1) = {cap}"
        )));
    }
    let mut rng = stream_rng(rng_seed, STREAM_GENERATOR);
    let mut indices = match model {
        GraphModel::ErdosRenyi => sample(&mut rng, cap, m).into_vec(),
        GraphModel::ScaleFree => preferential(&mut rng, n, m),
    };
    indices.sort_unstable();
    DirectedGraph::with_unit_costs(
        n,
        indices.into_iter().map(|i| {
            let (u, v) = pair(i, n);
            (u, v, 1.0)
        }),
    )
}

fn preferential(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<usize> {
    let mut chosen = std::collections::HashSet::with_capacity(m);
    // Each node appears once plus once per incoming edge.
    let mut pool: Vec<NodeId> = (0..n).collect();
    let mut attempts = 0usize;
    let limit = 64 * m + 1024;
    while chosen.len() < m && attempts < limit {
        attempts += 1;
        let u = rng.gen_range(0..n);
        let v = pool[rng.gen_range(0..pool.len())];
        if u != v && chosen.insert(pair_index(u, v, n)) {
            pool.push(v);
        }
    }
    let mut out: Vec<usize> = chosen.into_iter().collect();
    if out.len() < m {
        // Dense requests: finish with uniform picks among the missing pairs.
        out.sort_unstable();
        let taken: std::collections::HashSet<usize> = out.iter().copied().collect();
        let free: Vec<usize> = (0..n * (n - 1)).filter(|i| !taken.contains(i)).collect();
        out.extend(
            sample(rng, free.len(), m - out.len())
                .into_iter()
                .map(|k| free[k]),
        );
    }
    out
}

/// Random small instance with unit costs: `2..=max_nodes` nodes, at most
/// `max_edges` edges with probabilities in `{1, 0.5}` or `[0.1, 0.9]`, and a
/// budget in `1..=min(max_budget, n)`.
pub fn tiny_instance(
    rng: &mut ChaCha8Rng,
    max_nodes: usize,
    max_edges: usize,
    max_budget: usize,
) -> (Graph, usize) {
    let n = rng.gen_range(2..=max_nodes.max(2));
    let m = rng.gen_range(0..=max_edges.min(n * (n - 1)));
    let mut indices = sample(rng, n * (n - 1), m).into_vec();
    indices.sort_unstable();
    let edges: Vec<(NodeId, NodeId, f64)> = indices
        .into_iter()
        .map(|i| {
            let (u, v) = pair(i, n);
            let p = match rng.gen_range(0..4) {
                0 => 1.0,
                1 => 0.5,
                _ => (rng.gen_range(10..=90) as f64) / 100.0,
            };
            (u, v, p)
        })
        .collect();
    let budget = rng.gen_range(1..=max_budget.min(n).max(1));
    let graph =
        DirectedGraph::new(vec![Rational64::from_integer(1); n], edges).expect("valid instance");
    (graph, budget)
}

/// `count` tiny instances from a dedicated stream of `rng_seed`.
pub fn tiny_instances(
    count: usize,
    rng_seed: u64,
    max_nodes: usize,
    max_edges: usize,
    max_budget: usize,
) -> Vec<(Graph, usize)> {
    let mut rng = stream_rng(rng_seed, STREAM_INSTANCES);
    (0..count)
        .map(|_| tiny_instance(&mut rng, max_nodes, max_edges, max_budget))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::serialize_graph;
    use proptest::prelude::*;

    #[test]
    fn pair_indexing_round_trips() {
        for n in 2..7 {
            for i in 0..n * (n - 1) {
                let (u, v) = pair(i, n);
                assert_ne!(u, v);
                assert_eq!(pair_index(u, v, n), i);
            }
        }
    }

    #[test]
    fn empty_and_full() {
        let g = generate_graph(GraphModel::ErdosRenyi, 10, 0, 1).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (10, 0));
        assert_eq!(serialize_graph(&g), "# nodes: 10\n");
        for model in [GraphModel::ErdosRenyi, GraphModel::ScaleFree] {
            let g = generate_graph(model, 5, 20, 1).unwrap();
            assert_eq!(g.edge_count(), 20);
            assert!(generate_graph(model, 5, 21, 1).is_err());
        }
    }

    #[test]
    fn deterministic() {
        for model in [GraphModel::ErdosRenyi, GraphModel::ScaleFree] {
            let a = serialize_graph(&generate_graph(model, 50, 120, 7).unwrap());
            let b = serialize_graph(&generate_graph(model, 50, 120, 7).unwrap());
            let c = serialize_graph(&generate_graph(model, 50, 120, 8).unwrap());
            assert_eq!(a, b);
            assert_ne!(a, c);
        }
    }

    #[test]
    fn preferential_targets_are_skewed() {
        let g = generate_graph(GraphModel::ScaleFree, 200, 1000, 3).unwrap();
        let variance = |deg: Vec<usize>| {
            let mean = deg.iter().sum::<usize>() as f64 / deg.len() as f64;
            deg.iter().map(|&d| (d as f64 - mean).powi(2)).sum::<f64>() / deg.len() as f64
        };
        let vin = variance((0..200).map(|v| g.in_edges(v).len()).collect());
        let vout = variance((0..200).map(|v| g.out_edges(v).len()).collect());
        assert!(vin > 2.0 * vout, "in {vin} out {vout}");
    }

    proptest! {
        #[test]
        fn tiny_instances_respect_limits(seed: u64) {
            for (g, b) in tiny_instances(5, seed, 6, 10, 3) {
                prop_assert!(g.node_count() <= 6 && g.edge_count() <= 10);
                prop_assert!((1..=3).contains(&b) && b <= g.node_count());
                prop_assert!(g.has_unit_costs());
            }
        }
    }
}
