//! Ground truth on small instances: exhaustive policy evaluation over every
//! realization, sampled evaluation for larger graphs, and brute-force
//! non-adaptive and full-feedback adaptive optima.
//!
//! Only edges with `0 < p < 1` vary across realizations; the others are fixed
//! live or blocked. Realizations are indexed as binary counters over the
//! varying edges in ascending edge order, and all weighted sums are reduced in
//! that index order.

use rayon::prelude::*;

use crate::diffusion::{cascade_size, FullRealization};
use crate::error::{Error, Result};
use crate::estimation::Backend;
use crate::graph::{DirectedGraph, EdgeId, NodeId};
use crate::policies::{
    best_single_node, enhanced_arm, run_enhanced_arm, EnhancedArm, PolicyConfig, PolicyKind,
    TIE_TOLERANCE,
};
use crate::scalar::Cost;

/// Largest number of varying edges accepted by exhaustive evaluation.
pub const ENUMERATION_EDGE_LIMIT: usize = 22;

/// Work guard for [`optimal_nonadaptive`]: candidate sets times realizations.
pub const NONADAPTIVE_WORK_LIMIT: u128 = 1 << 24;

pub const ADAPTIVE_NODE_LIMIT: usize = 6;
pub const ADAPTIVE_EDGE_LIMIT: usize = 12;
pub const ADAPTIVE_BUDGET_LIMIT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvaluationMethod {
    Enumerated { realizations: u64 },
    Sampled { count: usize, std_error: f64 },
}

/// Expected realized cascade of a policy, plus per-run averages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub method: EvaluationMethod,
    pub mean_slots: f64,
    pub mean_seeds: f64,
}

impl Evaluation {
    pub fn std_error(&self) -> f64 {
        match self.method {
            EvaluationMethod::Enumerated { .. } => 0.0,
            EvaluationMethod::Sampled { std_error, .. } => std_error,
        }
    }
}

/// All realizations of a graph with their prior weights.
#[derive(Debug, Clone)]
pub struct RealizationSpace {
    base: Vec<bool>,
    varying: Vec<EdgeId>,
    probability: Vec<f64>,
}

impl RealizationSpace {
    pub fn new<C: Cost>(graph: &DirectedGraph<C>, limit: usize) -> Result<Self> {
        let varying: Vec<EdgeId> = (0..graph.edge_count())
            .filter(|&e| {
                let p = graph.edge(e).probability;
                p > 0.0 && p < 1.0
            })
            .collect();
        if varying.len() > limit {
            return Err(Error::TooLarge(format!(
                "{} uncertain edges, at most {limit} can be enumerated",
                varying.len()
            )));
        }
        Ok(Self {
            base: graph.edges().iter().map(|e| e.probability >= 1.0).collect(),
            probability: varying.iter().map(|&e| graph.edge(e).probability).collect(),
            varying,
        })
    }

    pub fn len(&self) -> u64 {
        1u64 << self.varying.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn varying_edges(&self) -> usize {
        self.varying.len()
    }

    /// Realization number `index` and its probability.
    pub fn get(&self, index: u64) -> (FullRealization, f64) {
        let mut live = self.base.clone();
        let mut weight = 1.0;
        for (bit, (&e, &p)) in self.varying.iter().zip(&self.probability).enumerate() {
            let on = index >> bit & 1 == 1;
            live[e] = on;
            weight *= if on { p } else { 1.0 - p };
        }
        (FullRealization::from_live(live), weight)
    }
}

struct WorldOutcome {
    cascade: f64,
    slots: f64,
    seeds: f64,
}

fn run_world<C: Cost>(
    graph: &DirectedGraph<C>,
    config: &PolicyConfig<C>,
    realization: &FullRealization,
    rng_seed: u64,
    best: Option<(NodeId, f64)>,
) -> Result<WorldOutcome> {
    match best {
        // The enhanced coin is averaged out exactly.
        Some(best) => {
            let mut total = WorldOutcome {
                cascade: 0.0,
                slots: 0.0,
                seeds: 0.0,
            };
            for arm in [EnhancedArm::BestSingle, EnhancedArm::Greedy] {
                let run = run_enhanced_arm(
                    graph,
                    config.alpha,
                    config.budget,
                    realization,
                    &config.estimator,
                    rng_seed,
                    arm,
                    best,
                )?;
                total.cascade += run.realized_cascade as f64 / 2.0;
                total.slots += run.slots_elapsed as f64 / 2.0;
                total.seeds += run.schedule.len() as f64 / 2.0;
            }
            Ok(total)
        }
        None => {
            let run = config.run(graph, realization, rng_seed)?;
            Ok(WorldOutcome {
                cascade: run.realized_cascade as f64,
                slots: run.slots_elapsed as f64,
                seeds: run.schedule.len() as f64,
            })
        }
    }
}

/// Exact expected cascade `Σ p(φ) |cascade(φ)|` of a policy using the exact
/// estimator (optionally ε-wrapped). The enhanced policy's coin is averaged
/// exactly rather than flipped.
pub fn evaluate_policy_exact<C: Cost>(
    graph: &DirectedGraph<C>,
    config: &PolicyConfig<C>,
    rng_seed: u64,
) -> Result<Evaluation> {
    if config.estimator.backend() != Backend::Exact {
        return Err(Error::Unsupported(
            "exhaustive evaluation requires the exact estimator".into(),
        ));
    }
    let space = RealizationSpace::new(graph, ENUMERATION_EDGE_LIMIT)?;
    let best = match config.kind {
        PolicyKind::Enhanced => Some(best_single_node(graph, &config.estimator, rng_seed)?),
        _ => None,
    };
    let outcomes: Vec<(WorldOutcome, f64)> = (0..space.len())
        .into_par_iter()
        .map(|index| {
            let (realization, weight) = space.get(index);
            run_world(graph, config, &realization, rng_seed, best).map(|o| (o, weight))
        })
        .collect::<Result<_>>()?;
    let (mut value, mut slots, mut seeds, mut total) = (0.0, 0.0, 0.0, 0.0);
    for (o, w) in &outcomes {
        value += w * o.cascade;
        slots += w * o.slots;
        seeds += w * o.seeds;
        total += w;
    }
    Ok(Evaluation {
        value: value / total,
        method: EvaluationMethod::Enumerated {
            realizations: space.len(),
        },
        mean_slots: slots / total,
        mean_seeds: seeds / total,
    })
}

/// Monte Carlo outer loop: world `w` is sampled from seed `rng_seed + w` and
/// the policy runs with the same seed, which also flips the enhanced coin.
/// Sums are integer, so the result does not depend on scheduling.
pub fn evaluate_policy_sampled<C: Cost>(
    graph: &DirectedGraph<C>,
    config: &PolicyConfig<C>,
    realizations: usize,
    rng_seed: u64,
) -> Result<Evaluation> {
    if realizations < 2 {
        return Err(Error::InvalidArgument("realizations must be >= 2".into()));
    }
    // v* does not depend on the world, so it is estimated once.
    let best = match config.kind {
        PolicyKind::Enhanced => Some(best_single_node(graph, &config.estimator, rng_seed)?),
        _ => None,
    };
    let runs: Vec<(u64, u64, u64)> = (0..realizations as u64)
        .into_par_iter()
        .map(|w| {
            let seed = rng_seed.wrapping_add(w);
            let realization = FullRealization::sample(graph, seed);
            let run = match best {
                Some(best) => run_enhanced_arm(
                    graph,
                    config.alpha,
                    config.budget,
                    &realization,
                    &config.estimator,
                    seed,
                    enhanced_arm(seed),
                    best,
                )?,
                None => config.run(graph, &realization, seed)?,
            };
            Ok((
                run.realized_cascade as u64,
                run.slots_elapsed as u64,
                run.schedule.len() as u64,
            ))
        })
        .collect::<Result<_>>()?;
    let k = realizations as u128;
    let (mut sum, mut sum_sq, mut slots, mut seeds) = (0u128, 0u128, 0u128, 0u128);
    for &(c, t, s) in &runs {
        sum += c as u128;
        sum_sq += (c as u128) * (c as u128);
        slots += t as u128;
        seeds += s as u128;
    }
    // Sample variance numerator k Σx² - (Σx)² is exact in integers.
    let spread = k * sum_sq - sum * sum;
    let variance = spread as f64 / (k * (k - 1)) as f64;
    Ok(Evaluation {
        value: sum as f64 / k as f64,
        method: EvaluationMethod::Sampled {
            count: realizations,
            std_error: (variance / k as f64).sqrt(),
        },
        mean_slots: slots as f64 / k as f64,
        mean_seeds: seeds as f64 / k as f64,
    })
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Exact `I(U)` for many sets at once: realizations are enumerated once and
/// each set is scored per realization.
fn expected_spreads<C: Cost>(
    graph: &DirectedGraph<C>,
    space: &RealizationSpace,
    sets: &[Vec<NodeId>],
) -> Vec<f64> {
    let per_world: Vec<(Vec<usize>, f64)> = (0..space.len())
        .into_par_iter()
        .map(|index| {
            let (realization, weight) = space.get(index);
            let sizes = sets
                .iter()
                .map(|s| cascade_size(graph, &realization, s))
                .collect();
            (sizes, weight)
        })
        .collect();
    let mut values = vec![0.0; sets.len()];
    let mut total = 0.0;
    for (sizes, w) in &per_world {
        total += w;
        for (v, &s) in values.iter_mut().zip(sizes) {
            *v += w * s as f64;
        }
    }
    values.iter().map(|v| v / total).collect()
}

/// Exact expected cascade `I(U)` of a seed set committed up front.
pub fn expected_spread<C: Cost>(graph: &DirectedGraph<C>, seeds: &[NodeId]) -> Result<f64> {
    let space = RealizationSpace::new(graph, ENUMERATION_EDGE_LIMIT)?;
    Ok(expected_spreads(graph, &space, &[seeds.to_vec()])[0])
}

/// Best seed set of cost at most `budget` when all seeds are committed at
/// once. Ties go to the lexicographically smallest set.
pub fn optimal_nonadaptive<C: Cost>(
    graph: &DirectedGraph<C>,
    budget: C,
) -> Result<(Vec<NodeId>, f64)> {
    let n = graph.node_count();
    let space = RealizationSpace::new(graph, ENUMERATION_EDGE_LIMIT)?;
    let max_size = if budget < graph.min_cost() {
        0
    } else {
        ((budget.as_f64() / graph.min_cost().as_f64()).floor() as usize).min(n)
    };
    let sets_bound: u128 = (0..=max_size).map(|k| binomial(n, k)).sum();
    if sets_bound.saturating_mul(space.len() as u128) > NONADAPTIVE_WORK_LIMIT {
        return Err(Error::TooLarge(format!(
            "{sets_bound} candidate sets x {} realizations exceeds the search guard",
            space.len()
        )));
    }

    // Depth-first in ascending order lists sets lexicographically.
    let mut sets = Vec::new();
    let mut stack: Vec<(Vec<NodeId>, C, NodeId)> = vec![(Vec::new(), C::zero(), 0)];
    while let Some((set, cost, next)) = stack.pop() {
        for v in (next..n).rev() {
            let c = cost + graph.cost(v);
            if c <= budget {
                let mut child = set.clone();
                child.push(v);
                stack.push((child, c, v + 1));
            }
        }
        sets.push(set);
    }

    let values = expected_spreads(graph, &space, &sets);
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] + TIE_TOLERANCE * values[best].max(1.0) {
            best = i;
        }
    }
    Ok((sets[best].clone(), values[best]))
}

/// Non-adaptive greedy with unit costs: adds the node with the largest exact
/// `I(S ∪ {v}) - I(S)`, smallest id on ties, `k` times.
pub fn greedy_nonadaptive<C: Cost>(graph: &DirectedGraph<C>, k: usize) -> Result<Vec<NodeId>> {
    let space = RealizationSpace::new(graph, ENUMERATION_EDGE_LIMIT)?;
    let mut seeds: Vec<NodeId> = Vec::new();
    let mut current = 0.0;
    for _ in 0..k.min(graph.node_count()) {
        let candidates: Vec<NodeId> = (0..graph.node_count())
            .filter(|v| !seeds.contains(v))
            .collect();
        let sets: Vec<Vec<NodeId>> = candidates
            .iter()
            .map(|&c| {
                let mut s = seeds.clone();
                s.push(c);
                s
            })
            .collect();
        let values = expected_spreads(graph, &space, &sets);
        let mut best = 0;
        for i in 1..values.len() {
            let (g, b) = (values[i] - current, values[best] - current);
            if g > b + TIE_TOLERANCE * b.abs().max(1.0) {
                best = i;
            }
        }
        seeds.push(candidates[best]);
        current = values[best];
    }
    Ok(seeds)
}

/// Optimal expected cascade of a policy that picks `budget` seeds one at a
/// time and sees the complete diffusion of earlier seeds before each choice.
pub fn optimal_full_feedback_adaptive<C: Cost>(
    graph: &DirectedGraph<C>,
    budget: usize,
) -> Result<f64> {
    let n = graph.node_count();
    if !graph.has_unit_costs() {
        return Err(Error::Unsupported(
            "the full-feedback optimum is only defined for unit costs".into(),
        ));
    }
    if n > ADAPTIVE_NODE_LIMIT
        || graph.edge_count() > ADAPTIVE_EDGE_LIMIT
        || budget > ADAPTIVE_BUDGET_LIMIT
    {
        return Err(Error::TooLarge(format!(
            "full-feedback search needs n <= {ADAPTIVE_NODE_LIMIT}, |E| <= {ADAPTIVE_EDGE_LIMIT}, \
             B <= {ADAPTIVE_BUDGET_LIMIT} (got n={n}, |E|={}, B={budget})",
            graph.edge_count()
        )));
    }
    let space = RealizationSpace::new(graph, ADAPTIVE_EDGE_LIMIT)?;
    let worlds: Vec<(FullRealization, f64)> = (0..space.len()).map(|i| space.get(i)).collect();
    let all: Vec<usize> = (0..worlds.len()).collect();
    Ok(adaptive_value(graph, &worlds, &all, 0, budget))
}

fn active_mask<C: Cost>(
    graph: &DirectedGraph<C>,
    realization: &FullRealization,
    active: u64,
    extra: NodeId,
) -> u64 {
    let mut mask = active | 1 << extra;
    let mut frontier: Vec<NodeId> = (0..graph.node_count())
        .filter(|v| mask >> v & 1 == 1)
        .collect();
    while let Some(u) = frontier.pop() {
        for &e in graph.out_edges(u) {
            let v = graph.edge(e).target;
            if realization.is_live(e) && mask >> v & 1 == 0 {
                mask |= 1 << v;
                frontier.push(v);
            }
        }
    }
    mask
}

/// Expected final cascade from a state where `active` is the observed active
/// set and `members` the realizations consistent with everything seen so far.
/// Under full feedback the observation after each seed is the new active set
/// together with the states of its out-edges; edges from the active set to the
/// rest are necessarily blocked and edges inside it never matter again, so the
/// new active set alone identifies the posterior.
fn adaptive_value<C: Cost>(
    graph: &DirectedGraph<C>,
    worlds: &[(FullRealization, f64)],
    members: &[usize],
    active: u64,
    remaining: usize,
) -> f64 {
    let n = graph.node_count();
    let count = active.count_ones() as f64;
    if remaining == 0 || active.count_ones() as usize == n {
        return count;
    }
    let total: f64 = members.iter().map(|&i| worlds[i].1).sum();
    let mut best = count;
    for v in (0..n).filter(|v| active >> v & 1 == 0) {
        let mut groups: Vec<(u64, Vec<usize>)> = Vec::new();
        for &i in members {
            let next = active_mask(graph, &worlds[i].0, active, v);
            match groups.iter_mut().find(|(m, _)| *m == next) {
                Some((_, g)) => g.push(i),
                None => groups.push((next, vec![i])),
            }
        }
        let mut value = 0.0;
        for (next, group) in &groups {
            let weight: f64 = group.iter().map(|&i| worlds[i].1).sum();
            value += weight / total * adaptive_value(graph, worlds, group, *next, remaining - 1);
        }
        best = best.max(value);
    }
    best
}
