//! α-greedy seeding under partial feedback.
//!
//! Each round either selects the candidate with the largest estimated marginal
//! gain (or gain per unit cost) or waits one slot for more observations. After
//! the first seed, a selection is only allowed once the average activation
//! probability over nodes that may still activate reaches `α`:
//!
//! ```text
//! f(S; ψ) / |V \ O| >= α
//! ```
//!
//! `α = 0` never waits (all seeds at slot 0, the non-adaptive greedy) and
//! `α = 1` waits until every node outside `O` is known to be active, which is
//! full feedback.

use std::fmt::Write as _;

use rand::Rng;

use crate::diffusion::{
    cascade_size, is_settled, observe, FullRealization, PartialRealization, SeedSchedule, Slot,
};
use crate::error::{Error, Result};
use crate::estimation::{ActivationEstimate, Estimator};
use crate::graph::{DirectedGraph, NodeId};
use crate::rng::{stream_rng, STREAM_COIN};
use crate::scalar::Cost;

/// Relative tolerance under which two scores count as tied (smallest id wins).
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Action<C> {
    Selected {
        node: NodeId,
        gain: f64,
        remaining_budget: C,
    },
    Waited,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundLog<C> {
    pub round: usize,
    pub slot: Slot,
    pub action: Action<C>,
    /// `f / |V \ O|`, undefined before the first seed.
    pub condition_value: Option<f64>,
    pub zero_set_size: usize,
    /// The gate failed but the diffusion had settled, so waiting could not help.
    pub forced: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnhancedArm {
    BestSingle,
    Greedy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyRun<C> {
    pub schedule: SeedSchedule,
    pub rounds: Vec<RoundLog<C>>,
    pub realized_cascade: usize,
    pub total_cost: C,
    pub slots_elapsed: Slot,
    pub arm: Option<EnhancedArm>,
}

impl<C: Cost> PolicyRun<C> {
    pub fn seeds(&self) -> Vec<NodeId> {
        self.schedule.nodes()
    }

    /// One line per round:
    /// `r=<k> slot=<t> action=<select:v,gain,budget|wait> cond=<x> |O|=<m>`.
    pub fn transcript(&self) -> String {
        self.transcript_with(|v| v.to_string())
    }

    /// [`transcript`](Self::transcript) with nodes rendered by `label`.
    pub fn transcript_with(&self, label: impl Fn(NodeId) -> String) -> String {
        let mut out = String::new();
        for r in &self.rounds {
            let action = match r.action {
                Action::Selected {
                    node,
                    gain,
                    remaining_budget,
                } => format!(
                    "select:{},{gain},{}",
                    label(node),
                    remaining_budget.render()
                ),
                Action::Waited => "wait".to_string(),
            };
            let cond = r
                .condition_value
                .map_or_else(|| "undef".to_string(), |c| format!("{c}"));
            let _ = writeln!(
                out,
                "r={} slot={} action={action} cond={cond} |O|={}",
                r.round, r.slot, r.zero_set_size
            );
        }
        out
    }
}

/// `f / |V \ O|`, or `None` when every node is in `O`.
pub fn condition_value(est: &ActivationEstimate) -> Option<f64> {
    let denom = est.live_candidates();
    (denom > 0).then(|| est.f / denom as f64)
}

/// The selection gate. `α = 0` always passes.
pub fn condition_satisfied(est: &ActivationEstimate, alpha: f64, n: usize) -> bool {
    debug_assert_eq!(est.p.len(), n);
    if alpha == 0.0 {
        return true;
    }
    condition_value(est).is_some_and(|v| v >= alpha)
}

/// Index of the largest score; near-ties go to the earliest index.
fn argmax(scores: impl IntoIterator<Item = f64>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.into_iter().enumerate() {
        match best {
            Some((_, b)) if s <= b + TIE_TOLERANCE * b.abs().max(1.0) => {}
            _ => best = Some((i, s)),
        }
    }
    best
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    Ok(())
}

fn check_realization<C: Cost>(
    graph: &DirectedGraph<C>,
    realization: &FullRealization,
) -> Result<()> {
    if realization.edge_count() != graph.edge_count() {
        return Err(Error::InvalidArgument(format!(
            "realization covers {} edges, graph has {}",
            realization.edge_count(),
            graph.edge_count()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Rule {
    /// Unit costs: stop after exactly this many seeds.
    Cardinality(usize),
    /// Gain per unit cost with the budget break rule.
    CostRatio,
}

fn run_greedy<C: Cost>(
    graph: &DirectedGraph<C>,
    alpha: f64,
    budget: C,
    realization: &FullRealization,
    estimator: &Estimator,
    rng_seed: u64,
    rule: Rule,
) -> Result<PolicyRun<C>> {
    check_alpha(alpha)?;
    check_realization(graph, realization)?;
    let n = graph.node_count();
    let mut session = estimator.session(rng_seed);
    let mut schedule = SeedSchedule::new();
    let mut rounds = Vec::new();
    let mut psi = PartialRealization::empty(graph.edge_count());
    let mut slot: Slot = 0;
    let mut remaining = budget;

    loop {
        let seeds = schedule.nodes();
        let candidates: Vec<NodeId> = (0..n).filter(|v| !schedule.contains(*v)).collect();
        let done = match rule {
            Rule::Cardinality(k) => seeds.len() >= k,
            // Once nothing is affordable every later selection would break.
            Rule::CostRatio => !candidates.iter().any(|&v| graph.cost(v) <= remaining),
        };
        if done || candidates.is_empty() {
            break;
        }

        let (condition, zero_set_size, forced) = if seeds.is_empty() {
            (None, n, false)
        } else {
            let est = session.activation(graph, &seeds, &psi)?;
            let value = condition_value(&est);
            assert!(
                value.is_some(),
                "a seed always has positive activation probability"
            );
            let mut forced = false;
            if !condition_satisfied(&est, alpha, n) {
                if !is_settled(graph, realization, &schedule, slot) {
                    rounds.push(RoundLog {
                        round: rounds.len(),
                        slot,
                        action: Action::Waited,
                        condition_value: value,
                        zero_set_size: est.zero_set_size(),
                        forced: false,
                    });
                    slot += 1;
                    psi = observe(graph, realization, &schedule, slot);
                    continue;
                }
                forced = true;
            }
            (value, est.zero_set_size(), forced)
        };

        // The first selection is unconditional and restricted to affordable nodes.
        let pool: Vec<NodeId> = if seeds.is_empty() {
            candidates
                .iter()
                .copied()
                .filter(|&v| graph.cost(v) <= remaining)
                .collect()
        } else {
            candidates
        };
        if pool.is_empty() {
            return Err(Error::Budget(format!(
                "no node is affordable under budget {}",
                budget.render()
            )));
        }
        let round = session.round(graph, &seeds, &psi, &pool)?;
        let scores = round.gains.iter().zip(&pool).map(|(&g, &v)| match rule {
            Rule::Cardinality(_) => g,
            Rule::CostRatio => g / graph.cost(v).as_f64(),
        });
        let (best, _) = argmax(scores).expect("non-empty pool");
        let node = pool[best];
        let cost = graph.cost(node);
        if cost > remaining {
            break;
        }
        remaining = remaining - cost;
        schedule.push(node, slot)?;
        rounds.push(RoundLog {
            round: rounds.len(),
            slot,
            action: Action::Selected {
                node,
                gain: round.gains[best],
                remaining_budget: remaining,
            },
            condition_value: condition,
            zero_set_size,
            forced,
        });
    }

    let realized_cascade = cascade_size(graph, realization, &schedule.nodes());
    Ok(PolicyRun {
        schedule,
        rounds,
        realized_cascade,
        total_cost: budget - remaining,
        slots_elapsed: slot,
        arm: None,
    })
}

/// α-greedy policy for unit costs: selects exactly `budget` seeds.
pub fn run_alpha_greedy_uniform<C: Cost>(
    graph: &DirectedGraph<C>,
    alpha: f64,
    budget: usize,
    realization: &FullRealization,
    estimator: &Estimator,
    rng_seed: u64,
) -> Result<PolicyRun<C>> {
    if budget < 1 {
        return Err(Error::Budget("budget must be at least 1".into()));
    }
    if !graph.has_unit_costs() {
        return Err(Error::Unsupported(
            "the uniform-cost policy requires every node cost to be 1".into(),
        ));
    }
    if budget > graph.node_count() {
        return Err(Error::Budget(format!(
            "budget exceeds node count under uniform cost ({budget} > {})",
            graph.node_count()
        )));
    }
    run_greedy(
        graph,
        alpha,
        C::from_usize(budget),
        realization,
        estimator,
        rng_seed,
        Rule::Cardinality(budget),
    )
}

/// α-greedy policy with the gain-per-cost rule. Stops when the preferred node
/// no longer fits the remaining budget.
pub fn run_alpha_greedy_nonuniform<C: Cost>(
    graph: &DirectedGraph<C>,
    alpha: f64,
    budget: C,
    realization: &FullRealization,
    estimator: &Estimator,
    rng_seed: u64,
) -> Result<PolicyRun<C>> {
    if budget < graph.min_cost() {
        return Err(Error::Budget(format!(
            "no affordable first node: budget {} < cheapest cost {}",
            budget.render(),
            graph.min_cost().render()
        )));
    }
    run_greedy(
        graph,
        alpha,
        budget,
        realization,
        estimator,
        rng_seed,
        Rule::CostRatio,
    )
}

/// Node with the largest unconditional expected cascade `I({v})`, smallest id on ties.
pub fn best_single_node<C: Cost>(
    graph: &DirectedGraph<C>,
    estimator: &Estimator,
    rng_seed: u64,
) -> Result<(NodeId, f64)> {
    let candidates: Vec<NodeId> = (0..graph.node_count()).collect();
    let psi = PartialRealization::empty(graph.edge_count());
    let round = estimator
        .session(rng_seed)
        .round(graph, &[], &psi, &candidates)?;
    let (best, value) = argmax(round.gains.iter().copied()).expect("graph has nodes");
    Ok((candidates[best], value))
}

/// The fair coin of the enhanced policy.
pub fn enhanced_arm(rng_seed: u64) -> EnhancedArm {
    if stream_rng(rng_seed, STREAM_COIN).gen::<bool>() {
        EnhancedArm::BestSingle
    } else {
        EnhancedArm::Greedy
    }
}

/// Runs one arm of the enhanced policy with a precomputed `v*`.
#[allow(clippy::too_many_arguments)]
pub fn run_enhanced_arm<C: Cost>(
    graph: &DirectedGraph<C>,
    alpha: f64,
    budget: C,
    realization: &FullRealization,
    estimator: &Estimator,
    rng_seed: u64,
    arm: EnhancedArm,
    best: (NodeId, f64),
) -> Result<PolicyRun<C>> {
    let (v_star, value) = best;
    if graph.cost(v_star) > budget {
        return Err(Error::Budget(format!(
            "best single node {v_star} costs {} > budget {}",
            graph.cost(v_star).render(),
            budget.render()
        )));
    }
    let mut run = match arm {
        EnhancedArm::BestSingle => {
            check_alpha(alpha)?;
            check_realization(graph, realization)?;
            let schedule = SeedSchedule::at_slot_zero(&[v_star])?;
            let cost = graph.cost(v_star);
            PolicyRun {
                realized_cascade: cascade_size(graph, realization, &[v_star]),
                rounds: vec![RoundLog {
                    round: 0,
                    slot: 0,
                    action: Action::Selected {
                        node: v_star,
                        gain: value,
                        remaining_budget: budget - cost,
                    },
                    condition_value: None,
                    zero_set_size: graph.node_count(),
                    forced: false,
                }],
                schedule,
                total_cost: cost,
                slots_elapsed: 0,
                arm: None,
            }
        }
        EnhancedArm::Greedy => {
            run_alpha_greedy_nonuniform(graph, alpha, budget, realization, estimator, rng_seed)?
        }
    };
    run.arm = Some(arm);
    Ok(run)
}

/// Enhanced policy: a fair coin picks either `{v*}` or the non-uniform α-greedy run.
pub fn run_enhanced<C: Cost>(
    graph: &DirectedGraph<C>,
    alpha: f64,
    budget: C,
    realization: &FullRealization,
    estimator: &Estimator,
    rng_seed: u64,
) -> Result<PolicyRun<C>> {
    let best = best_single_node(graph, estimator, rng_seed)?;
    let arm = enhanced_arm(rng_seed);
    run_enhanced_arm(
        graph,
        alpha,
        budget,
        realization,
        estimator,
        rng_seed,
        arm,
        best,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    Uniform,
    NonUniform,
    Enhanced,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Uniform => "uniform",
            PolicyKind::NonUniform => "nonuniform",
            PolicyKind::Enhanced => "enhanced",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "uniform" => Some(PolicyKind::Uniform),
            "nonuniform" | "non-uniform" => Some(PolicyKind::NonUniform),
            "enhanced" => Some(PolicyKind::Enhanced),
            _ => None,
        }
    }
}

/// Everything needed to run a policy on a realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyConfig<C> {
    pub kind: PolicyKind,
    pub alpha: f64,
    pub budget: C,
    pub estimator: Estimator,
}

impl<C: Cost> PolicyConfig<C> {
    pub fn new(kind: PolicyKind, alpha: f64, budget: C, estimator: Estimator) -> Self {
        Self {
            kind,
            alpha,
            budget,
            estimator,
        }
    }

    /// The budget as a seed count; only meaningful for the uniform policy.
    pub fn cardinality(&self) -> Result<usize> {
        let k = self.budget.as_f64().round();
        if k < 0.0 || C::from_usize(k as usize) != self.budget {
            return Err(Error::Budget(format!(
                "uniform-cost budget must be a whole number, got {}",
                self.budget.render()
            )));
        }
        Ok(k as usize)
    }

    pub fn run(
        &self,
        graph: &DirectedGraph<C>,
        realization: &FullRealization,
        rng_seed: u64,
    ) -> Result<PolicyRun<C>> {
        match self.kind {
            PolicyKind::Uniform => run_alpha_greedy_uniform(
                graph,
                self.alpha,
                self.cardinality()?,
                realization,
                &self.estimator,
                rng_seed,
            ),
            PolicyKind::NonUniform => run_alpha_greedy_nonuniform(
                graph,
                self.alpha,
                self.budget,
                realization,
                &self.estimator,
                rng_seed,
            ),
            PolicyKind::Enhanced => run_enhanced(
                graph,
                self.alpha,
                self.budget,
                realization,
                &self.estimator,
                rng_seed,
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::live_diameter;
    use crate::estimation::{epsilon_wrap, exact_conditional_activation, ErrorMode};
    use num_rational::Rational64;
    use proptest::prelude::*;

    type G = DirectedGraph<Rational64>;

    fn r(n: i64) -> Rational64 {
        Rational64::from_integer(n)
    }

    fn chain(n: usize, p: f64) -> G {
        G::with_unit_costs(n, (0..n - 1).map(|v| (v, v + 1, p))).unwrap()
    }

    fn selections(run: &PolicyRun<Rational64>) -> Vec<(NodeId, Slot)> {
        run.schedule.entries().to_vec()
    }

    #[test]
    fn condition_cases() {
        let est = |p: Vec<f64>, zero: Vec<NodeId>| ActivationEstimate {
            f: p.iter().sum(),
            p,
            zero_set: zero,
            backend: Estimator::exact(),
        };
        let e = est(vec![1.0, 0.5, 0.5, 0.5, 0.5, 0.0], vec![5]);
        assert!((condition_value(&e).unwrap() - 0.6).abs() < 1e-15);
        assert!(!condition_satisfied(&e, 0.7, 6));
        assert!(condition_satisfied(&e, 0.6, 6));
        assert!(condition_satisfied(&e, 0.0, 6));
        let settled = est(vec![1.0, 1.0, 0.0], vec![2]);
        assert!(condition_satisfied(&settled, 1.0, 3));
        let none = est(vec![0.0, 0.0], vec![0, 1]);
        assert_eq!(condition_value(&none), None);
        assert!(condition_satisfied(&none, 0.0, 2));
        assert!(!condition_satisfied(&none, 0.5, 2));
    }

    #[test]
    fn argmax_prefers_smallest_index_on_ties() {
        assert_eq!(argmax([1.0, 2.0, 2.0]).unwrap().0, 1);
        assert_eq!(argmax([0.75, 0.75 + 1e-16, 0.5]).unwrap().0, 0);
        assert_eq!(argmax([0.0, 0.0]).unwrap().0, 0);
    }

    #[test]
    fn single_seed_picks_best_expected_cascade() {
        let g = chain(3, 0.5);
        let real = FullRealization::from_live(vec![false, false]);
        let run = run_alpha_greedy_uniform(&g, 0.5, 1, &real, &Estimator::exact(), 0).unwrap();
        assert_eq!(selections(&run), vec![(0, 0)]);
        assert!(run.rounds.iter().all(|r| r.action != Action::Waited));
        assert_eq!(run.realized_cascade, 1);
    }

    #[test]
    fn alpha_zero_selects_everything_at_slot_zero() {
        let g = G::with_unit_costs(5, [(0, 1, 0.5), (1, 2, 0.5), (3, 4, 0.3)]).unwrap();
        let real = FullRealization::from_live(vec![true, false, true]);
        let run = run_alpha_greedy_uniform(&g, 0.0, 3, &real, &Estimator::exact(), 0).unwrap();
        assert_eq!(run.schedule.len(), 3);
        assert!(run.schedule.entries().iter().all(|&(_, t)| t == 0));
        assert_eq!(run.slots_elapsed, 0);
    }

    #[test]
    fn alpha_one_waits_for_full_feedback() {
        // Chain 0 -> 1 -> 2 with (0,1) live and (1,2) blocked. Seed 0 first;
        // at slot 1 (0,1) is seen live, at slot 2 (1,2) is seen blocked, and
        // then node 2 is the only node with a positive gain.
        let g = chain(3, 0.5);
        let real = FullRealization::from_live(vec![true, false]);
        let run = run_alpha_greedy_uniform(&g, 1.0, 2, &real, &Estimator::exact(), 0).unwrap();
        assert_eq!(selections(&run), vec![(0, 0), (2, 2)]);
        let waits = run
            .rounds
            .iter()
            .filter(|r| r.action == Action::Waited)
            .count();
        assert_eq!(waits, 2);
        assert_eq!(run.realized_cascade, 3);
        assert_eq!(
            run.transcript(),
            "r=0 slot=0 action=select:0,1.75,1 cond=undef |O|=3\n\
             r=1 slot=0 action=wait cond=0.5833333333333334 |O|=0\n\
             r=2 slot=1 action=wait cond=0.8333333333333334 |O|=0\n\
             r=3 slot=2 action=select:2,1,0 cond=1 |O|=1\n"
        );
    }

    #[test]
    fn uniform_rejects_bad_budgets() {
        let g = chain(3, 0.5);
        let real = FullRealization::from_live(vec![true, true]);
        assert!(run_alpha_greedy_uniform(&g, 0.5, 0, &real, &Estimator::exact(), 0).is_err());
        let err = run_alpha_greedy_uniform(&g, 0.5, 4, &real, &Estimator::exact(), 0).unwrap_err();
        assert!(err.to_string().contains("budget exceeds node count"));
        assert!(run_alpha_greedy_uniform(&g, 1.5, 1, &real, &Estimator::exact(), 0).is_err());
        let costly = g.with_costs(vec![r(1), r(2), r(1)]).unwrap();
        assert!(run_alpha_greedy_uniform(&costly, 0.5, 1, &real, &Estimator::exact(), 0).is_err());
    }

    #[test]
    fn nonuniform_breaks_on_unaffordable_choice() {
        let g = G::new(vec![r(1), r(3)], []).unwrap();
        let real = FullRealization::from_live(vec![]);
        let run =
            run_alpha_greedy_nonuniform(&g, 0.5, r(2), &real, &Estimator::exact(), 0).unwrap();
        assert_eq!(run.seeds(), vec![0]);
        assert_eq!(run.total_cost, r(1));
    }

    #[test]
    fn nonuniform_break_rule_stops_even_if_cheaper_nodes_remain() {
        // Isolated nodes: 0 (cost 1), 1 (cost 2, star over 3 nodes), cheap 5 (cost 1).
        // Ratios after picking 1: node with 4 spread / cost 4 = 1 vs isolated 1/1.
        let g = G::new(
            vec![r(2), r(1), r(1), r(1), r(4), r(1), r(1), r(1)],
            [
                (0, 1, 1.0),
                (0, 2, 1.0),
                (0, 3, 1.0),
                (4, 5, 1.0),
                (4, 6, 1.0),
                (4, 7, 1.0),
            ],
        )
        .unwrap();
        let real = FullRealization::from_live(vec![true; 6]);
        // Node 0: 4/2 = 2. Then node 4: 4/4 = 1 ties nothing better; budget 3 left -> break.
        let run =
            run_alpha_greedy_nonuniform(&g, 0.0, r(5), &real, &Estimator::exact(), 0).unwrap();
        assert_eq!(run.seeds(), vec![0]);
        assert_eq!(run.total_cost, r(2));
    }

    #[test]
    fn nonuniform_single_affordable_node() {
        let g = G::new(vec![r(5), r(2), r(7)], [(0, 1, 0.5), (1, 2, 0.5)]).unwrap();
        let real = FullRealization::from_live(vec![true, true]);
        let run =
            run_alpha_greedy_nonuniform(&g, 0.5, r(3), &real, &Estimator::exact(), 0).unwrap();
        assert_eq!(run.seeds(), vec![1]);
        let err =
            run_alpha_greedy_nonuniform(&g, 0.5, r(1), &real, &Estimator::exact(), 0).unwrap_err();
        assert!(err.to_string().contains("no affordable first node"));
    }

    #[test]
    fn best_single_node_cases() {
        let g = G::with_unit_costs(3, []).unwrap();
        assert_eq!(
            best_single_node(&g, &Estimator::exact(), 0).unwrap(),
            (0, 1.0)
        );
        let g = chain(3, 0.5);
        assert_eq!(
            best_single_node(&g, &Estimator::exact(), 0).unwrap(),
            (0, 1.75)
        );
        let star = G::with_unit_costs(4, [(1, 0, 1.0), (1, 2, 1.0), (1, 3, 1.0)]).unwrap();
        assert_eq!(
            best_single_node(&star, &Estimator::exact(), 0).unwrap(),
            (1, 4.0)
        );
    }

    #[test]
    fn enhanced_arms() {
        let g = G::new(vec![r(1), r(1), r(1), r(2)], [(0, 1, 0.5), (1, 2, 0.5)]).unwrap();
        let real = FullRealization::from_live(vec![true, false]);
        let est = Estimator::exact();
        let single = run_enhanced_arm(
            &g,
            0.5,
            r(3),
            &real,
            &est,
            4,
            EnhancedArm::BestSingle,
            (0, 1.75),
        )
        .unwrap();
        assert_eq!(single.seeds(), vec![0]);
        assert_eq!(single.arm, Some(EnhancedArm::BestSingle));
        let greedy = run_enhanced_arm(
            &g,
            0.5,
            r(3),
            &real,
            &est,
            4,
            EnhancedArm::Greedy,
            (0, 1.75),
        )
        .unwrap();
        let mut plain = run_alpha_greedy_nonuniform(&g, 0.5, r(3), &real, &est, 4).unwrap();
        plain.arm = Some(EnhancedArm::Greedy);
        assert_eq!(greedy, plain);

        let g = G::new(vec![r(5), r(1)], [(0, 1, 0.5)]).unwrap();
        let real = FullRealization::from_live(vec![true]);
        assert!(run_enhanced(&g, 0.5, r(2), &real, &est, 0).is_err());
    }

    #[test]
    fn enhanced_coin_is_fair() {
        // 3-sigma binomial band over 10,000 seeds.
        let heads = (0..10_000u64)
            .filter(|&s| enhanced_arm(s) == EnhancedArm::BestSingle)
            .count();
        let frac = heads as f64 / 10_000.0;
        assert!((frac - 0.5).abs() <= 0.015, "{frac}");
    }

    #[test]
    fn settled_run_forces_selection_under_low_estimates() {
        let g = chain(4, 0.5);
        let real = FullRealization::from_live(vec![true, true, false]);
        let est = epsilon_wrap(Estimator::exact(), 0.9, ErrorMode::AdversarialLow, 0).unwrap();
        let run = run_alpha_greedy_uniform(&g, 1.0, 2, &real, &est, 0).unwrap();
        assert_eq!(run.schedule.len(), 2);
        assert!(run.rounds.iter().any(|r| r.forced));
    }

    fn arb_instance() -> impl Strategy<Value = (G, FullRealization)> {
        (2usize..7)
            .prop_flat_map(|n| {
                let pairs: Vec<(usize, usize)> = (0..n)
                    .flat_map(|u| (0..n).filter(move |&v| v != u).map(move |v| (u, v)))
                    .collect();
                let m = pairs.len();
                (
                    Just(n),
                    proptest::sample::subsequence(pairs, 0..=m.min(9)),
                    proptest::collection::vec(prop_oneof![Just(1.0), 0.1f64..0.9], 9),
                    proptest::collection::vec(any::<bool>(), 9),
                    proptest::collection::vec(1i64..5, 7),
                )
            })
            .prop_map(|(n, pairs, probs, live, costs)| {
                let m = pairs.len();
                let g = G::new(
                    costs[..n].iter().map(|&c| r(c)).collect(),
                    pairs.into_iter().zip(&probs).map(|((u, v), &p)| (u, v, p)),
                )
                .unwrap();
                let live = (0..m)
                    .map(|e| g.edge(e).probability >= 1.0 || live[e])
                    .collect();
                (g, FullRealization::from_live(live))
            })
    }

    fn unit(g: &G) -> G {
        g.with_costs(vec![r(1); g.node_count()]).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn budget_is_respected((g, real) in arb_instance(), alpha in 0.0f64..=1.0, budget in 1i64..9) {
            let budget = r(budget);
            if budget >= g.min_cost() {
                let run = run_alpha_greedy_nonuniform(&g, alpha, budget, &real, &Estimator::exact(), 0).unwrap();
                prop_assert!(run.total_cost <= budget);
                let spent = run.seeds().iter().fold(r(0), |a, &v| a + g.cost(v));
                prop_assert_eq!(spent, run.total_cost);
                prop_assert_eq!(run.realized_cascade, cascade_size(&g, &real, &run.seeds()));
            }
        }

        #[test]
        fn unit_costs_make_both_rules_agree((g, real) in arb_instance(), alpha in 0.0f64..=1.0, k in 1usize..4) {
            let g = unit(&g);
            let k = k.min(g.node_count());
            let a = run_alpha_greedy_uniform(&g, alpha, k, &real, &Estimator::exact(), 0).unwrap();
            let b = run_alpha_greedy_nonuniform(&g, alpha, r(k as i64), &real, &Estimator::exact(), 0).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn alpha_one_selects_under_full_information((g, real) in arb_instance(), k in 2usize..4) {
            let g = unit(&g);
            let k = k.min(g.node_count());
            let run = run_alpha_greedy_uniform(&g, 1.0, k, &real, &Estimator::exact(), 0).unwrap();
            for (i, &(v, t)) in run.schedule.entries().iter().enumerate().skip(1) {
                let before = SeedSchedule::from_entries(run.schedule.entries()[..i].iter().copied()).unwrap();
                let psi = observe(&g, &real, &before, t);
                let est = exact_conditional_activation(&g, &before.nodes(), &psi).unwrap();
                prop_assert!(est.p.iter().all(|&p| p == 0.0 || p == 1.0), "selection of {} at slot {}: {:?}", v, t, est.p);
            }
        }

        #[test]
        fn waits_are_bounded((g, real) in arb_instance(), alpha in 0.0f64..=1.0, k in 1usize..4) {
            let g = unit(&g);
            let k = k.min(g.node_count());
            let bound = live_diameter(&g, &real) + 1;
            let run = run_alpha_greedy_uniform(&g, alpha, k, &real, &Estimator::exact(), 0).unwrap();
            let mut streak = 0;
            for round in &run.rounds {
                match round.action {
                    Action::Waited => { streak += 1; prop_assert!(streak <= bound); }
                    Action::Selected { .. } => streak = 0,
                }
            }
        }

        #[test]
        fn slots_are_consistent((g, real) in arb_instance(), alpha in 0.0f64..=1.0, k in 1usize..4) {
            let g = unit(&g);
            let k = k.min(g.node_count());
            let run = run_alpha_greedy_uniform(&g, alpha, k, &real, &Estimator::exact(), 0).unwrap();
            for pair in run.rounds.windows(2) {
                let expected = match pair[0].action {
                    Action::Waited => pair[0].slot + 1,
                    Action::Selected { .. } => pair[0].slot,
                };
                prop_assert_eq!(pair[1].slot, expected);
            }
            prop_assert_eq!(run.schedule.len(), k);
        }

        #[test]
        fn runs_are_deterministic((g, real) in arb_instance(), alpha in 0.0f64..=1.0, seed: u64) {
            let est = Estimator::monte_carlo(64).unwrap();
            let budget = g.max_cost();
            let a = run_enhanced(&g, alpha, budget, &real, &est, seed).unwrap();
            let b = run_enhanced(&g, alpha, budget, &real, &est, seed).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
