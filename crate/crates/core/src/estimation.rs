//! Conditional activation probabilities `p_v(S; ψ)`, the conditional expected
//! cascade `f(S; ψ)`, the zero-probability set `O`, and marginal gains.
//!
//! Three backends share one contract:
//!
//! * **exact**: enumerates every assignment of the relevant unobserved edges
//!   (observed edges are fixed, edges with `p = 1` are always live and edges
//!   with `p = 0` never are). Guarded at [`EXACT_EDGE_LIMIT`] free edges.
//! * **Monte Carlo**: averages over sampled completions of the unobserved
//!   edges. Counts are integers, summed before the final division, so the
//!   result does not depend on how the sample loop is scheduled.
//! * **ε-wrapped**: multiplies every `f` value of an inner backend by a factor
//!   in `[1 - ε, 1 + ε]`.
//!
//! Marginal gains for one selection round are computed from common worlds:
//! the same completions serve `f(S)` and every `f(S ∪ {v})`.

use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::diffusion::{Observation, PartialRealization};
use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, EdgeId, NodeId};
use crate::reach::WorldEvaluator;
use crate::rng::{stream_rng, STREAM_EPSILON, STREAM_ESTIMATOR};
use crate::scalar::Cost;

/// Maximum number of free (unobserved, `0 < p < 1`) edges the exact backend enumerates.
pub const EXACT_EDGE_LIMIT: usize = 22;

/// Completions per rayon task in the Monte Carlo loop.
const MC_CHUNK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorMode {
    Random,
    AdversarialHigh,
    AdversarialLow,
}

impl ErrorMode {
    pub fn name(self) -> &'static str {
        match self {
            ErrorMode::Random => "random",
            ErrorMode::AdversarialHigh => "adversarial-high",
            ErrorMode::AdversarialLow => "adversarial-low",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "random" => Some(ErrorMode::Random),
            "adversarial-high" | "high" => Some(ErrorMode::AdversarialHigh),
            "adversarial-low" | "low" => Some(ErrorMode::AdversarialLow),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Exact,
    MonteCarlo { samples: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonWrap {
    pub epsilon: f64,
    pub mode: ErrorMode,
    pub rng_seed: u64,
}

/// Immutable estimator configuration. Evaluation happens through an
/// [`EstimatorSession`], which owns the random streams.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimator {
    backend: Backend,
    wrap: Option<EpsilonWrap>,
}

impl Estimator {
    pub fn exact() -> Self {
        Self {
            backend: Backend::Exact,
            wrap: None,
        }
    }

    pub fn monte_carlo(samples: usize) -> Result<Self> {
        if samples == 0 {
            return Err(Error::InvalidArgument("samples must be >= 1".into()));
        }
        Ok(Self {
            backend: Backend::MonteCarlo { samples },
            wrap: None,
        })
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn wrap(&self) -> Option<EpsilonWrap> {
        self.wrap
    }

    pub fn is_exact(&self) -> bool {
        self.backend == Backend::Exact
    }

    /// `exact`, `mc:<samples>`, optionally followed by `+eps:<ε>:<mode>`.
    pub fn describe(&self) -> String {
        let mut s = match self.backend {
            Backend::Exact => "exact".to_string(),
            Backend::MonteCarlo { samples } => format!("mc:{samples}"),
        };
        if let Some(w) = self.wrap {
            s.push_str(&format!("+eps:{}:{}", w.epsilon, w.mode.name()));
        }
        s
    }

    pub fn session(&self, rng_seed: u64) -> EstimatorSession<'_> {
        EstimatorSession {
            estimator: self,
            mc_rng: stream_rng(rng_seed, STREAM_ESTIMATOR),
            eps_rng: self
                .wrap
                .map(|w| stream_rng(w.rng_seed ^ rng_seed.rotate_left(32), STREAM_EPSILON)),
        }
    }
}

/// Wraps `inner` so every `f` value it reports lies in `[(1-ε) f, (1+ε) f]`.
pub fn epsilon_wrap(
    inner: Estimator,
    epsilon: f64,
    mode: ErrorMode,
    rng_seed: u64,
) -> Result<Estimator> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in [0, 1), got {epsilon}"
        )));
    }
    if inner.wrap.is_some() {
        return Err(Error::Unsupported("nested epsilon wrapping".into()));
    }
    Ok(Estimator {
        backend: inner.backend,
        wrap: Some(EpsilonWrap {
            epsilon,
            mode,
            rng_seed,
        }),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivationEstimate {
    /// Per-node activation probability.
    pub p: Vec<f64>,
    /// Expected cascade as reported by the backend (perturbed when ε-wrapped).
    pub f: f64,
    /// Nodes that cannot be activated, sorted ascending.
    pub zero_set: Vec<NodeId>,
    pub backend: Estimator,
}

impl ActivationEstimate {
    pub fn zero_set_size(&self) -> usize {
        self.zero_set.len()
    }

    /// `|V \ O|`.
    pub fn live_candidates(&self) -> usize {
        self.p.len() - self.zero_set.len()
    }

    pub fn sum_p(&self) -> f64 {
        self.p.iter().sum()
    }

    /// Sum of `p_v` over `nodes`.
    pub fn f_on(&self, nodes: &[NodeId]) -> f64 {
        nodes.iter().map(|&v| self.p[v]).sum()
    }
}

/// Base estimate plus estimated marginal gains for a list of candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundEstimate {
    pub base: ActivationEstimate,
    /// `gains[i]` belongs to `candidates[i]`.
    pub gains: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum EdgeKind {
    Live,
    Blocked,
    Free(f64),
}

fn edge_kinds<C: Cost>(graph: &DirectedGraph<C>, psi: &PartialRealization) -> Vec<EdgeKind> {
    graph
        .edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| match psi.get(e) {
            Observation::Live => EdgeKind::Live,
            Observation::Blocked => EdgeKind::Blocked,
            Observation::Unobserved if edge.probability >= 1.0 => EdgeKind::Live,
            Observation::Unobserved if edge.probability <= 0.0 => EdgeKind::Blocked,
            Observation::Unobserved => EdgeKind::Free(edge.probability),
        })
        .collect()
}

/// Nodes reachable from `sources` when every edge that could still be live is
/// traversed.
fn possible_reach<C: Cost>(
    graph: &DirectedGraph<C>,
    kinds: &[EdgeKind],
    sources: &[NodeId],
) -> Vec<bool> {
    let mut seen = vec![false; graph.node_count()];
    let mut stack = Vec::new();
    for &s in sources {
        if !seen[s] {
            seen[s] = true;
            stack.push(s);
        }
    }
    while let Some(u) = stack.pop() {
        for &e in graph.out_edges(u) {
            if kinds[e] == EdgeKind::Blocked {
                continue;
            }
            let v = graph.edge(e).target;
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

fn validate_nodes<C: Cost>(graph: &DirectedGraph<C>, nodes: &[NodeId]) -> Result<()> {
    let n = graph.node_count();
    match nodes.iter().find(|&&v| v >= n) {
        Some(&node) => Err(Error::NodeOutOfRange {
            node,
            node_count: n,
        }),
        None => Ok(()),
    }
}

fn check_psi<C: Cost>(graph: &DirectedGraph<C>, psi: &PartialRealization) -> Result<()> {
    if psi.edge_count() != graph.edge_count() {
        return Err(Error::InvalidArgument(format!(
            "partial realization covers {} edges, graph has {}",
            psi.edge_count(),
            graph.edge_count()
        )));
    }
    Ok(())
}

/// Nodes with zero activation probability: those not reachable from `seeds`
/// once observed-blocked and zero-probability edges are removed.
pub fn zero_probability_set<C: Cost>(
    graph: &DirectedGraph<C>,
    seeds: &[NodeId],
    psi: &PartialRealization,
) -> Vec<NodeId> {
    let kinds = edge_kinds(graph, psi);
    let reach = possible_reach(graph, &kinds, seeds);
    (0..graph.node_count()).filter(|&v| !reach[v]).collect()
}

/// Free edges whose source may be active given `sources`; the rest cannot
/// influence any reachability question about `sources`.
fn relevant_free_edges<C: Cost>(
    graph: &DirectedGraph<C>,
    kinds: &[EdgeKind],
    sources: &[NodeId],
) -> Vec<(EdgeId, f64)> {
    let reach = possible_reach(graph, kinds, sources);
    kinds
        .iter()
        .enumerate()
        .filter_map(|(e, k)| match k {
            EdgeKind::Free(p) if reach[graph.edge(e).source] => Some((e, *p)),
            _ => None,
        })
        .collect()
}

fn fixed_live(kinds: &[EdgeKind]) -> Vec<bool> {
    kinds.iter().map(|k| *k == EdgeKind::Live).collect()
}

fn guard_exact(free: usize) -> Result<()> {
    if free > EXACT_EDGE_LIMIT {
        return Err(Error::TooLarge(format!(
            "{free} unobserved edges to enumerate (limit {EXACT_EDGE_LIMIT})"
        )));
    }
    Ok(())
}

/// Visits every assignment of `free` edges in binary-counter order (bit `i` =
/// `free[i]` live), passing the assignment weight and the full live mask.
fn for_each_assignment(
    mut live: Vec<bool>,
    free: &[(EdgeId, f64)],
    mut visit: impl FnMut(f64, &[bool]),
) {
    for mask in 0u64..(1u64 << free.len()) {
        let mut weight = 1.0;
        for (i, &(e, p)) in free.iter().enumerate() {
            let on = mask >> i & 1 == 1;
            live[e] = on;
            weight *= if on { p } else { 1.0 - p };
        }
        visit(weight, &live);
    }
}

fn build_estimate(p: Vec<f64>, zero_set: Vec<NodeId>, backend: Estimator) -> ActivationEstimate {
    let f = p.iter().sum();
    ActivationEstimate {
        p,
        f,
        zero_set,
        backend,
    }
}

/// Exact `p_v(S; ψ)` by enumeration of the free edges reachable from `seeds`.
pub fn exact_conditional_activation<C: Cost>(
    graph: &DirectedGraph<C>,
    seeds: &[NodeId],
    psi: &PartialRealization,
) -> Result<ActivationEstimate> {
    validate_nodes(graph, seeds)?;
    check_psi(graph, psi)?;
    let kinds = edge_kinds(graph, psi);
    let possible = possible_reach(graph, &kinds, seeds);
    let free = relevant_free_edges(graph, &kinds, seeds);
    guard_exact(free.len())?;
    let n = graph.node_count();
    let mut p = vec![0.0; n];
    let mut total = 0.0;
    let mut world = WorldEvaluator::new(n);
    for_each_assignment(fixed_live(&kinds), &free, |w, live| {
        total += w;
        world.reach_from(graph, live, seeds);
        for (v, pv) in p.iter_mut().enumerate() {
            if world.reached[v] {
                *pv += w;
            }
        }
    });
    // Normalizing by the accumulated weight makes nodes reached in every world
    // exactly 1.
    p.iter_mut().for_each(|pv| *pv /= total);
    let zero_set = (0..n).filter(|&v| !possible[v]).collect();
    Ok(build_estimate(p, zero_set, Estimator::exact()))
}

/// Monte Carlo `p_v(S; ψ)` over `samples` completions of the unobserved edges.
pub fn mc_conditional_activation<C: Cost>(
    graph: &DirectedGraph<C>,
    seeds: &[NodeId],
    psi: &PartialRealization,
    samples: usize,
    rng_seed: u64,
) -> Result<ActivationEstimate> {
    let estimator = Estimator::monte_carlo(samples)?;
    estimator.session(rng_seed).activation(graph, seeds, psi)
}

/// `f({candidate} ∪ S; ψ) - f(S; ψ)` under `estimator`.
pub fn marginal_gain<C: Cost>(
    estimator: &Estimator,
    graph: &DirectedGraph<C>,
    seeds: &[NodeId],
    psi: &PartialRealization,
    candidate: NodeId,
    rng_seed: u64,
) -> Result<f64> {
    estimator
        .session(rng_seed)
        .marginal_gain(graph, seeds, psi, candidate)
}

/// Stateful evaluation handle: owns the Monte Carlo and ε streams so that a
/// fixed query sequence is bit-reproducible.
pub struct EstimatorSession<'a> {
    estimator: &'a Estimator,
    mc_rng: ChaCha8Rng,
    eps_rng: Option<ChaCha8Rng>,
}

struct MonteCarloTally {
    counts: Vec<u64>,
    gains: Vec<u64>,
}

impl EstimatorSession<'_> {
    pub fn estimator(&self) -> &Estimator {
        self.estimator
    }

    fn factor(&mut self) -> f64 {
        let Some(w) = self.estimator.wrap else {
            return 1.0;
        };
        match w.mode {
            ErrorMode::AdversarialHigh => 1.0 + w.epsilon,
            ErrorMode::AdversarialLow => 1.0 - w.epsilon,
            ErrorMode::Random => {
                let u: f64 = self
                    .eps_rng
                    .as_mut()
                    .expect("epsilon stream present when wrapped")
                    .gen();
                1.0 + w.epsilon * (2.0 * u - 1.0)
            }
        }
    }

    fn perturbs(&self) -> bool {
        self.estimator.wrap.is_some_and(|w| w.epsilon > 0.0)
    }

    /// Activation probabilities and `f(S; ψ)`.
    pub fn activation<C: Cost>(
        &mut self,
        graph: &DirectedGraph<C>,
        seeds: &[NodeId],
        psi: &PartialRealization,
    ) -> Result<ActivationEstimate> {
        let mut est = match self.estimator.backend {
            Backend::Exact => exact_conditional_activation(graph, seeds, psi)?,
            Backend::MonteCarlo { samples } => {
                validate_nodes(graph, seeds)?;
                check_psi(graph, psi)?;
                let kinds = edge_kinds(graph, psi);
                let free = relevant_free_edges(graph, &kinds, seeds);
                let tally = self.monte_carlo(graph, &kinds, &free, seeds, &[], samples);
                self.mc_estimate(graph, &kinds, seeds, &tally.counts, samples)
            }
        };
        est.backend = *self.estimator;
        if self.perturbs() {
            est.f *= self.factor();
        }
        Ok(est)
    }

    /// Base estimate and the marginal gain of every candidate, from common worlds.
    pub fn round<C: Cost>(
        &mut self,
        graph: &DirectedGraph<C>,
        seeds: &[NodeId],
        psi: &PartialRealization,
        candidates: &[NodeId],
    ) -> Result<RoundEstimate> {
        validate_nodes(graph, seeds)?;
        validate_nodes(graph, candidates)?;
        check_psi(graph, psi)?;
        if let Some(&c) = candidates.iter().find(|c| seeds.contains(c)) {
            return Err(Error::AlreadySeed(c));
        }
        let kinds = edge_kinds(graph, psi);
        let mut sources = seeds.to_vec();
        sources.extend_from_slice(candidates);
        let free = relevant_free_edges(graph, &kinds, &sources);

        let (mut base, gains) = match self.estimator.backend {
            Backend::Exact => {
                guard_exact(free.len())?;
                let base = exact_conditional_activation(graph, seeds, psi)?;
                let mut gains = vec![0.0; candidates.len()];
                let mut scratch = vec![0u64; candidates.len()];
                let mut total = 0.0;
                let mut world = WorldEvaluator::new(graph.node_count());
                for_each_assignment(fixed_live(&kinds), &free, |w, live| {
                    total += w;
                    world.reach_from(graph, live, seeds);
                    scratch.iter_mut().for_each(|s| *s = 0);
                    world.accumulate_gains(graph, live, candidates, &mut scratch);
                    for (g, &s) in gains.iter_mut().zip(&scratch) {
                        *g += w * s as f64;
                    }
                });
                gains.iter_mut().for_each(|g| *g /= total);
                (base, gains)
            }
            Backend::MonteCarlo { samples } => {
                let tally = self.monte_carlo(graph, &kinds, &free, seeds, candidates, samples);
                let base = self.mc_estimate(graph, &kinds, seeds, &tally.counts, samples);
                let gains = tally
                    .gains
                    .iter()
                    .map(|&g| g as f64 / samples as f64)
                    .collect();
                (base, gains)
            }
        };
        base.backend = *self.estimator;

        if !self.perturbs() {
            return Ok(RoundEstimate { base, gains });
        }
        let f = base.f;
        let base_factor = self.factor();
        base.f = f * base_factor;
        let gains = gains
            .into_iter()
            .map(|g| self.factor() * (f + g) - base.f)
            .collect();
        Ok(RoundEstimate { base, gains })
    }

    pub fn marginal_gain<C: Cost>(
        &mut self,
        graph: &DirectedGraph<C>,
        seeds: &[NodeId],
        psi: &PartialRealization,
        candidate: NodeId,
    ) -> Result<f64> {
        if seeds.contains(&candidate) {
            return Err(Error::AlreadySeed(candidate));
        }
        Ok(self.round(graph, seeds, psi, &[candidate])?.gains[0])
    }

    fn mc_estimate<C: Cost>(
        &self,
        graph: &DirectedGraph<C>,
        kinds: &[EdgeKind],
        seeds: &[NodeId],
        counts: &[u64],
        samples: usize,
    ) -> ActivationEstimate {
        let possible = possible_reach(graph, kinds, seeds);
        let p = counts
            .iter()
            .enumerate()
            .map(|(v, &c)| {
                if possible[v] {
                    c as f64 / samples as f64
                } else {
                    0.0
                }
            })
            .collect();
        let zero_set = (0..graph.node_count()).filter(|&v| !possible[v]).collect();
        build_estimate(p, zero_set, *self.estimator)
    }

    /// Samples completions `0..samples` (completion `k` uses its own stream of
    /// a per-call seed) and tallies reach counts and candidate gains.
    fn monte_carlo<C: Cost>(
        &mut self,
        graph: &DirectedGraph<C>,
        kinds: &[EdgeKind],
        free: &[(EdgeId, f64)],
        seeds: &[NodeId],
        candidates: &[NodeId],
        samples: usize,
    ) -> MonteCarloTally {
        let call_seed = self.mc_rng.next_u64();
        let n = graph.node_count();
        let base_live = fixed_live(kinds);
        let chunks: Vec<(usize, usize)> = (0..samples)
            .step_by(MC_CHUNK)
            .map(|start| (start, (start + MC_CHUNK).min(samples)))
            .collect();
        let partials: Vec<MonteCarloTally> = chunks
            .par_iter()
            .map(|&(start, end)| {
                let mut world = WorldEvaluator::new(n);
                let mut live = base_live.clone();
                let mut tally = MonteCarloTally {
                    counts: vec![0; n],
                    gains: vec![0; candidates.len()],
                };
                for k in start..end {
                    let mut rng = stream_rng(call_seed, k as u64);
                    for &(e, p) in free {
                        live[e] = rng.gen::<f64>() < p;
                    }
                    world.reach_from(graph, &live, seeds);
                    for (c, &r) in tally.counts.iter_mut().zip(&world.reached) {
                        *c += r as u64;
                    }
                    if !candidates.is_empty() {
                        world.accumulate_gains(graph, &live, candidates, &mut tally.gains);
                    }
                }
                tally
            })
            .collect();
        let mut total = MonteCarloTally {
            counts: vec![0; n],
            gains: vec![0; candidates.len()],
        };
        for part in partials {
            total
                .counts
                .iter_mut()
                .zip(&part.counts)
                .for_each(|(a, b)| *a += b);
            total
                .gains
                .iter_mut()
                .zip(&part.gains)
                .for_each(|(a, b)| *a += b);
        }
        total
    }
}
