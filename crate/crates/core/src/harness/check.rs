//! `oracle-check`: runs the ground-truth assertions on tiny instances and
//! reports one line per check.

use std::fmt;

use num_rational::Rational64;
use rand::Rng;

use crate::bounds::{bound_uniform, bound_uniform_eps};
use crate::diffusion::{is_settled, live_diameter, observe, FullRealization, SeedSchedule};
use crate::error::{Error, Result};
use crate::estimation::{
    epsilon_wrap, exact_conditional_activation, mc_conditional_activation, zero_probability_set,
    ErrorMode, Estimator,
};
use crate::graph::DirectedGraph;
use crate::oracles::{
    evaluate_policy_exact, greedy_nonadaptive, optimal_full_feedback_adaptive, RealizationSpace,
};
use crate::policies::{run_alpha_greedy_uniform, PolicyConfig, PolicyKind};
use crate::rng::{stream_rng, STREAM_INSTANCES};
use crate::Graph;

use super::config::ExperimentConfig;
use super::format_significant;
use super::generate::tiny_instances;

/// Realizations are enumerated for the full-feedback check only up to this
/// many uncertain edges.
const FULL_FEEDBACK_EDGE_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Ok,
    Degraded,
    Violation,
    Skipped,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Ok => "ok",
            CheckStatus::Degraded => "degraded",
            CheckStatus::Violation => "violation",
            CheckStatus::Skipped => "skipped",
        })
    }
}

#[derive(Debug, Clone)]
pub struct CheckOptions {
    pub instances: usize,
    pub rng_seed: u64,
    pub mc_samples: usize,
    pub triples: usize,
    pub epsilon: f64,
    pub eps_mode: ErrorMode,
    /// Extra named graphs with their budgets (e.g. from `--graph`).
    pub extra: Vec<(String, Graph, usize)>,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            instances: super::DEFAULT_INSTANCES,
            rng_seed: 0,
            mc_samples: 10_000,
            triples: 1000,
            epsilon: 0.0,
            eps_mode: ErrorMode::Random,
            extra: Vec::new(),
        }
    }
}

impl CheckOptions {
    /// Reads `instances`, `seed`, `samples`, `epsilon`, `eps-mode` and an
    /// optional `graph` (checked with the first budget, capped at `n`).
    pub fn from_config(config: &ExperimentConfig) -> Result<Self> {
        let mut options = Self {
            instances: config.instances,
            rng_seed: config.rng_seed,
            mc_samples: config.samples.unwrap_or(10_000),
            epsilon: config.epsilon,
            eps_mode: config.eps_mode,
            ..Self::default()
        };
        if config.graph.is_some() {
            let graph = config.load_graph()?.graph;
            let budget = config.budgets[0].to_integer().max(1) as usize;
            let budget = budget.min(graph.node_count());
            options.extra.push(("input".into(), graph, budget));
        }
        Ok(options)
    }
}

#[derive(Debug, Clone, Default)]
pub struct CheckReport {
    pub lines: Vec<String>,
    pub violations: usize,
    pub degraded: usize,
    pub skipped: usize,
}

impl CheckReport {
    fn push(
        &mut self,
        status: CheckStatus,
        check: &str,
        instance: &str,
        detail: impl fmt::Display,
    ) {
        match status {
            CheckStatus::Violation => self.violations += 1,
            CheckStatus::Degraded => self.degraded += 1,
            CheckStatus::Skipped => self.skipped += 1,
            CheckStatus::Ok => {}
        }
        self.lines
            .push(format!("{status} {check} {instance} {detail}"));
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    pub fn render(&self) -> String {
        let mut out = self.lines.join("\n");
        out.push_str(&format!(
            "\nsummary: {} checks, {} violations, {} degraded, {} skipped\n",
            self.lines.len(),
            self.violations,
            self.degraded,
            self.skipped
        ));
        out
    }
}

fn g(edges: &[(usize, usize, f64)], n: usize) -> Graph {
    DirectedGraph::with_unit_costs(n, edges.iter().copied()).expect("builtin graph")
}

fn builtin_instances() -> Vec<(String, Graph, usize)> {
    vec![
        ("chain3".into(), g(&[(0, 1, 0.5), (1, 2, 0.5)], 3), 1),
        (
            "diamond".into(),
            g(&[(0, 1, 0.5), (0, 2, 0.5), (1, 3, 0.5), (2, 3, 0.5)], 4),
            1,
        ),
        (
            "star".into(),
            g(&[(1, 0, 0.5), (1, 2, 0.5), (1, 3, 0.5)], 4),
            2,
        ),
        ("split".into(), g(&[(0, 1, 0.5)], 3), 2),
        (
            "mixed5".into(),
            g(
                &[
                    (0, 1, 1.0),
                    (1, 2, 0.5),
                    (3, 2, 0.7),
                    (2, 4, 0.3),
                    (4, 0, 0.4),
                ],
                5,
            ),
            2,
        ),
    ]
}

fn guard_reason(e: &Error) -> Option<String> {
    match e {
        Error::TooLarge(m) | Error::Unsupported(m) => Some(m.clone()),
        _ => None,
    }
}

fn check_guarantee(
    report: &mut CheckReport,
    name: &str,
    graph: &Graph,
    k: usize,
    opts: &CheckOptions,
) -> Result<()> {
    let opt = match optimal_full_feedback_adaptive(graph, k) {
        Ok(v) => v,
        Err(e) => match guard_reason(&e) {
            Some(reason) => {
                report.push(
                    CheckStatus::Skipped,
                    "guarantee",
                    name,
                    format!("skipped: {reason}"),
                );
                return Ok(());
            }
            None => return Err(e),
        },
    };
    let estimator = if opts.epsilon > 0.0 {
        epsilon_wrap(
            Estimator::exact(),
            opts.epsilon,
            opts.eps_mode,
            opts.rng_seed,
        )?
    } else {
        Estimator::exact()
    };
    let config = PolicyConfig::new(
        PolicyKind::Uniform,
        1.0,
        Rational64::from_integer(k as i64),
        estimator,
    );
    let value = evaluate_policy_exact(graph, &config, opts.rng_seed)?.value;
    let ratio = value / opt;
    let bound = bound_uniform(1.0);
    let mut detail = format!(
        "B={k} value={} optimum={} ratio={} bound={}",
        format_significant(value, 9),
        format_significant(opt, 9),
        format_significant(ratio, 9),
        format_significant(bound, 9)
    );
    let status = if opts.epsilon > 0.0 {
        let eps_bound = bound_uniform_eps(1.0, opts.epsilon, graph.node_count() as f64, opt);
        detail.push_str(&format!(
            " eps={} mode={} eps-bound={}",
            opts.epsilon,
            opts.eps_mode.name(),
            format_significant(eps_bound, 9)
        ));
        if value < eps_bound - 1e-9 {
            CheckStatus::Violation
        } else if ratio < bound - 1e-9 {
            CheckStatus::Degraded
        } else {
            CheckStatus::Ok
        }
    } else if ratio >= bound - 1e-9 {
        CheckStatus::Ok
    } else {
        CheckStatus::Violation
    };
    report.push(status, "guarantee", name, detail);
    Ok(())
}

fn check_alpha_zero(
    report: &mut CheckReport,
    name: &str,
    graph: &Graph,
    k: usize,
    opts: &CheckOptions,
) -> Result<()> {
    let greedy = match greedy_nonadaptive(graph, k) {
        Ok(s) => s,
        Err(e) => match guard_reason(&e) {
            Some(reason) => {
                report.push(
                    CheckStatus::Skipped,
                    "alpha0-nonadaptive",
                    name,
                    format!("skipped: {reason}"),
                );
                return Ok(());
            }
            None => return Err(e),
        },
    };
    let world = FullRealization::sample(graph, opts.rng_seed);
    let run =
        match run_alpha_greedy_uniform(graph, 0.0, k, &world, &Estimator::exact(), opts.rng_seed) {
            Ok(run) => run,
            Err(e) => match guard_reason(&e) {
                Some(reason) => {
                    report.push(
                        CheckStatus::Skipped,
                        "alpha0-nonadaptive",
                        name,
                        format!("skipped: {reason}"),
                    );
                    return Ok(());
                }
                None => return Err(e),
            },
        };
    let all_zero = run.schedule.entries().iter().all(|&(_, t)| t == 0);
    let status = if run.seeds() == greedy && all_zero {
        CheckStatus::Ok
    } else {
        CheckStatus::Violation
    };
    report.push(
        status,
        "alpha0-nonadaptive",
        name,
        format!(
            "policy={:?} greedy={greedy:?} slot0={all_zero}",
            run.seeds()
        ),
    );
    Ok(())
}

/// Counts selections after the first at α = 1 where some exact `p_v` is
/// strictly between 0 and 1. Returns `None` when the graph is too large.
pub(crate) fn full_feedback_violations(graph: &Graph, k: usize) -> Result<Option<(u64, usize)>> {
    let space = match RealizationSpace::new(graph, FULL_FEEDBACK_EDGE_LIMIT) {
        Ok(s) => s,
        Err(Error::TooLarge(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let mut violations = 0;
    for index in 0..space.len() {
        let (world, _) = space.get(index);
        let run = run_alpha_greedy_uniform(graph, 1.0, k, &world, &Estimator::exact(), 0)?;
        let entries = run.schedule.entries();
        for i in 1..entries.len() {
            let before = SeedSchedule::from_entries(entries[..i].iter().copied())?;
            let psi = observe(graph, &world, &before, entries[i].1);
            let est = exact_conditional_activation(graph, &before.nodes(), &psi)?;
            if est.p.iter().any(|&p| p != 0.0 && p != 1.0) {
                violations += 1;
            }
        }
    }
    Ok(Some((space.len(), violations)))
}

fn check_full_feedback(
    report: &mut CheckReport,
    name: &str,
    graph: &Graph,
    k: usize,
) -> Result<()> {
    if !graph.has_unit_costs() {
        report.push(
            CheckStatus::Skipped,
            "alpha1-full-feedback",
            name,
            "skipped: non-unit costs",
        );
        return Ok(());
    }
    match full_feedback_violations(graph, k)? {
        None => report.push(
            CheckStatus::Skipped,
            "alpha1-full-feedback",
            name,
            format!("skipped: more than {FULL_FEEDBACK_EDGE_LIMIT} uncertain edges"),
        ),
        Some((worlds, 0)) => report.push(
            CheckStatus::Ok,
            "alpha1-full-feedback",
            name,
            format!("worlds={worlds}"),
        ),
        Some((worlds, v)) => report.push(
            CheckStatus::Violation,
            "alpha1-full-feedback",
            name,
            format!("worlds={worlds} violations={v}"),
        ),
    }
    Ok(())
}

#[derive(Default)]
struct McTally {
    pairs: usize,
    within: usize,
    zero_set_mismatches: usize,
}

fn check_mc(
    tally: &mut McTally,
    report: &mut CheckReport,
    name: &str,
    graph: &Graph,
    opts: &CheckOptions,
    salt: u64,
) -> Result<()> {
    let mut rng = stream_rng(opts.rng_seed ^ salt, STREAM_INSTANCES);
    let n = graph.node_count();
    let seeds = vec![rng.gen_range(0..n)];
    let world = FullRealization::sample(graph, rng.gen());
    let schedule = SeedSchedule::at_slot_zero(&seeds)?;
    let psi = observe(graph, &world, &schedule, rng.gen_range(0..3));
    let exact = match exact_conditional_activation(graph, &seeds, &psi) {
        Ok(e) => e,
        Err(Error::TooLarge(reason)) => {
            report.push(
                CheckStatus::Skipped,
                "mc-agreement",
                name,
                format!("skipped: {reason}"),
            );
            return Ok(());
        }
        Err(e) => return Err(e),
    };
    let mc = mc_conditional_activation(graph, &seeds, &psi, opts.mc_samples, rng.gen())?;
    let k = opts.mc_samples as f64;
    for v in 0..n {
        let p = exact.p[v];
        let sigma = (p * (1.0 - p) / k).sqrt();
        tally.pairs += 1;
        if (mc.p[v] - p).abs() <= 3.0 * sigma + 1e-12 {
            tally.within += 1;
        }
    }
    let zero: Vec<usize> = (0..n).filter(|&v| exact.p[v] == 0.0).collect();
    if zero_probability_set(graph, &seeds, &psi) != zero {
        tally.zero_set_mismatches += 1;
    }
    Ok(())
}

#[derive(Default)]
struct ObservationTally {
    triples: usize,
    violations: usize,
}

fn check_observation(
    tally: &mut ObservationTally,
    graph: &Graph,
    count: usize,
    rng_seed: u64,
) -> Result<()> {
    let mut rng = stream_rng(rng_seed, STREAM_INSTANCES);
    let n = graph.node_count();
    for _ in 0..count {
        let world = FullRealization::sample(graph, rng.gen());
        let mut schedule = SeedSchedule::new();
        let mut slot = 0;
        let mut nodes: Vec<usize> = (0..n).collect();
        for _ in 0..rng.gen_range(1..=n.min(3)) {
            let node = nodes.swap_remove(rng.gen_range(0..nodes.len()));
            slot += rng.gen_range(0..3);
            schedule.push(node, slot)?;
        }
        let t = rng.gen_range(0..=slot + 4);
        let now = observe(graph, &world, &schedule, t);
        let next = observe(graph, &world, &schedule, t + 1);
        let settle_at = slot + live_diameter(graph, &world) + 1;
        let ok = now.is_contained_in(&next)
            && now.is_consistent_with(&world)
            && is_settled(graph, &world, &schedule, settle_at);
        tally.triples += 1;
        if !ok {
            tally.violations += 1;
        }
    }
    Ok(())
}

/// Runs every check on the builtin graphs, `instances` random tiny instances
/// and any extra graphs.
pub fn cmd_oracle_check(opts: &CheckOptions) -> Result<CheckReport> {
    let mut report = CheckReport::default();
    let mut instances = builtin_instances();
    for (i, (graph, k)) in tiny_instances(opts.instances, opts.rng_seed, 6, 10, 3)
        .into_iter()
        .enumerate()
    {
        instances.push((format!("tiny{i:02}"), graph, k));
    }
    instances.extend(opts.extra.iter().cloned());

    let mut mc = McTally::default();
    let mut obs = ObservationTally::default();
    let per_instance = opts.triples.div_ceil(instances.len().max(1));
    for (idx, (name, graph, k)) in instances.iter().enumerate() {
        let name = format!(
            "{name}(n={},|E|={})",
            graph.node_count(),
            graph.edge_count()
        );
        check_guarantee(&mut report, &name, graph, *k, opts)?;
        check_alpha_zero(&mut report, &name, graph, *k, opts)?;
        check_full_feedback(&mut report, &name, graph, *k)?;
        check_mc(&mut mc, &mut report, &name, graph, opts, idx as u64)?;
        check_observation(
            &mut obs,
            graph,
            per_instance,
            opts.rng_seed.wrapping_add(idx as u64),
        )?;
    }
    if mc.pairs > 0 {
        let rate = mc.within as f64 / mc.pairs as f64;
        let status = if rate >= 0.99 && mc.zero_set_mismatches == 0 {
            CheckStatus::Ok
        } else {
            CheckStatus::Violation
        };
        report.push(
            status,
            "mc-agreement",
            "all",
            format!(
                "samples={} pairs={} within-3sigma={} zero-set-mismatches={}",
                opts.mc_samples,
                mc.pairs,
                format_significant(rate, 6),
                mc.zero_set_mismatches
            ),
        );
    }
    let status = if obs.violations == 0 {
        CheckStatus::Ok
    } else {
        CheckStatus::Violation
    };
    report.push(
        status,
        "observation",
        "all",
        format!("triples={} violations={}", obs.triples, obs.violations),
    );
    Ok(report)
}
