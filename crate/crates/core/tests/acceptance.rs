//! Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_rational::Rational64;
use pfim::bounds::{
    bound_enhanced, bound_enhanced_eps, bound_nonuniform, bound_nonuniform_eps, bound_uniform,
    bound_uniform_eps,
};
use pfim::diffusion::{is_settled, live_diameter, observe, FullRealization, SeedSchedule};
use pfim::estimation::{
    exact_conditional_activation, mc_conditional_activation, zero_probability_set,
};
use pfim::graph::NodeId;
use pfim::harness::{cmd_sweep_alpha, tiny_instances, ConfigMap, ExperimentConfig};
use pfim::oracles::{evaluate_policy_exact, optimal_full_feedback_adaptive, RealizationSpace};
use pfim::policies::{run_alpha_greedy_uniform, PolicyConfig, PolicyKind};
use pfim::{Estimator, Graph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20240601;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn instances() -> Vec<(Graph, usize)> {
    tiny_instances(30, SEED, 6, 10, 3)
}

/// Expected spread of `seeds` by enumerating every live-edge subset.
fn brute_spread(graph: &Graph, seeds: &[NodeId]) -> f64 {
    let m = graph.edge_count();
    let n = graph.node_count();
    let mut total = 0.0;
    for mask in 0u64..1 << m {
        let mut weight = 1.0;
        for (e, edge) in graph.edges().iter().enumerate() {
            weight *= if mask >> e & 1 == 1 {
                edge.probability
            } else {
                1.0 - edge.probability
            };
        }
        if weight == 0.0 {
            continue;
        }
        let mut active = vec![false; n];
        let mut stack: Vec<NodeId> = seeds.to_vec();
        for &s in seeds {
            active[s] = true;
        }
        while let Some(u) = stack.pop() {
            for (e, edge) in graph.edges().iter().enumerate() {
                if edge.source == u && mask >> e & 1 == 1 && !active[edge.target] {
                    active[edge.target] = true;
                    stack.push(edge.target);
                }
            }
        }
        total += weight * active.iter().filter(|&&a| a).count() as f64;
    }
    total
}

fn brute_greedy(graph: &Graph, k: usize) -> Vec<NodeId> {
    let mut chosen: Vec<NodeId> = Vec::new();
    for _ in 0..k {
        let base = brute_spread(graph, &chosen);
        let mut best: Option<(NodeId, f64)> = None;
        for v in (0..graph.node_count()).filter(|v| !chosen.contains(v)) {
            let mut with = chosen.clone();
            with.push(v);
            let gain = brute_spread(graph, &with) - base;
            match best {
                Some((_, b)) if gain <= b + 1e-12 * b.abs().max(1.0) => {}
                _ => best = Some((v, gain)),
            }
        }
        chosen.push(best.expect("candidate").0);
    }
    chosen
}

fn guarantee() -> Outcome {
    let target = 0.6321206 - 1e-9;
    let mut worst = f64::INFINITY;
    let all = instances();
    for (g, k) in &all {
        let config = PolicyConfig::new(
            PolicyKind::Uniform,
            1.0,
            Rational64::from_integer(*k as i64),
            Estimator::exact(),
        );
        let value = evaluate_policy_exact(g, &config, SEED)
            .expect("exact evaluation")
            .value;
        let opt = optimal_full_feedback_adaptive(g, *k).expect("adaptive optimum");
        worst = worst.min(value / opt);
    }
    outcome(
        worst >= target && all.len() >= 20,
        format!(
            "min ratio {worst:.9} >= 0.6321206 - 1e-9 over {} instances",
            all.len()
        ),
    )
}

fn alpha_zero() -> Outcome {
    let mut mismatches = 0;
    let mut runs = 0;
    for (i, (g, k)) in instances().iter().enumerate() {
        let expected = brute_greedy(g, *k);
        for w in 0..5 {
            let world = FullRealization::sample(g, SEED + 100 * i as u64 + w);
            let run =
                run_alpha_greedy_uniform(g, 0.0, *k, &world, &Estimator::exact(), w).expect("run");
            runs += 1;
            let slot_zero = run.schedule.entries().iter().all(|&(_, t)| t == 0);
            if run.seeds() != expected || !slot_zero {
                mismatches += 1;
            }
        }
    }
    outcome(
        mismatches == 0,
        format!("{mismatches} mismatches over {runs} runs"),
    )
}

fn alpha_one() -> Outcome {
    let mut violations = 0;
    let mut checked = 0;
    for (g, k) in instances() {
        let space = RealizationSpace::new(&g, 12).expect("enumerable");
        for index in 0..space.len() {
            let (world, _) = space.get(index);
            let run =
                run_alpha_greedy_uniform(&g, 1.0, k, &world, &Estimator::exact(), 0).expect("run");
            let entries = run.schedule.entries();
            for i in 1..entries.len() {
                let before = SeedSchedule::from_entries(entries[..i].iter().copied()).unwrap();
                let psi = observe(&g, &world, &before, entries[i].1);
                let est = exact_conditional_activation(&g, &before.nodes(), &psi).unwrap();
                checked += 1;
                if est.p.iter().any(|&p| p != 0.0 && p != 1.0) {
                    violations += 1;
                }
            }
        }
    }
    outcome(
        violations == 0,
        format!("{violations} violations over {checked} non-first selections"),
    )
}

fn estimator_agreement() -> Outcome {
    let samples = 10_000;
    let graphs = tiny_instances(50, SEED + 1, 8, 14, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut pairs, mut within, mut zero_ok) = (0usize, 0usize, 0usize);
    for (g, _) in &graphs {
        let n = g.node_count();
        let seeds = vec![rng.gen_range(0..n)];
        let world = FullRealization::sample(g, rng.gen());
        let schedule = SeedSchedule::at_slot_zero(&seeds).unwrap();
        let psi = observe(g, &world, &schedule, rng.gen_range(0..3));
        let exact = exact_conditional_activation(g, &seeds, &psi).expect("exact backend");
        let mc = mc_conditional_activation(g, &seeds, &psi, samples, rng.gen()).unwrap();
        let zero = zero_probability_set(g, &seeds, &psi);
        for v in 0..n {
            let p = exact.p[v];
            let sigma = (p * (1.0 - p) / samples as f64).sqrt();
            pairs += 1;
            if (mc.p[v] - p).abs() <= 3.0 * sigma + 1e-12 {
                within += 1;
            }
            if zero.contains(&v) == (p == 0.0) {
                zero_ok += 1;
            }
        }
    }
    let rate = within as f64 / pairs as f64;
    outcome(
        rate >= 0.99 && zero_ok == pairs && graphs.len() == 50,
        format!(
            "{within}/{pairs} pairs within 3 sigma ({:.2}% >= 99%), zero set {zero_ok}/{pairs}",
            100.0 * rate
        ),
    )
}

fn observation() -> Outcome {
    let graphs = tiny_instances(40, SEED + 2, 8, 16, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let mut violations = 0;
    let triples = 1000;
    for t in 0..triples {
        let (g, _) = &graphs[t % graphs.len()];
        let n = g.node_count();
        let world = FullRealization::sample(g, rng.gen());
        let mut schedule = SeedSchedule::new();
        let mut nodes: Vec<NodeId> = (0..n).collect();
        let mut slot = 0;
        for _ in 0..rng.gen_range(1..=n.min(3)) {
            let node = nodes.swap_remove(rng.gen_range(0..nodes.len()));
            slot += rng.gen_range(0..3);
            schedule.push(node, slot).unwrap();
        }
        let now_slot = rng.gen_range(0..=slot + 4);
        let now = observe(g, &world, &schedule, now_slot);
        let next = observe(g, &world, &schedule, now_slot + 1);
        let settle = slot + live_diameter(g, &world) + 1;
        if !(now.is_contained_in(&next)
            && now.is_consistent_with(&world)
            && is_settled(g, &world, &schedule, settle))
        {
            violations += 1;
        }
    }
    outcome(
        violations == 0,
        format!("{violations} violations over {triples} triples"),
    )
}

fn bounds() -> Outcome {
    let e1 = 1.0 - (-1.0f64).exp();
    let mut worst: f64 = 0.0;
    worst = worst.max((bound_uniform(1.0) - e1).abs());
    worst = worst.max((bound_enhanced(1.0) - e1 / 2.0).abs());
    for alpha in [0.0f64, 0.1, 0.5, 0.8, 1.0] {
        for (n, b, cmax, cmin, f) in [
            (10.0f64, 5.0f64, 2.0f64, 1.0f64, 4.0f64),
            (200.0, 10.0, 3.0, 0.5, 37.5),
        ] {
            worst =
                worst.max((bound_uniform_eps(alpha, 0.0, n, f) - bound_uniform(alpha) * f).abs());
            worst = worst.max(
                (bound_nonuniform_eps(alpha, 0.0, n, b, cmax, cmin, f)
                    - bound_nonuniform(alpha, b, cmax) * f)
                    .abs(),
            );
            worst = worst.max(
                (bound_enhanced_eps(alpha, 0.0, n, b, cmin, f) - bound_enhanced(alpha) * f).abs(),
            );
        }
    }
    outcome(
        worst <= 1e-12,
        format!("max deviation {worst:.3e} <= 1e-12"),
    )
}

fn sweep_config(pairs: &[(&str, &str)]) -> ExperimentConfig {
    let mut map = ConfigMap::default();
    for (k, v) in pairs {
        map.set(k, v).expect("config key");
    }
    ExperimentConfig::from_map(&map).expect("config")
}

fn alpha_trend() -> Outcome {
    let config = sweep_config(&[
        ("graph", "gen:erdos-renyi:200:800"),
        ("i", "4"),
        ("prob-scale", "10"),
        ("alpha", "0,0.8"),
        ("budget", "10"),
        ("policy", "enhanced"),
        ("estimator", "mc"),
        ("samples", "200"),
        ("realizations", "500"),
        ("seed", "1"),
    ]);
    let csv = cmd_sweep_alpha(&config).expect("sweep");
    let spread: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|line| line.split(',').nth(6).unwrap().parse().unwrap())
        .collect();
    let (s0, s8) = (spread[0], spread[1]);
    let lift = s8 / s0 - 1.0;
    outcome(
        lift >= 0.05,
        format!(
            "spread alpha=0.8 {s8:.3} vs alpha=0 {s0:.3}, lift {:.2}% >= 5%",
            100.0 * lift
        ),
    )
}

fn budget_and_determinism() -> Outcome {
    let runs = 10_000;
    let graphs = tiny_instances(200, SEED + 3, 6, 10, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let mut overruns = 0;
    for r in 0..runs {
        let (g, _) = &graphs[r % graphs.len()];
        let costs: Vec<Rational64> = (0..g.node_count())
            .map(|_| Rational64::new(rng.gen_range(2..=12), 4))
            .collect();
        let g = g.with_costs(costs).unwrap();
        let kind = if r % 2 == 0 {
            PolicyKind::NonUniform
        } else {
            PolicyKind::Enhanced
        };
        // The enhanced policy requires the best single node to be affordable.
        let floor = if kind == PolicyKind::Enhanced {
            g.max_cost()
        } else {
            g.min_cost()
        };
        let budget = Rational64::new(rng.gen_range(2..=40), 4).max(floor);
        let alpha = [0.0, 0.25, 0.5, 0.75, 1.0][rng.gen_range(0..5)];
        let world = FullRealization::sample(&g, rng.gen());
        let run = PolicyConfig::new(kind, alpha, budget, Estimator::exact())
            .run(&g, &world, r as u64)
            .expect("run");
        let spent: Rational64 = run.seeds().iter().map(|&v| g.cost(v)).sum();
        if run.total_cost > budget || spent != run.total_cost {
            overruns += 1;
        }
    }
    let dir = std::env::temp_dir().join(format!("pfim-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let csv = |name: &str| {
        let path = dir.join(name);
        let config = sweep_config(&[
            ("graph", "gen:scale-free-ish:40:120"),
            ("i", "2"),
            ("prob-scale", "10"),
            ("costs", "random:1:3"),
            ("policy", "nonuniform"),
            ("alpha", "0,0.5,1"),
            ("budget", "3,5"),
            ("estimator", "mc"),
            ("samples", "100"),
            ("realizations", "30"),
            ("seed", "11"),
            ("out", path.to_str().unwrap()),
        ]);
        cmd_sweep_alpha(&config).expect("sweep");
        std::fs::read(path).unwrap()
    };
    let identical = csv("a.csv") == csv("b.csv");
    let _ = std::fs::remove_dir_all(&dir);
    outcome(
        overruns == 0 && identical,
        format!("{overruns} budget overruns over {runs} runs, CSV byte-identical: {identical}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("guarantee-alpha1", Duration::from_secs(60), guarantee),
        (
            "alpha0-nonadaptive-greedy",
            Duration::from_secs(10),
            alpha_zero,
        ),
        ("alpha1-full-feedback", Duration::from_secs(60), alpha_one),
        (
            "estimator-agreement",
            Duration::from_secs(120),
            estimator_agreement,
        ),
        (
            "observation-invariants",
            Duration::from_secs(10),
            observation,
        ),
        ("bound-calculators", Duration::from_secs(10), bounds),
        ("alpha-spread-trend", Duration::from_secs(300), alpha_trend),
        (
            "budget-safety-determinism",
            Duration::from_secs(300),
            budget_and_determinism,
        ),
    ];
    let mut failed = 0;
    for (name, limit, check) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let pass = result.pass && elapsed <= limit;
        if !pass {
            failed += 1;
        }
        println!(
            "{} {name}: {} ({:.1}s, limit {}s)",
            if pass { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
