use num_rational::Rational64;
use pfim::bounds::{bound_nonuniform, bound_uniform};
use pfim::diffusion::{cascade_size, FullRealization};
use pfim::graph::{apply_costs, load_graph_with_ids, serialize_graph};
use pfim::oracles::{
    evaluate_policy_exact, evaluate_policy_sampled, expected_spread, optimal_full_feedback_adaptive,
    optimal_nonadaptive,
};
use pfim::policies::{PolicyConfig, PolicyKind};
use pfim::Estimator;

const SPARSE_IDS: &str = "# social ties\n10\t20\t0.5\n20\t30\t1\n40\t30\t0.25\n30\t50\t0.5\n";

#[test]
fn external_ids_flow_through_costs_and_transcripts() {
    let loaded = load_graph_with_ids(SPARSE_IDS, Rational64::from_integer(1)).unwrap();
    assert_eq!(loaded.graph.node_count(), 5);
    let graph = apply_costs(&loaded.graph, "10\t2\n40\t1/2\n", Some(&loaded.id_map)).unwrap();
    assert_eq!(graph.cost(0), Rational64::from_integer(2));
    assert_eq!(graph.cost(3), Rational64::new(1, 2));

    let world = FullRealization::sample(&graph, 3);
    let config = PolicyConfig::new(PolicyKind::NonUniform, 0.5, Rational64::from_integer(3), Estimator::exact());
    let run = config.run(&graph, &world, 3).unwrap();
    assert!(run.total_cost <= Rational64::from_integer(3));
    let transcript = run.transcript_with(|v| loaded.id_map.external(v).to_string());
    let first = transcript.lines().next().unwrap();
    let node: u64 = first.split("select:").nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
    assert!([10, 20, 30, 40, 50].contains(&node), "{transcript}");
    assert_eq!(run.realized_cascade, cascade_size(&graph, &world, &run.seeds()));
}

#[test]
fn serialized_graph_reloads_identically() {
    let loaded = load_graph_with_ids(SPARSE_IDS, Rational64::from_integer(1)).unwrap();
    let text = serialize_graph(&loaded.graph);
    let again = load_graph_with_ids(&text, Rational64::from_integer(1)).unwrap();
    assert_eq!(again.graph, loaded.graph);
    assert!(again.id_map.is_identity());
}

#[test]
fn sampled_evaluation_tracks_exact_evaluation() {
    let graph = load_graph_with_ids(SPARSE_IDS, Rational64::from_integer(1)).unwrap().graph;
    for kind in [PolicyKind::Uniform, PolicyKind::NonUniform, PolicyKind::Enhanced] {
        for alpha in [0.0, 0.5, 1.0] {
            let config = PolicyConfig::new(kind, alpha, Rational64::from_integer(2), Estimator::exact());
            let exact = evaluate_policy_exact(&graph, &config, 0).unwrap();
            let sampled = evaluate_policy_sampled(&graph, &config, 4000, 17).unwrap();
            let se = sampled.std_error();
            assert!(
                (sampled.value - exact.value).abs() <= 4.0 * se + 1e-9,
                "{kind:?} alpha={alpha}: {} vs {} (se {se})",
                sampled.value,
                exact.value
            );
        }
    }
}

#[test]
fn policies_meet_their_guarantees_on_a_small_graph() {
    let graph = load_graph_with_ids(SPARSE_IDS, Rational64::from_integer(1)).unwrap().graph;
    for budget in 1..=3usize {
        let adaptive = optimal_full_feedback_adaptive(&graph, budget).unwrap();
        let (_, nonadaptive) = optimal_nonadaptive(&graph, Rational64::from_integer(budget as i64)).unwrap();
        assert!(adaptive + 1e-12 >= nonadaptive);
        for alpha in [0.25, 0.5, 1.0] {
            let config = PolicyConfig::new(
                PolicyKind::Uniform,
                alpha,
                Rational64::from_integer(budget as i64),
                Estimator::exact(),
            );
            let value = evaluate_policy_exact(&graph, &config, 0).unwrap().value;
            assert!(value + 1e-9 >= bound_uniform(alpha) * adaptive, "B={budget} alpha={alpha}");
        }
    }
}

#[test]
fn nonuniform_policy_meets_its_guarantee_with_costs() {
    let loaded = load_graph_with_ids(SPARSE_IDS, Rational64::from_integer(1)).unwrap();
    let graph = apply_costs(&loaded.graph, "10\t2\n20\t1\n30\t1\n40\t1\n50\t1\n", Some(&loaded.id_map)).unwrap();
    let budget = Rational64::from_integer(3);
    let (best, best_value) = optimal_nonadaptive(&graph, budget).unwrap();
    assert!((expected_spread(&graph, &best).unwrap() - best_value).abs() < 1e-12);
    let config = PolicyConfig::new(PolicyKind::NonUniform, 1.0, budget, Estimator::exact());
    let value = evaluate_policy_exact(&graph, &config, 0).unwrap().value;
    // The adaptive optimum dominates the committed optimum, so this is a
    // weaker but checkable form of the guarantee.
    assert!(value + 1e-9 >= bound_nonuniform(1.0, 3.0, 2.0) * best_value);
}
