//! Experiment driver behind the `pfim` command-line tool.

mod check;
mod config;
mod generate;

use std::fmt::Write as _;
use std::path::PathBuf;

use num_rational::Rational64;

pub use check::{cmd_oracle_check, CheckOptions, CheckReport, CheckStatus};
pub use config::{
    ConfigMap, CostMode, EvaluationMode, ExperimentConfig, GraphSource, CONFIG_KEYS,
    DEFAULT_INSTANCES, DEFAULT_REALIZATIONS, DEFAULT_SAMPLES,
};
pub use generate::{generate_graph, tiny_instance, tiny_instances, GraphModel};

use crate::bounds::{
    bound_enhanced, bound_enhanced_eps, bound_nonuniform, bound_nonuniform_eps, bound_uniform,
    bound_uniform_eps, is_vacuous,
};
use crate::diffusion::FullRealization;
use crate::error::{Error, Result};
use crate::graph::{assign_trivalency_scaled, serialize_graph};
use crate::oracles::{
    evaluate_policy_exact, evaluate_policy_sampled, Evaluation, EvaluationMethod,
};
use crate::policies::{PolicyConfig, PolicyKind};
use crate::scalar::Cost;
use crate::Graph;

pub const CSV_HEADER: &str =
    "alpha,budget,i,policy,estimator,realizations,mean_spread,stderr,mean_slots,mean_seeds,rng_seed";

/// Fixed-point rendering with `digits` significant digits.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    // The exponent after rounding, so carries like 9.99 -> 10.0 are accounted for.
    let sci = format!("{x:.prec$e}", prec = digits.max(1) - 1);
    let exponent: i64 = sci
        .rsplit('e')
        .next()
        .and_then(|e| e.parse().ok())
        .unwrap_or(0);
    let decimals = (digits as i64 - 1 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}

fn policy_config(
    config: &ExperimentConfig,
    alpha: f64,
    budget: Rational64,
) -> Result<PolicyConfig<Rational64>> {
    Ok(PolicyConfig::new(
        config.policy,
        alpha,
        budget,
        config.estimator()?,
    ))
}

fn check_uniform_budget(
    config: &ExperimentConfig,
    graph: &Graph,
    budget: Rational64,
) -> Result<()> {
    if config.policy == PolicyKind::Uniform
        && budget > Rational64::from_integer(graph.node_count() as i64)
    {
        return Err(Error::Budget(format!(
            "budget exceeds node count under uniform cost ({budget} > {})",
            graph.node_count()
        )));
    }
    Ok(())
}

fn evaluate(
    config: &ExperimentConfig,
    graph: &Graph,
    policy: &PolicyConfig<Rational64>,
) -> Result<Evaluation> {
    match config.evaluation {
        EvaluationMode::Exact => evaluate_policy_exact(graph, policy, config.rng_seed),
        EvaluationMode::Sampled => {
            evaluate_policy_sampled(graph, policy, config.realizations, config.rng_seed)
        }
    }
}

fn csv_row(
    config: &ExperimentConfig,
    policy: &PolicyConfig<Rational64>,
    eval: &Evaluation,
) -> String {
    let realizations = match eval.method {
        EvaluationMethod::Enumerated { realizations } => realizations.to_string(),
        EvaluationMethod::Sampled { count, .. } => count.to_string(),
    };
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        policy.alpha,
        policy.budget.render(),
        config
            .trivalency
            .map_or_else(String::new, |i| i.to_string()),
        policy.kind.name(),
        policy.estimator.describe(),
        realizations,
        format_significant(eval.value, 9),
        format_significant(eval.std_error(), 9),
        format_significant(eval.mean_slots, 9),
        format_significant(eval.mean_seeds, 9),
        config.rng_seed,
    )
}

fn emit(config: &ExperimentConfig, csv: &str) -> Result<()> {
    if let Some(out) = &config.out {
        config::write(out, csv)?;
    }
    Ok(())
}

/// Evaluates the configured policy for every `(α, B)` pair (α-major) and
/// returns the CSV text, also writing it to `out` when set.
pub fn cmd_sweep_alpha(config: &ExperimentConfig) -> Result<String> {
    let graph = config.load_graph()?.graph;
    let mut csv = format!("{CSV_HEADER}\n");
    for &alpha in &config.alphas {
        for &budget in &config.budgets {
            check_uniform_budget(config, &graph, budget)?;
            let policy = policy_config(config, alpha, budget)?;
            let eval = evaluate(config, &graph, &policy)?;
            csv.push_str(&csv_row(config, &policy, &eval));
            csv.push('\n');
        }
    }
    emit(config, &csv)?;
    Ok(csv)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateReport {
    pub csv: String,
    pub evaluation: Evaluation,
    /// Where the transcript of the first sampled world was written.
    pub transcript: Option<PathBuf>,
}

impl EvaluateReport {
    pub fn summary(&self) -> String {
        let path = self
            .transcript
            .as_ref()
            .map_or_else(|| "none".to_string(), |p| p.display().to_string());
        format!(
            "mean_spread={} ± {}\ntranscript: {path}",
            format_significant(self.evaluation.value, 9),
            format_significant(self.evaluation.std_error(), 9)
        )
    }
}

/// Single `(α, B)` evaluation. The transcript records the policy on the world
/// sampled from `seed`, rendered with the node ids of the input file.
pub fn cmd_evaluate(config: &ExperimentConfig) -> Result<EvaluateReport> {
    let (alpha, budget) = match (config.alphas.as_slice(), config.budgets.as_slice()) {
        ([a], [b]) => (*a, *b),
        ([_], _) => return Err(Error::config("budget", "evaluate takes a single value")),
        _ => return Err(Error::config("alpha", "evaluate takes a single value")),
    };
    let loaded = config.load_graph()?;
    let graph = &loaded.graph;
    check_uniform_budget(config, graph, budget)?;
    let policy = policy_config(config, alpha, budget)?;
    let evaluation = evaluate(config, graph, &policy)?;
    let csv = format!("{CSV_HEADER}\n{}\n", csv_row(config, &policy, &evaluation));
    emit(config, &csv)?;

    let transcript = config.transcript.clone().or_else(|| {
        config
            .out
            .as_ref()
            .map(|o| PathBuf::from(format!("{}.transcript", o.display())))
    });
    if let Some(path) = &transcript {
        let world = FullRealization::sample(graph, config.rng_seed);
        let run = policy.run(graph, &world, config.rng_seed)?;
        let mut text = format!(
            "# world seed={} policy={} alpha={alpha} budget={} cascade={} cost={}\n",
            config.rng_seed,
            policy.kind.name(),
            budget.render(),
            run.realized_cascade,
            run.total_cost.render()
        );
        text.push_str(&run.transcript_with(|v| loaded.id_map.external(v).to_string()));
        config::write(path, &text)?;
    }
    Ok(EvaluateReport {
        csv,
        evaluation,
        transcript,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundVariant {
    Uniform,
    NonUniform,
    Enhanced,
    UniformEps,
    NonUniformEps,
    EnhancedEps,
    All,
}

impl BoundVariant {
    pub const EACH: [BoundVariant; 6] = [
        BoundVariant::Uniform,
        BoundVariant::NonUniform,
        BoundVariant::Enhanced,
        BoundVariant::UniformEps,
        BoundVariant::NonUniformEps,
        BoundVariant::EnhancedEps,
    ];

    pub fn parse(text: &str) -> Option<Self> {
        Some(match text {
            "uniform" => BoundVariant::Uniform,
            "nonuniform" | "non-uniform" => BoundVariant::NonUniform,
            "enhanced" => BoundVariant::Enhanced,
            "uniform-eps" => BoundVariant::UniformEps,
            "nonuniform-eps" | "non-uniform-eps" => BoundVariant::NonUniformEps,
            "enhanced-eps" => BoundVariant::EnhancedEps,
            "all" => BoundVariant::All,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            BoundVariant::Uniform => "uniform",
            BoundVariant::NonUniform => "nonuniform",
            BoundVariant::Enhanced => "enhanced",
            BoundVariant::UniformEps => "uniform-eps",
            BoundVariant::NonUniformEps => "nonuniform-eps",
            BoundVariant::EnhancedEps => "enhanced-eps",
            BoundVariant::All => "all",
        }
    }
}

/// Inputs for [`cmd_bound`]. Unused fields may be left unset.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BoundQuery {
    pub alpha: f64,
    pub epsilon: f64,
    pub n: Option<f64>,
    pub budget: Option<f64>,
    pub c_max: Option<f64>,
    pub c_min: Option<f64>,
    pub f_star: Option<f64>,
}

fn need(value: Option<f64>, field: &str) -> Result<f64> {
    let v = value.ok_or_else(|| Error::config(field, "required for this variant"))?;
    if !v.is_finite() {
        return Err(Error::config(field, format!("{v} is not finite")));
    }
    Ok(v)
}

fn positive(value: Option<f64>, field: &str) -> Result<f64> {
    let v = need(value, field)?;
    if v <= 0.0 {
        return Err(Error::config(field, format!("{v} must be positive")));
    }
    Ok(v)
}

/// Evaluates one closed-form bound.
pub fn evaluate_bound(variant: BoundVariant, q: &BoundQuery) -> Result<f64> {
    if !(0.0..=1.0).contains(&q.alpha) {
        return Err(Error::config(
            "alpha",
            format!("{} lies outside [0, 1]", q.alpha),
        ));
    }
    if !(0.0..1.0).contains(&q.epsilon) {
        return Err(Error::config(
            "epsilon",
            format!("{} lies outside [0, 1)", q.epsilon),
        ));
    }
    let budget_and_cmax = || -> Result<(f64, f64)> {
        let b = positive(q.budget, "budget")?;
        let c = positive(q.c_max, "c-max")?;
        if c > b {
            return Err(Error::config("c-max", format!("{c} exceeds budget {b}")));
        }
        Ok((b, c))
    };
    let (a, e) = (q.alpha, q.epsilon);
    Ok(match variant {
        BoundVariant::Uniform => bound_uniform(a),
        BoundVariant::Enhanced => bound_enhanced(a),
        BoundVariant::NonUniform => {
            let (b, c) = budget_and_cmax()?;
            bound_nonuniform(a, b, c)
        }
        BoundVariant::UniformEps => {
            bound_uniform_eps(a, e, positive(q.n, "n")?, need(q.f_star, "f-star")?)
        }
        BoundVariant::NonUniformEps => {
            let (b, c) = budget_and_cmax()?;
            bound_nonuniform_eps(
                a,
                e,
                positive(q.n, "n")?,
                b,
                c,
                positive(q.c_min, "c-min")?,
                need(q.f_star, "f-star")?,
            )
        }
        BoundVariant::EnhancedEps => bound_enhanced_eps(
            a,
            e,
            positive(q.n, "n")?,
            positive(q.budget, "budget")?,
            positive(q.c_min, "c-min")?,
            need(q.f_star, "f-star")?,
        ),
        BoundVariant::All => {
            return Err(Error::InvalidArgument("`all` is not a single bound".into()))
        }
    })
}

fn bound_line(value: f64) -> String {
    let mut s = format_significant(value, 7);
    if is_vacuous(value) {
        s.push_str(" vacuous");
    }
    s
}

/// Prints the requested bound with 7 significant digits. `All` prints every
/// variant whose inputs are present, one `name<TAB>value` line each.
pub fn cmd_bound(variant: BoundVariant, query: &BoundQuery) -> Result<String> {
    if variant != BoundVariant::All {
        return Ok(format!("{}\n", bound_line(evaluate_bound(variant, query)?)));
    }
    let mut out = String::new();
    for v in BoundVariant::EACH {
        match evaluate_bound(v, query) {
            Ok(value) => {
                let _ = writeln!(out, "{}\t{}", v.name(), bound_line(value));
            }
            Err(Error::Config { message, .. }) if message.starts_with("required") => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Generates a graph, assigns trivalency probabilities and returns its text.
pub fn cmd_gen_graph(
    model: GraphModel,
    n: usize,
    m: usize,
    i: u32,
    prob_scale: u32,
    rng_seed: u64,
) -> Result<String> {
    let graph = generate_graph(model, n, m, rng_seed)?;
    let graph = assign_trivalency_scaled(&graph, i, prob_scale, rng_seed)?;
    Ok(serialize_graph(&graph))
}
