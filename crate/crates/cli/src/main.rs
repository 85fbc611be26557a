use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pfim::harness::{
    cmd_bound, cmd_evaluate, cmd_gen_graph, cmd_oracle_check, cmd_sweep_alpha, BoundQuery,
    BoundVariant, CheckOptions, ConfigMap, ExperimentConfig, GraphModel,
};
use pfim::Error;

#[derive(Parser)]
#[command(
    name = "pfim",
    version,
    about = "Influence maximization under partial feedback"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a policy for every (alpha, budget) pair and write CSV.
    SweepAlpha(ExperimentArgs),
    /// Evaluate a single (alpha, budget) cell and write a transcript.
    Evaluate(ExperimentArgs),
    /// Check the oracle assertions on tiny instances.
    OracleCheck(ExperimentArgs),
    /// Print closed-form approximation guarantees.
    Bound(BoundArgs),
    /// Generate a synthetic graph with trivalency probabilities.
    GenGraph(GenArgs),
}

/// Every flag mirrors the config key of the same name and overrides it.
#[derive(Args, Default)]
struct ExperimentArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Edge list path, or gen:<model>:<nodes>:<edges>.
    #[arg(long)]
    graph: Option<String>,
    /// uniform, random:<lo>:<hi>, or a `node<TAB>cost` file.
    #[arg(long)]
    costs: Option<String>,
    /// Comma-separated alpha values.
    #[arg(long)]
    alpha: Option<String>,
    /// Comma-separated budgets.
    #[arg(long)]
    budget: Option<String>,
    /// Trivalency index applied to every edge.
    #[arg(long)]
    i: Option<String>,
    /// Multiplier on the trivalency probabilities.
    #[arg(long = "prob-scale")]
    prob_scale: Option<String>,
    /// Monte Carlo samples per estimate.
    #[arg(long)]
    samples: Option<String>,
    /// exact or mc.
    #[arg(long)]
    estimator: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    /// random, adversarial-high or adversarial-low.
    #[arg(long = "eps-mode")]
    eps_mode: Option<String>,
    /// Sampled worlds per evaluation.
    #[arg(long)]
    realizations: Option<String>,
    /// sampled or exact.
    #[arg(long)]
    evaluation: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    transcript: Option<String>,
    /// uniform, nonuniform or enhanced.
    #[arg(long)]
    policy: Option<String>,
    /// Random tiny instances for oracle-check.
    #[arg(long)]
    instances: Option<String>,
}

impl ExperimentArgs {
    fn config(&self) -> pfim::Result<ExperimentConfig> {
        let mut map = match &self.config {
            Some(path) => ConfigMap::load(path)?,
            None => ConfigMap::default(),
        };
        let flags = [
            ("graph", &self.graph),
            ("costs", &self.costs),
            ("alpha", &self.alpha),
            ("budget", &self.budget),
            ("i", &self.i),
            ("prob-scale", &self.prob_scale),
            ("samples", &self.samples),
            ("estimator", &self.estimator),
            ("epsilon", &self.epsilon),
            ("eps-mode", &self.eps_mode),
            ("realizations", &self.realizations),
            ("evaluation", &self.evaluation),
            ("seed", &self.seed),
            ("out", &self.out),
            ("transcript", &self.transcript),
            ("policy", &self.policy),
            ("instances", &self.instances),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                map.set(key, v)?;
            }
        }
        ExperimentConfig::from_map(&map)
    }
}

#[derive(Args)]
struct BoundArgs {
    /// uniform, nonuniform, enhanced, uniform-eps, nonuniform-eps, enhanced-eps or all.
    #[arg(long, default_value = "uniform")]
    variant: String,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    /// Node count.
    #[arg(long)]
    n: Option<f64>,
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long = "c-max")]
    c_max: Option<f64>,
    #[arg(long = "c-min")]
    c_min: Option<f64>,
    /// Optimal expected cascade the ε bounds are relative to.
    #[arg(long = "f-star")]
    f_star: Option<f64>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    m: usize,
    /// erdos-renyi or scale-free-ish.
    #[arg(long, default_value = "erdos-renyi")]
    model: String,
    #[arg(long, default_value_t = 1)]
    i: u32,
    #[arg(long = "prob-scale", default_value_t = 1)]
    prob_scale: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn configure_threads() -> pfim::Result<()> {
    let Ok(value) = std::env::var("PFIM_THREADS") else {
        return Ok(());
    };
    let threads = value
        .parse::<usize>()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "PFIM_THREADS must be a positive integer, got {value:?}"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
}

fn print(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes());
}

fn run(cli: Cli) -> pfim::Result<ExitCode> {
    configure_threads()?;
    match cli.command {
        Command::SweepAlpha(args) => {
            let config = args.config()?;
            let csv = cmd_sweep_alpha(&config)?;
            if config.out.is_none() {
                print(&csv);
            }
        }
        Command::Evaluate(args) => {
            let config = args.config()?;
            let report = cmd_evaluate(&config)?;
            if config.out.is_none() {
                print(&report.csv);
            }
            println!("{}", report.summary());
        }
        Command::OracleCheck(args) => {
            let options = CheckOptions::from_config(&args.config()?)?;
            let report = cmd_oracle_check(&options)?;
            print(&report.render());
            if !report.passed() {
                eprintln!(
                    "error: violation: {} oracle checks failed",
                    report.violations
                );
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Bound(args) => {
            let variant = BoundVariant::parse(&args.variant).ok_or_else(|| {
                Error::InvalidArgument(format!("unknown bound variant {:?}", args.variant))
            })?;
            let query = BoundQuery {
                alpha: args.alpha,
                epsilon: args.epsilon,
                n: args.n,
                budget: args.budget,
                c_max: args.c_max,
                c_min: args.c_min,
                f_star: args.f_star,
            };
            print(&cmd_bound(variant, &query)?);
        }
        Command::GenGraph(args) => {
            let model = GraphModel::parse(&args.model).ok_or_else(|| {
                Error::InvalidArgument(format!("unknown graph model {:?}", args.model))
            })?;
            let text = cmd_gen_graph(model, args.n, args.m, args.i, args.prob_scale, args.seed)?;
            match &args.out {
                Some(path) => std::fs::write(path, text)
                    .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?,
                None => print(&text),
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            // Keep the message, drop the usage block that follows the first blank line.
            let text = e.to_string();
            let message: Vec<&str> = text
                .trim_start_matches("error: ")
                .lines()
                .take_while(|l| !l.trim().is_empty())
                .map(str::trim)
                .collect();
            eprintln!("error: usage: {}", message.join(" "));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("error: {}: {message}", e.code());
            ExitCode::FAILURE
        }
    }
}
