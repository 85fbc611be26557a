//! Flat `key = value` experiment configuration.
//!
//! A config file holds one `key = value` pair per line (`#` starts a comment).
//! Command-line flags use the same key names and override file values.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use num_rational::Rational64;

use crate::error::{Error, Result};
use crate::estimation::{epsilon_wrap, ErrorMode, Estimator};
use crate::graph::{
    apply_costs, assign_random_costs, assign_trivalency_scaled, load_graph_with_ids, IdMap,
    LoadedGraph,
};
use crate::policies::PolicyKind;
use crate::scalar::Cost;

use super::generate::{generate_graph, GraphModel};

pub const CONFIG_KEYS: &[&str] = &[
    "graph",
    "costs",
    "alpha",
    "budget",
    "i",
    "prob-scale",
    "samples",
    "estimator",
    "epsilon",
    "eps-mode",
    "realizations",
    "evaluation",
    "seed",
    "out",
    "transcript",
    "policy",
    "instances",
];

pub const DEFAULT_SAMPLES: usize = 1000;
pub const DEFAULT_REALIZATIONS: usize = 100;
pub const DEFAULT_INSTANCES: usize = 20;

/// Raw key/value pairs after merging file and flags.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigMap {
    values: BTreeMap<String, String>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                message: format!("expected `key = value`, found {line:?}"),
            })?;
            map.set(key.trim(), value.trim())?;
        }
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read(path)?)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !CONFIG_KEYS.contains(&key) {
            return Err(Error::config(key, "unknown key"));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::config(key, format!("cannot parse {v:?}")))
            })
            .transpose()
    }
}

pub(crate) fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub(crate) fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphSource {
    File(PathBuf),
    /// `gen:<model>:<n>:<m>`, generated from the config seed.
    Generated {
        model: GraphModel,
        nodes: usize,
        edges: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum CostMode {
    Uniform,
    File(PathBuf),
    Random { lo: Rational64, hi: Rational64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvaluationMode {
    Sampled,
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub graph: Option<GraphSource>,
    pub costs: CostMode,
    pub alphas: Vec<f64>,
    pub budgets: Vec<Rational64>,
    /// Trivalency index; `None` keeps the probabilities of the graph file.
    pub trivalency: Option<u32>,
    pub prob_scale: u32,
    pub samples: Option<usize>,
    pub exact_estimator: bool,
    pub epsilon: f64,
    pub eps_mode: ErrorMode,
    pub realizations: usize,
    pub evaluation: EvaluationMode,
    pub rng_seed: u64,
    pub out: Option<PathBuf>,
    pub transcript: Option<PathBuf>,
    pub policy: PolicyKind,
    pub instances: usize,
}

fn parse_list<T>(
    map: &ConfigMap,
    key: &str,
    parse: impl Fn(&str) -> Option<T>,
) -> Result<Option<Vec<T>>> {
    let Some(text) = map.get(key) else {
        return Ok(None);
    };
    let items = text
        .split(',')
        .map(|item| {
            let item = item.trim();
            parse(item).ok_or_else(|| Error::config(key, format!("cannot parse {item:?}")))
        })
        .collect::<Result<Vec<T>>>()?;
    if items.is_empty() {
        return Err(Error::config(key, "empty list"));
    }
    Ok(Some(items))
}

impl ExperimentConfig {
    pub fn from_map(map: &ConfigMap) -> Result<Self> {
        let graph = map.get("graph").map(parse_graph_source).transpose()?;

        let costs = match map.get("costs") {
            None | Some("uniform") => CostMode::Uniform,
            Some(spec) if spec.starts_with("random:") => {
                let parts: Vec<&str> = spec.split(':').collect();
                let bound = |s: &str| {
                    Rational64::parse_cost(s)
                        .ok_or_else(|| Error::config("costs", format!("cannot parse cost {s:?}")))
                };
                if parts.len() != 3 {
                    return Err(Error::config("costs", "expected random:<lo>:<hi>"));
                }
                let (lo, hi) = (bound(parts[1])?, bound(parts[2])?);
                if !(lo > Rational64::from_integer(0)) || hi < lo {
                    return Err(Error::config(
                        "costs",
                        format!("invalid range [{lo}, {hi}]"),
                    ));
                }
                CostMode::Random { lo, hi }
            }
            Some(path) => CostMode::File(PathBuf::from(path)),
        };

        let alphas = parse_list(map, "alpha", |s| s.parse::<f64>().ok())?
            .unwrap_or_else(|| vec![0.0, 0.5, 1.0]);
        if let Some(a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::config("alpha", format!("{a} lies outside [0, 1]")));
        }

        let budgets = parse_list(map, "budget", Rational64::parse_cost)?
            .unwrap_or_else(|| vec![Rational64::from_integer(1)]);
        if let Some(b) = budgets
            .iter()
            .find(|b| !(**b > Rational64::from_integer(0)))
        {
            return Err(Error::config("budget", format!("{b} is not positive")));
        }

        let trivalency = map.parsed::<u32>("i")?;
        let prob_scale = map.parsed::<u32>("prob-scale")?.unwrap_or(1);
        if trivalency == Some(0) || prob_scale == 0 {
            return Err(Error::config(
                "i",
                "trivalency index and scale must be positive",
            ));
        }
        if let Some(i) = trivalency {
            if u64::from(i) * u64::from(prob_scale) > 100 {
                return Err(Error::config(
                    "i",
                    format!(
                        "i * prob-scale = {} exceeds 100",
                        u64::from(i) * u64::from(prob_scale)
                    ),
                ));
            }
        }

        let samples = map.parsed::<usize>("samples")?;
        if samples == Some(0) {
            return Err(Error::config("samples", "must be at least 1"));
        }
        let exact_estimator = match map.get("estimator") {
            None | Some("mc") => false,
            Some("exact") => true,
            Some(other) => {
                return Err(Error::config(
                    "estimator",
                    format!("unknown estimator {other:?}"),
                ))
            }
        };
        let epsilon = map.parsed::<f64>("epsilon")?.unwrap_or(0.0);
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::config(
                "epsilon",
                format!("{epsilon} lies outside [0, 1)"),
            ));
        }
        let eps_mode = match map.get("eps-mode") {
            None => ErrorMode::Random,
            Some(m) => ErrorMode::parse(m)
                .ok_or_else(|| Error::config("eps-mode", format!("unknown mode {m:?}")))?,
        };

        let realizations = map
            .parsed::<usize>("realizations")?
            .unwrap_or(DEFAULT_REALIZATIONS);
        if realizations == 0 {
            return Err(Error::config("realizations", "must be at least 1"));
        }
        let evaluation = match map.get("evaluation") {
            None | Some("sampled") => EvaluationMode::Sampled,
            Some("exact") => EvaluationMode::Exact,
            Some(other) => {
                return Err(Error::config(
                    "evaluation",
                    format!("unknown mode {other:?}"),
                ))
            }
        };
        if evaluation == EvaluationMode::Sampled && realizations < 2 {
            return Err(Error::config(
                "realizations",
                "sampled evaluation needs at least 2",
            ));
        }
        if evaluation == EvaluationMode::Exact && !exact_estimator {
            return Err(Error::config(
                "evaluation",
                "exact evaluation requires estimator = exact",
            ));
        }

        let policy = match map.get("policy") {
            None => PolicyKind::Enhanced,
            Some(p) => PolicyKind::parse(p)
                .ok_or_else(|| Error::config("policy", format!("unknown policy {p:?}")))?,
        };

        Ok(Self {
            graph,
            costs,
            alphas,
            budgets,
            trivalency,
            prob_scale,
            samples,
            exact_estimator,
            epsilon,
            eps_mode,
            realizations,
            evaluation,
            rng_seed: map.parsed::<u64>("seed")?.unwrap_or(0),
            out: map.get("out").map(PathBuf::from),
            transcript: map.get("transcript").map(PathBuf::from),
            policy,
            instances: map
                .parsed::<usize>("instances")?
                .unwrap_or(DEFAULT_INSTANCES),
        })
    }

    /// The configured estimator, ε-wrapped when `epsilon > 0`.
    pub fn estimator(&self) -> Result<Estimator> {
        let inner = if self.exact_estimator {
            Estimator::exact()
        } else {
            Estimator::monte_carlo(self.samples.unwrap_or(DEFAULT_SAMPLES))?
        };
        if self.epsilon > 0.0 {
            epsilon_wrap(inner, self.epsilon, self.eps_mode, self.rng_seed)
        } else {
            Ok(inner)
        }
    }

    /// Loads or generates the graph, then applies probabilities and costs.
    pub fn load_graph(&self) -> Result<LoadedGraph> {
        let one = Rational64::from_integer(1);
        let loaded = match &self.graph {
            None => return Err(Error::config("graph", "required")),
            Some(GraphSource::File(path)) => load_graph_with_ids(&read(path)?, one)?,
            Some(GraphSource::Generated {
                model,
                nodes,
                edges,
            }) => {
                let graph = generate_graph(*model, *nodes, *edges, self.rng_seed)?;
                let n = graph.node_count();
                LoadedGraph {
                    graph,
                    id_map: IdMap::identity(n),
                }
            }
        };
        let LoadedGraph { mut graph, id_map } = loaded;
        if let Some(i) = self.trivalency {
            graph = assign_trivalency_scaled(&graph, i, self.prob_scale, self.rng_seed)?;
        }
        graph = match &self.costs {
            CostMode::Uniform => graph,
            CostMode::File(path) => apply_costs(&graph, &read(path)?, Some(&id_map))?,
            CostMode::Random { lo, hi } => assign_random_costs(&graph, *lo, *hi, self.rng_seed)?,
        };
        Ok(LoadedGraph { graph, id_map })
    }
}

fn parse_graph_source(text: &str) -> Result<GraphSource> {
    let Some(spec) = text.strip_prefix("gen:") else {
        return Ok(GraphSource::File(PathBuf::from(text)));
    };
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::config(
            "graph",
            "expected gen:<model>:<nodes>:<edges>",
        ));
    }
    let model = GraphModel::parse(parts[0])
        .ok_or_else(|| Error::config("graph", format!("unknown model {:?}", parts[0])))?;
    let count = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::config("graph", format!("cannot parse count {s:?}")))
    };
    Ok(GraphSource::Generated {
        model,
        nodes: count(parts[1])?,
        edges: count(parts[2])?,
    })
}
