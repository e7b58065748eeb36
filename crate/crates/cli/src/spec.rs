//! Command-line flags and the serializable experiment description they map to.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gfl_core::process::DEFAULT_STEP_CAP;
use gfl_core::{make_complete, make_erdos_renyi, make_path, make_ring, make_star, EstimatorConfig, Graph, Scenario};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "gfl", version, about = "Multi-information rumor spreading experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandArgs,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write output to this file instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for replications; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Print the parsed experiment as JSON and exit without running it.
    #[arg(long, global = true)]
    pub dump_spec: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum CommandArgs {
    /// Generate a graph as an edge list.
    Gen(GenArgs),
    /// Estimate stopping times by Monte Carlo.
    Simulate(SimulateArgs),
    /// Evaluate a closed-form expression exactly.
    Exact(ExactArgs),
    /// Solve the configuration Markov chain exactly on a small graph.
    Oracle(OracleArgs),
    /// Run the built-in verification suite.
    Verify(VerifyArgs),
    /// Estimate propagation ratios over a list of sizes.
    RatioSweep(RatioSweepArgs),
    /// Convert a discrete mean to continuous time.
    Convert(ConvertArgs),
    /// Run an experiment previously written with --dump-spec.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyArg {
    Complete,
    Star,
    Ring,
    Path,
    Er,
}

#[derive(Debug, Args, Default)]
pub struct GraphArgs {
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    /// Number of sites.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of leaves of a star.
    #[arg(long)]
    pub leaves: Option<usize>,
    /// Edge probability of an Erdos-Renyi graph.
    #[arg(long)]
    pub p: Option<f64>,
    /// Seed of an Erdos-Renyi graph.
    #[arg(long)]
    pub graph_seed: Option<u64>,
    /// Read the graph from an edge-list file.
    #[arg(long, conflicts_with = "family")]
    pub edge_list: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimatorArgs {
    #[arg(long, default_value_t = 10_000)]
    pub reps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.95)]
    pub ci_level: f64,
    #[arg(long, default_value_t = DEFAULT_STEP_CAP)]
    pub step_cap: u64,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Seed of an Erdos-Renyi graph (same as --graph-seed).
    #[arg(long, conflicts_with = "graph_seed")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioArg {
    /// Site x starts with information x.
    Distinct,
    /// Sites 0 and 1 share information 0; site x >= 2 holds x - 1.
    Duplicated,
}

impl ScenarioArg {
    pub fn scenario(self) -> Scenario {
        match self {
            ScenarioArg::Distinct => Scenario::DistinctAll,
            ScenarioArg::Duplicated => Scenario::DuplicatedFirst,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScenarioArg::Distinct => "distinct",
            ScenarioArg::Duplicated => "duplicated",
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, value_enum, default_value_t = ScenarioArg::Distinct)]
    pub scenario: ScenarioArg,
    /// Estimate the total propagation time.
    #[arg(long)]
    pub total: bool,
    /// Estimate the propagation time of a comma-separated information set.
    #[arg(long = "target", value_name = "INFOS")]
    pub targets: Vec<String>,
    /// Estimate the time until this site knows everything.
    #[arg(long = "y", value_name = "SITE")]
    pub y_sites: Vec<usize>,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formula {
    Harmonic,
    M1,
    Delta,
    StarTotal,
    StarHub,
    StarRatio,
    RingM1,
    Bounds,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[arg(long, value_enum)]
    pub formula: Formula,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub leaves: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CdfKind {
    /// Everyone knows everything.
    Total,
    /// Everyone knows information --index.
    Info,
    /// Site --index knows everything.
    Site,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, value_enum, default_value_t = ScenarioArg::Distinct)]
    pub scenario: ScenarioArg,
    /// Print the M and A tables of the complete graph.
    #[arg(long, conflicts_with = "cdf")]
    pub tables: bool,
    /// Print a hitting-time distribution function.
    #[arg(long, value_enum)]
    pub cdf: Option<CdfKind>,
    #[arg(long, default_value_t = 0)]
    pub index: usize,
    #[arg(long, default_value_t = 20)]
    pub horizon: usize,
    /// Allow one more site using floating-point arithmetic.
    #[arg(long)]
    pub float_path: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Exact,
    Mc,
    All,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    pub suite: Suite,
    #[arg(long, default_value_t = 20_000)]
    pub reps: u64,
    #[arg(long, default_value_t = 7, conflicts_with = "fresh_seed")]
    pub seed: u64,
    /// Draw the master seed from the operating system; it is echoed in the output.
    #[arg(long)]
    pub fresh_seed: bool,
}

#[derive(Debug, Args)]
pub struct RatioSweepArgs {
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    /// Comma-separated site counts.
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    /// Comma-separated leaf counts for stars.
    #[arg(long, value_delimiter = ',')]
    pub leaves: Vec<usize>,
    /// Sweep a single graph read from an edge-list file.
    #[arg(long, conflicts_with = "family")]
    pub edge_list: Option<PathBuf>,
    /// Treat the edge-list graph as vertex-transitive and estimate only site 0.
    #[arg(long)]
    pub transitive: bool,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// Discrete mean as an integer, fraction or decimal.
    #[arg(long)]
    pub discrete_mean: Option<String>,
    #[arg(long)]
    pub edges: Option<usize>,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// JSON file produced by --dump-spec.
    pub spec: PathBuf,
}

/// A fully resolved experiment. Runtime options such as the thread count and
/// output path are not part of it, so echoes do not depend on them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub format: Format,
    #[serde(flatten)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    Gen {
        graph: GraphSpec,
    },
    Simulate {
        graph: GraphSpec,
        scenario: ScenarioArg,
        targets: Vec<Vec<usize>>,
        total: bool,
        y_sites: Vec<usize>,
        estimator: EstimatorSpec,
    },
    Exact {
        formula: Formula,
        n: Option<usize>,
        k: Option<usize>,
        leaves: Option<usize>,
    },
    Oracle {
        graph: GraphSpec,
        scenario: ScenarioArg,
        query: OracleQuery,
        float_path: bool,
    },
    Verify {
        suite: Suite,
        reps: u64,
        seed: u64,
    },
    RatioSweep {
        graphs: Vec<GraphSpec>,
        transitive: bool,
        estimator: EstimatorSpec,
    },
    Convert {
        source: ConvertSource,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OracleQuery {
    Tables,
    Cdf { target: CdfKind, index: usize, horizon: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ConvertSource {
    Given { discrete_mean: String, edges: usize },
    Simulated { graph: GraphSpec, estimator: EstimatorSpec },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    pub reps: u64,
    pub seed: u64,
    pub ci_level: f64,
    pub step_cap: u64,
}

impl EstimatorSpec {
    pub fn config(&self) -> EstimatorConfig {
        EstimatorConfig::new(self.reps, self.seed).with_ci_level(self.ci_level).with_step_cap(self.step_cap)
    }
}

impl From<&EstimatorArgs> for EstimatorSpec {
    fn from(a: &EstimatorArgs) -> Self {
        Self { reps: a.reps, seed: a.seed, ci_level: a.ci_level, step_cap: a.step_cap }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum GraphSpec {
    Complete { n: usize },
    Star { leaves: usize },
    Ring { n: usize },
    Path { n: usize },
    Er { n: usize, p: f64, seed: u64 },
    EdgeList { path: PathBuf },
}

impl GraphSpec {
    pub fn build(&self) -> Result<Graph, CliError> {
        let g = match self {
            GraphSpec::Complete { n } => make_complete(*n),
            GraphSpec::Star { leaves } => make_star(*leaves),
            GraphSpec::Ring { n } => make_ring(*n),
            GraphSpec::Path { n } => make_path(*n),
            GraphSpec::Er { n, p, seed } => make_erdos_renyi(*n, *p, *seed),
            GraphSpec::EdgeList { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
                return Graph::from_edge_list(&text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())));
            }
        };
        g.map_err(|e| CliError::Usage(e.to_string()))
    }

    /// Short label for the `graph` column.
    pub fn label(&self) -> String {
        match self {
            GraphSpec::Complete { .. } => "complete".into(),
            GraphSpec::Star { .. } => "star".into(),
            GraphSpec::Ring { .. } => "ring".into(),
            GraphSpec::Path { .. } => "path".into(),
            GraphSpec::Er { p, seed, .. } => format!("er(p={p};seed={seed})"),
            GraphSpec::EdgeList { path } => path.display().to_string(),
        }
    }

    /// Size parameter used in sweeps: leaves for stars, sites otherwise.
    pub fn size(&self) -> Option<usize> {
        match self {
            GraphSpec::Complete { n } | GraphSpec::Ring { n } | GraphSpec::Path { n } | GraphSpec::Er { n, .. } => {
                Some(*n)
            }
            GraphSpec::Star { leaves } => Some(*leaves),
            GraphSpec::EdgeList { .. } => None,
        }
    }
}

fn family_spec(
    family: FamilyArg,
    n: Option<usize>,
    leaves: Option<usize>,
    p: Option<f64>,
    seed: Option<u64>,
) -> Result<GraphSpec, CliError> {
    let need_n =
        || n.ok_or_else(|| CliError::Usage(format!("--n is required for the {family:?} family").to_lowercase()));
    Ok(match family {
        FamilyArg::Complete => GraphSpec::Complete { n: need_n()? },
        FamilyArg::Ring => GraphSpec::Ring { n: need_n()? },
        FamilyArg::Path => GraphSpec::Path { n: need_n()? },
        FamilyArg::Star => GraphSpec::Star {
            leaves: leaves.ok_or_else(|| CliError::Usage("--leaves is required for the star family".into()))?,
        },
        FamilyArg::Er => GraphSpec::Er {
            n: need_n()?,
            p: p.ok_or_else(|| CliError::Usage("--p is required for the er family".into()))?,
            seed: seed.unwrap_or(0),
        },
    })
}

impl GraphArgs {
    fn is_empty(&self) -> bool {
        self.family.is_none() && self.edge_list.is_none() && self.n.is_none() && self.leaves.is_none()
    }

    /// Resolves the graph. Without `--family`, `--leaves` alone means a star
    /// and `--n` alone the complete graph.
    pub fn resolve(&self, seed_override: Option<u64>) -> Result<GraphSpec, CliError> {
        if let Some(path) = &self.edge_list {
            return Ok(GraphSpec::EdgeList { path: path.clone() });
        }
        let family = match (self.family, self.leaves, self.n) {
            (Some(f), _, _) => f,
            (None, Some(_), None) => FamilyArg::Star,
            (None, None, Some(_)) => FamilyArg::Complete,
            _ => return Err(CliError::Usage("specify --family, --edge-list, --n or --leaves".into())),
        };
        family_spec(family, self.n, self.leaves, self.p, seed_override.or(self.graph_seed))
    }
}

fn parse_info_set(text: &str) -> Result<Vec<usize>, CliError> {
    text.split(',')
        .map(|t| {
            t.trim().parse::<usize>().map_err(|_| CliError::Usage(format!("bad information index '{t}' in --target")))
        })
        .collect()
}

impl Cli {
    /// Turns parsed flags into a spec. `replay` is handled by the caller.
    pub fn to_spec(&self) -> Result<ExperimentSpec, CliError> {
        let command = match &self.command {
            CommandArgs::Gen(a) => Command::Gen { graph: a.graph.resolve(a.seed)? },
            CommandArgs::Simulate(a) => {
                let targets = a.targets.iter().map(|t| parse_info_set(t)).collect::<Result<Vec<_>, _>>()?;
                if !a.total && targets.is_empty() && a.y_sites.is_empty() {
                    return Err(CliError::Usage("request at least one of --total, --target, --y".into()));
                }
                Command::Simulate {
                    graph: a.graph.resolve(None)?,
                    scenario: a.scenario,
                    targets,
                    total: a.total,
                    y_sites: a.y_sites.clone(),
                    estimator: (&a.estimator).into(),
                }
            }
            CommandArgs::Exact(a) => Command::Exact { formula: a.formula, n: a.n, k: a.k, leaves: a.leaves },
            CommandArgs::Oracle(a) => {
                let query = match (a.tables, a.cdf) {
                    (true, None) => OracleQuery::Tables,
                    (false, Some(target)) => OracleQuery::Cdf { target, index: a.index, horizon: a.horizon },
                    _ => return Err(CliError::Usage("oracle needs exactly one of --tables, --cdf".into())),
                };
                let graph = a.graph.resolve(None)?;
                if query == OracleQuery::Tables && !matches!(graph, GraphSpec::Complete { .. }) {
                    return Err(CliError::Usage("--tables is defined for the complete graph only".into()));
                }
                Command::Oracle { graph, scenario: a.scenario, query, float_path: a.float_path }
            }
            CommandArgs::Verify(a) => {
                let seed = if a.fresh_seed { rand::random() } else { a.seed };
                Command::Verify { suite: a.suite, reps: a.reps, seed }
            }
            CommandArgs::RatioSweep(a) => {
                let graphs = if let Some(path) = &a.edge_list {
                    vec![GraphSpec::EdgeList { path: path.clone() }]
                } else {
                    let family = a.family.ok_or_else(|| CliError::Usage("specify --family or --edge-list".into()))?;
                    let sizes = if family == FamilyArg::Star { &a.leaves } else { &a.n };
                    if sizes.is_empty() {
                        let flag = if family == FamilyArg::Star { "--leaves" } else { "--n" };
                        return Err(CliError::Usage(format!("{flag} list is required")));
                    }
                    match family {
                        FamilyArg::Complete => sizes.iter().map(|&n| GraphSpec::Complete { n }).collect(),
                        FamilyArg::Star => sizes.iter().map(|&leaves| GraphSpec::Star { leaves }).collect(),
                        FamilyArg::Ring => sizes.iter().map(|&n| GraphSpec::Ring { n }).collect(),
                        _ => return Err(CliError::Usage("ratio-sweep families are complete, star and ring".into())),
                    }
                };
                Command::RatioSweep { graphs, transitive: a.transitive, estimator: (&a.estimator).into() }
            }
            CommandArgs::Convert(a) => {
                let source = match (&a.discrete_mean, a.edges) {
                    (Some(mean), Some(edges)) if a.graph.is_empty() => {
                        ConvertSource::Given { discrete_mean: mean.clone(), edges }
                    }
                    (None, None) => {
                        ConvertSource::Simulated { graph: a.graph.resolve(None)?, estimator: (&a.estimator).into() }
                    }
                    _ => {
                        return Err(CliError::Usage(
                            "give either --discrete-mean with --edges, or a graph to simulate".into(),
                        ))
                    }
                };
                Command::Convert { source }
            }
            CommandArgs::Replay(_) => return Err(CliError::Usage("replay has no spec of its own".into())),
        };
        Ok(ExperimentSpec { format: self.format, command })
    }
}
