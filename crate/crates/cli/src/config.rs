//! Run configuration: TOML file keys, same-named command-line overrides, and
//! resolution into validated inputs.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use sirmap::applications::{DirectMcMode, VaccinationStrategy};
use sirmap::ensemble::SamplerConfig;
use sirmap::graph::{generate_graph, load_edge_list, GraphKind, LoadOptions, MappingKind, NodeId, StaticNetwork};
use sirmap::inter_event::InterEventDistribution;
use sirmap::mapping::MappingSpec;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "SIRMAP_OUT_DIR";
pub const RESOLVED_CONFIG: &str = "resolved_config.toml";

/// `{kind = "exponential", rate = 0.3}` and the analogous forms for the
/// other families; `{kind = "none"}` stands for no recovery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistSpec {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delay: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

impl FromStr for DistSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        #[derive(Deserialize)]
        struct Wrap {
            v: DistSpec,
        }
        let body = s.trim();
        let body = if body.starts_with('{') { body.to_string() } else { format!("{{ {body} }}") };
        toml::from_str::<Wrap>(&format!("v = {body}"))
            .map(|w| w.v)
            .map_err(|e| e.message().to_string())
    }
}

impl DistSpec {
    fn field(&self, name: &str, value: Option<f64>) -> Result<f64> {
        value.ok_or_else(|| anyhow!("distribution `{}` needs `{name}`", self.kind))
    }

    /// `None` for `kind = "none"`.
    pub fn build(&self) -> Result<Option<InterEventDistribution>> {
        let d = match self.kind.as_str() {
            "none" => return Ok(None),
            "exponential" => InterEventDistribution::exponential(self.field("rate", self.rate)?),
            "geometric" => InterEventDistribution::geometric(self.field("p", self.p)?),
            "lognormal" => InterEventDistribution::lognormal(self.field("mu", self.mu)?, self.field("sigma", self.sigma)?),
            "deterministic" => InterEventDistribution::deterministic(self.field("delay", self.delay)?),
            "weibull" => InterEventDistribution::weibull(self.field("shape", self.shape)?, self.field("scale", self.scale)?),
            other => bail!(
                "unknown distribution kind `{other}` (expected exponential, geometric, lognormal, deterministic, weibull or none)"
            ),
        };
        Ok(Some(d?))
    }
}

/// Every key may come from the config file or from `--<key>`; flags win.
#[derive(Debug, Clone, Default, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
#[command(rename_all = "snake_case")]
pub struct Config {
    /// Edge-list file (alternative to `graph`).
    #[arg(long)]
    pub network: Option<PathBuf>,
    /// Treat the edge list as directed.
    #[arg(long, action = clap::ArgAction::Set)]
    pub directed: Option<bool>,
    /// Generator: lattice, erdos_renyi, barabasi_albert or chain_toy.
    #[arg(long)]
    pub graph: Option<String>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub mean_degree: Option<f64>,
    /// Links per new node for barabasi_albert.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub chains: Option<usize>,
    #[arg(long)]
    pub length: Option<usize>,
    /// Generator seed; defaults to `master_seed`.
    #[arg(long)]
    pub graph_seed: Option<u64>,

    /// Transmission law, e.g. `{kind = "exponential", rate = 0.3}`.
    #[arg(long)]
    pub psi: Option<DistSpec>,
    /// Recovery law; absent or `{kind = "none"}` for SI.
    #[arg(long)]
    pub phi: Option<DistSpec>,
    /// exact or mean_field.
    #[arg(long)]
    pub mapping: Option<String>,
    /// independent or gibbs.
    #[arg(long)]
    pub sampler: Option<String>,
    #[arg(long)]
    pub n_samples: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thinning: Option<usize>,
    #[arg(long)]
    pub gibbs_chains: Option<usize>,
    #[arg(long)]
    pub master_seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,

    /// Source node label.
    #[arg(long)]
    pub source: Option<String>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub t_step: Option<f64>,

    /// Average only finite distances (required with recovery).
    #[arg(long, action = clap::ArgAction::Set)]
    pub conditional: Option<bool>,
    #[arg(long)]
    pub n_bar: Option<usize>,

    /// Observed snapshot file.
    #[arg(long)]
    pub snapshot: Option<PathBuf>,
    /// Any of temporal, direct, topological.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long)]
    pub direct_samples: Option<usize>,
    /// conditioned or exact_match.
    #[arg(long)]
    pub direct_mode: Option<String>,
    /// Benchmark against synthetic snapshots from `source`.
    #[arg(long, action = clap::ArgAction::Set)]
    pub evaluate: Option<bool>,
    #[arg(long)]
    pub realizations: Option<usize>,
    #[arg(long)]
    pub observation_time: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub bandwidths: Option<Vec<f64>>,

    #[arg(long)]
    pub t0: Option<usize>,
    #[arg(long)]
    pub delta_t: Option<usize>,
    #[arg(long)]
    pub doses: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Any of temporal, temporal-top, random, hubs.
    #[arg(long, value_delimiter = ',')]
    pub strategies: Option<Vec<String>>,
    /// Share dynamics streams across strategies (on by default).
    #[arg(long, action = clap::ArgAction::Set)]
    pub common_random_numbers: Option<bool>,

    #[arg(long)]
    pub n_max: Option<usize>,
    /// Transmission rates for the percolation comparison.
    #[arg(long, value_delimiter = ',')]
    pub betas: Option<Vec<f64>>,

    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub instances: Option<usize>,
    #[arg(long)]
    pub scaling_sources: Option<usize>,
    /// distance or hops.
    #[arg(long)]
    pub observable: Option<String>,
}

impl Config {
    /// Reads `path` (if any) and overlays every key given on the command line.
    pub fn load(path: Option<&Path>, flags: &Config) -> Result<Config> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                toml::from_str::<Config>(&text).with_context(|| format!("invalid config {}", p.display()))?
            }
            None => Config::default(),
        };
        let mut merged = serde_json::to_value(&file)?;
        let over = serde_json::to_value(flags)?;
        if let (Some(m), Some(o)) = (merged.as_object_mut(), over.as_object()) {
            for (k, v) in o {
                if !v.is_null() {
                    m.insert(k.clone(), v.clone());
                }
            }
        }
        Ok(serde_json::from_value(merged)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}

/// Fills `slot` with `default` if unset and returns the value.
pub fn fill<T: Clone>(slot: &mut Option<T>, default: T) -> T {
    slot.get_or_insert(default).clone()
}

/// Inputs shared by every subcommand.
pub struct Common {
    pub net: StaticNetwork,
    pub master_seed: u64,
    pub workers: usize,
    pub output_dir: PathBuf,
}

pub fn resolve_common(cfg: &mut Config) -> Result<Common> {
    let master_seed = fill(&mut cfg.master_seed, 0);
    let default_workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let workers = fill(&mut cfg.workers, default_workers);
    if workers == 0 {
        bail!("workers: must be at least 1");
    }
    let default_out = std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("sirmap-out"), PathBuf::from);
    let output_dir = fill(&mut cfg.output_dir, default_out);
    let net = resolve_network(cfg, master_seed)?;
    Ok(Common {
        net,
        master_seed,
        workers,
        output_dir,
    })
}

fn resolve_network(cfg: &mut Config, master_seed: u64) -> Result<StaticNetwork> {
    match (&cfg.network, &cfg.graph) {
        (Some(_), Some(_)) => bail!("network and graph: give one, not both"),
        (None, None) => bail!("network: give an edge-list path or a `graph` generator"),
        (Some(path), None) => {
            let path = std::path::absolute(path).with_context(|| format!("network: bad path {}", path.display()))?;
            let directed = fill(&mut cfg.directed, false);
            let net = load_edge_list(&path, LoadOptions { directed })?;
            cfg.network = Some(path);
            Ok(net)
        }
        (None, Some(kind)) => {
            let kind = match kind.as_str() {
                "lattice" => GraphKind::Lattice {
                    width: fill(&mut cfg.width, 11),
                    height: fill(&mut cfg.height, 11),
                },
                "erdos_renyi" => GraphKind::ErdosRenyi {
                    nodes: fill(&mut cfg.nodes, 1000),
                    mean_degree: fill(&mut cfg.mean_degree, 3.0),
                },
                "barabasi_albert" => GraphKind::BarabasiAlbert {
                    nodes: fill(&mut cfg.nodes, 1000),
                    m: fill(&mut cfg.m, 2),
                },
                "chain_toy" => GraphKind::ChainToy {
                    chains: fill(&mut cfg.chains, 20),
                    length: fill(&mut cfg.length, 3),
                },
                other => bail!("graph: unknown generator `{other}` (expected lattice, erdos_renyi, barabasi_albert or chain_toy)"),
            };
            let seed = fill(&mut cfg.graph_seed, master_seed);
            Ok(generate_graph(kind, seed)?)
        }
    }
}

pub fn resolve_spec(cfg: &mut Config) -> Result<MappingSpec> {
    let psi = cfg
        .psi
        .as_ref()
        .ok_or_else(|| anyhow!("psi: missing transmission distribution"))?
        .build()
        .context("psi")?
        .ok_or_else(|| anyhow!("psi: `none` is not allowed for transmission"))?;
    let phi = match &cfg.phi {
        Some(d) => d.build().context("phi")?,
        None => None,
    };
    if psi.is_discrete() != phi.map_or(psi.is_discrete(), |p| p.is_discrete()) {
        bail!("psi and phi: mixing discrete and continuous laws is not supported");
    }
    let kind = match fill(&mut cfg.mapping, "exact".into()).as_str() {
        "exact" => MappingKind::Exact,
        "mean_field" => MappingKind::MeanField,
        other => bail!("mapping: unknown kind `{other}` (expected exact or mean_field)"),
    };
    Ok(MappingSpec::new(psi, phi, kind))
}

pub fn resolve_sampler(cfg: &mut Config) -> Result<(SamplerConfig, usize)> {
    let n = fill(&mut cfg.n_samples, 10_000);
    if n == 0 {
        bail!("n_samples: must be at least 1");
    }
    let sampler = match fill(&mut cfg.sampler, "independent".into()).as_str() {
        "independent" => SamplerConfig::Independent,
        "gibbs" => SamplerConfig::Gibbs {
            burn_in: cfg.burn_in,
            thinning: cfg.thinning,
            chains: fill(&mut cfg.gibbs_chains, 1).max(1),
        },
        other => bail!("sampler: unknown sampler `{other}` (expected independent or gibbs)"),
    };
    Ok((sampler, n))
}

pub fn resolve_source(cfg: &mut Config, net: &StaticNetwork) -> Result<NodeId> {
    let label = fill(&mut cfg.source, net.labels()[0].clone());
    net.node_by_label(&label).ok_or_else(|| anyhow!("source: no node labelled `{label}`"))
}

/// Per-step probabilities of discrete-time dynamics.
pub fn discrete_rates(spec: &MappingSpec) -> Result<(f64, f64)> {
    let beta = match spec.psi {
        InterEventDistribution::Geometric { p } => p,
        _ => bail!("psi: discrete-time simulation needs a geometric transmission law"),
    };
    let gamma = match spec.phi {
        None => 0.0,
        Some(InterEventDistribution::Geometric { p }) => p,
        Some(_) => bail!("phi: discrete-time simulation needs a geometric recovery law"),
    };
    Ok((beta, gamma))
}

pub fn time_grid(cfg: &mut Config) -> Result<Vec<f64>> {
    let t_max = fill(&mut cfg.t_max, 20.0);
    let t_step = fill(&mut cfg.t_step, 1.0);
    if !(t_step > 0.0) || !(t_max >= 0.0) || !t_max.is_finite() {
        bail!("t_max, t_step: need t_max >= 0 and t_step > 0");
    }
    let steps = (t_max / t_step + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=steps).map(|k| k as f64 * t_step).collect();
    grid.push(f64::INFINITY);
    Ok(grid)
}

pub fn parse_direct_mode(s: &str) -> Result<DirectMcMode> {
    match s {
        "conditioned" => Ok(DirectMcMode::Conditioned),
        "exact_match" => Ok(DirectMcMode::ExactMatch),
        other => bail!("direct_mode: unknown mode `{other}` (expected conditioned or exact_match)"),
    }
}

pub fn parse_strategies(list: &[String]) -> Result<Vec<VaccinationStrategy>> {
    list.iter()
        .map(|s| s.parse::<VaccinationStrategy>().map_err(|e| anyhow!("strategies: {e}")))
        .collect()
}
