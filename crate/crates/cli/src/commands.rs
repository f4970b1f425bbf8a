use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde_json::{json, Map, Value};

use sirmap::analysis::{
    characteristic_timescale, curve_csv, disorder_scaling, outbreak_curve, propagation_matrix, ScalingConfig,
    ScalingObservable,
};
use sirmap::applications::{
    evaluate_source_detection, paired_difference, source_detect_direct_mc, source_detect_temporal,
    source_detect_topological, vaccination_csv, vaccination_run, vaccination_survival, EvaluationConfig,
    VaccinationConfig, DEFAULT_BANDWIDTH,
};
use sirmap::ensemble::{with_workers, Ensemble};
use sirmap::graph::MappingKind;
use sirmap::inter_event::InterEventDistribution;
use sirmap::mapping::Snapshot;
use sirmap::percolation::{bond_percolation_mean, p_nk_general, transmissibility};
use sirmap::rng::RngStreamSpec;

use crate::config::{self, fill, Common, Config};

pub type Summary = Map<String, Value>;

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn write_output(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Creates the output directory and records the fully resolved config.
fn start(common: &Common, cfg: &Config) -> Result<()> {
    std::fs::create_dir_all(&common.output_dir)
        .with_context(|| format!("creating output directory {}", common.output_dir.display()))?;
    write_output(&common.output_dir, config::RESOLVED_CONFIG, &cfg.to_toml()?)
}

pub fn simulate(cfg: &mut Config) -> Result<Summary> {
    let common = config::resolve_common(cfg)?;
    let spec = config::resolve_spec(cfg)?;
    let (sampler, n) = config::resolve_sampler(cfg)?;
    let source = config::resolve_source(cfg, &common.net)?;
    let grid = config::time_grid(cfg)?;
    start(&common, cfg)?;
    let net = &common.net;
    with_workers(common.workers, || {
        let ens = Ensemble::new(net, spec, sampler, common.master_seed);
        let curve = outbreak_curve(&ens, source, n, &grid)?;
        write_output(&common.output_dir, "outbreak_curve.csv", &curve_csv(&curve))?;
        let last = curve.last().expect("grid is non-empty");
        let mut s = Summary::new();
        s.insert("final_mean".into(), json!(last.mean));
        s.insert("final_stderr".into(), last.stderr.map_or(Value::Null, |x| json!(x)));
        if n == 1 {
            s.insert("warning".into(), json!("n_samples = 1: standard errors are undefined and left empty"));
        }
        if spec.phi.is_some() {
            let p = transmissibility(&spec.psi, spec.phi.as_ref())?;
            let reference = bond_percolation_mean(net, p, source, n, &RngStreamSpec::new(common.master_seed))?;
            s.insert("transmissibility".into(), json!(p));
            s.insert("percolation_reference".into(), json!(reference.mean));
            s.insert("percolation_stderr".into(), reference.stderr().map_or(Value::Null, |x| json!(x)));
        }
        Ok(s)
    })
}

pub fn propagation(cfg: &mut Config) -> Result<Summary> {
    let common = config::resolve_common(cfg)?;
    let spec = config::resolve_spec(cfg)?;
    let (sampler, n) = config::resolve_sampler(cfg)?;
    let conditional = fill(&mut cfg.conditional, false);
    if spec.phi.is_some() && !conditional {
        bail!("conditional: expected propagation times diverge with recovery; set conditional = true");
    }
    let size = common.net.node_count();
    let n_bar = fill(&mut cfg.n_bar, size / 2);
    if n_bar < 1 || n_bar >= size {
        bail!("n_bar: must lie in [1, {}]", size.saturating_sub(1));
    }
    start(&common, cfg)?;
    let net = &common.net;
    with_workers(common.workers, || {
        let ens = Ensemble::new(net, spec, sampler, common.master_seed);
        let d = propagation_matrix(&ens, n, conditional)?;
        let ranking = characteristic_timescale(&d, n_bar)?;
        write_output(&common.output_dir, "propagation_matrix.csv", &d.to_csv(net, &ranking.ordering))?;
        if conditional {
            write_output(&common.output_dir, "reach_probability.csv", &d.reach_csv(net, &ranking.ordering))?;
        }
        write_output(&common.output_dir, "timescale.csv", &ranking.to_csv(net))?;
        let top = ranking.ordering[0];
        let mut s = Summary::new();
        s.insert("n_bar".into(), json!(n_bar));
        s.insert("fastest_node".into(), json!(net.labels()[top]));
        s.insert("fastest_tau".into(), finite_or_null(ranking.tau[top]));
        Ok(s)
    })
}

pub fn source_detect(cfg: &mut Config) -> Result<Summary> {
    if fill(&mut cfg.evaluate, false) {
        return evaluate(cfg);
    }
    let common = config::resolve_common(cfg)?;
    let methods = fill(
        &mut cfg.methods,
        vec!["temporal".into(), "direct".into(), "topological".into()],
    );
    for m in &methods {
        if !matches!(m.as_str(), "temporal" | "direct" | "topological") {
            bail!("methods: unknown method `{m}` (expected temporal, direct or topological)");
        }
    }
    let path = cfg.snapshot.clone().ok_or_else(|| anyhow!("snapshot: missing observed snapshot file"))?;
    let path = std::path::absolute(&path)?;
    cfg.snapshot = Some(path.clone());
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading snapshot {}", path.display()))?;
    let observed = Snapshot::from_text(&common.net, &text)?;
    if observed.affected().is_empty() {
        bail!("snapshot: no infected or recovered nodes");
    }
    let needs_dynamics = methods.iter().any(|m| m != "topological");
    let spec = if needs_dynamics { Some(config::resolve_spec(cfg)?) } else { None };
    let (sampler, n) = config::resolve_sampler(cfg)?;
    let bandwidth = fill(&mut cfg.bandwidth, DEFAULT_BANDWIDTH);
    let mut direct = None;
    if methods.iter().any(|m| m == "direct") {
        let spec = spec.as_ref().expect("resolved above");
        let (beta, gamma) = config::discrete_rates(spec)?;
        let samples = fill(&mut cfg.direct_samples, 20_000);
        let mode = config::parse_direct_mode(&fill(&mut cfg.direct_mode, "conditioned".into()))?;
        direct = Some((beta, gamma, samples, mode));
    }
    if methods.iter().any(|m| m == "temporal") && spec.as_ref().map(|s| s.kind) != Some(MappingKind::Exact) {
        bail!("mapping: the temporal method needs exact instances for recovery times");
    }
    start(&common, cfg)?;
    let net = &common.net;
    with_workers(common.workers, || {
        let mut s = Summary::new();
        for m in &methods {
            let scores = match m.as_str() {
                "temporal" => {
                    let ens = Ensemble::new(net, spec.expect("resolved"), sampler, common.master_seed);
                    source_detect_temporal(&ens, &observed, n, bandwidth)?
                }
                "direct" => {
                    let (beta, gamma, samples, mode) = direct.expect("resolved");
                    source_detect_direct_mc(net, beta, gamma, &observed, samples, mode, &RngStreamSpec::new(common.master_seed))?
                }
                _ => source_detect_topological(net, &observed)?,
            };
            write_output(&common.output_dir, &format!("scores_{m}.csv"), &scores.to_csv(net))?;
            s.insert(format!("{m}_argmax"), json!(net.labels()[scores.argmax()]));
        }
        Ok(s)
    })
}

fn evaluate(cfg: &mut Config) -> Result<Summary> {
    let common = config::resolve_common(cfg)?;
    let spec = config::resolve_spec(cfg)?;
    if spec.kind != MappingKind::Exact {
        bail!("mapping: the temporal method needs exact instances for recovery times");
    }
    let (beta, gamma) = config::discrete_rates(&spec)?;
    let (sampler, n) = config::resolve_sampler(cfg)?;
    let source = config::resolve_source(cfg, &common.net)?;
    let eval = EvaluationConfig {
        beta,
        gamma,
        time: fill(&mut cfg.observation_time, 3),
        source,
        realizations: fill(&mut cfg.realizations, 30),
        temporal_samples: n,
        direct_samples: fill(&mut cfg.direct_samples, 20_000),
        direct_mode: config::parse_direct_mode(&fill(&mut cfg.direct_mode, "conditioned".into()))?,
    };
    if eval.time == 0 || eval.realizations == 0 {
        bail!("observation_time, realizations: must be at least 1");
    }
    let bandwidths = fill(&mut cfg.bandwidths, vec![0.0625, DEFAULT_BANDWIDTH, 0.25]);
    if bandwidths.is_empty() || bandwidths.iter().any(|a| !(*a > 0.0)) {
        bail!("bandwidths: need at least one positive bandwidth");
    }
    start(&common, cfg)?;
    let net = &common.net;
    with_workers(common.workers, || {
        let ens = Ensemble::new(net, spec, sampler, common.master_seed);
        let results = evaluate_source_detection(&ens, &eval, &bandwidths, common.master_seed)?;
        let mut s = Summary::new();
        let mut spearman = String::from("bandwidth,realization,spearman\n");
        for r in &results {
            write_output(&common.output_dir, &format!("evaluation_a{}.csv", r.bandwidth), &r.to_csv())?;
            for (o, rho) in r.spearman.iter().enumerate() {
                let _ = writeln!(spearman, "{},{},{}", r.bandwidth, o, rho.map(|x| x.to_string()).unwrap_or_default());
            }
            s.insert(
                format!("mean_spearman_a{}", r.bandwidth),
                r.mean_spearman().map_or(Value::Null, |x| json!(x)),
            );
        }
        write_output(&common.output_dir, "evaluation_spearman.csv", &spearman)?;
        s.insert("unmatched_realizations".into(), json!(results[0].unmatched));
        Ok(s)
    })
}

pub fn vaccinate(cfg: &mut Config) -> Result<Summary> {
    let common = config::resolve_common(cfg)?;
    let spec = config::resolve_spec(cfg)?;
    let (beta, gamma) = config::discrete_rates(&spec)?;
    let (sampler, n) = config::resolve_sampler(cfg)?;
    let source = config::resolve_source(cfg, &common.net)?;
    let size = common.net.node_count();
    let vc = VaccinationConfig {
        beta,
        gamma,
        source,
        t0: fill(&mut cfg.t0, 3),
        delta_t: fill(&mut cfg.delta_t, 10),
        doses: fill(&mut cfg.doses, size / 5),
        trials: fill(&mut cfg.trials, 200),
        horizon: fill(&mut cfg.horizon, 50),
        common_random_numbers: fill(&mut cfg.common_random_numbers, true),
    };
    if vc.doses >= size {
        bail!("doses: {} doses for {size} nodes; at most N - 1 can be vaccinated", vc.doses);
    }
    if vc.trials == 0 {
        bail!("trials: must be at least 1");
    }
    let strategies = config::parse_strategies(&fill(
        &mut cfg.strategies,
        vec!["temporal".into(), "random".into(), "hubs".into()],
    ))?;
    if strategies.is_empty() {
        bail!("strategies: need at least one strategy");
    }
    start(&common, cfg)?;
    let net = &common.net;
    with_workers(common.workers, || {
        let ens = Ensemble::new(net, spec, sampler, common.master_seed);
        let p_tilde = vaccination_survival(&ens, source, vc.t0 as f64, vc.delta_t as f64, n)?;
        let outcomes = strategies
            .iter()
            .map(|&st| vaccination_run(net, &vc, st, &p_tilde, common.master_seed))
            .collect::<sirmap::Result<Vec<_>>>()?;
        write_output(&common.output_dir, "vaccination.csv", &vaccination_csv(&outcomes))?;
        let mut finals = String::from("trial");
        for o in &outcomes {
            let _ = write!(finals, ",{}", o.strategy.name());
        }
        finals.push('\n');
        for t in 0..vc.trials {
            let _ = write!(finals, "{t}");
            for o in &outcomes {
                let _ = write!(finals, ",{}", o.final_infected[t]);
            }
            finals.push('\n');
        }
        write_output(&common.output_dir, "final_infected.csv", &finals)?;
        let mut s = Summary::new();
        for o in &outcomes {
            let e = sirmap::ensemble::EnsembleEstimate::from_values(&o.final_infected);
            s.insert(format!("{}_final_mean", o.strategy.name()), json!(e.mean));
        }
        let base = &outcomes[0];
        for o in &outcomes[1..] {
            let d = paired_difference(&o.final_infected, &base.final_infected);
            s.insert(
                format!("{}_minus_{}", o.strategy.name(), base.strategy.name()),
                json!({"mean": d.mean, "stderr": d.stderr()}),
            );
        }
        Ok(s)
    })
}

pub fn percolation(cfg: &mut Config) -> Result<Summary> {
    let common = config::resolve_common(cfg)?;
    let spec = config::resolve_spec(cfg)?;
    let (sampler, n) = config::resolve_sampler(cfg)?;
    let source = config::resolve_source(cfg, &common.net)?;
    let n_max = fill(&mut cfg.n_max, 10);
    if n_max == 0 {
        bail!("n_max: must be at least 1");
    }
    let grid = config::time_grid(cfg)?;
    let specs = match &cfg.betas {
        None => vec![spec],
        Some(betas) => {
            if !matches!(spec.psi, InterEventDistribution::Exponential { .. }) {
                bail!("betas: sweeping rates needs an exponential psi");
            }
            betas
                .iter()
                .map(|&b| {
                    let mut s = spec;
                    s.psi = InterEventDistribution::exponential(b).map_err(|e| anyhow!("betas: {e}"))?;
                    Ok(s)
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    start(&common, cfg)?;
    let net = &common.net;
    with_workers(common.workers, || {
        let mut s = Summary::new();
        let p = transmissibility(&spec.psi, spec.phi.as_ref())?;
        s.insert("transmissibility".into(), json!(p));
        let mut table = String::from("n,k,p_nk\n");
        for deg in 1..=n_max {
            let t = p_nk_general(&spec.psi, spec.phi.as_ref(), deg)?;
            for (k, v) in t.p_nk.iter().enumerate() {
                let _ = writeln!(table, "{deg},{k},{v}");
            }
        }
        write_output(&common.output_dir, "p_nk.csv", &table)?;
        let mut csv = String::from("rate,t,mean,stderr,percolation_reference,percolation_stderr\n");
        for (i, sp) in specs.iter().enumerate() {
            let rate = match sp.psi {
                InterEventDistribution::Exponential { rate } => rate.to_string(),
                _ => String::new(),
            };
            let ens = Ensemble::new(net, *sp, sampler, common.master_seed);
            let curve = outbreak_curve(&ens, source, n, &grid)?;
            let pb = transmissibility(&sp.psi, sp.phi.as_ref())?;
            let streams = RngStreamSpec::new(common.master_seed);
            let reference = bond_percolation_mean(net, pb, source, n, &streams)?;
            let ref_se = reference.stderr().map(|x| x.to_string()).unwrap_or_default();
            for pt in &curve {
                let se = pt.stderr.map(|x| x.to_string()).unwrap_or_default();
                let _ = writeln!(csv, "{rate},{},{},{se},{},{ref_se}", pt.t, pt.mean, reference.mean);
            }
            let last = curve.last().expect("grid is non-empty");
            s.insert(
                format!("run{i}"),
                json!({"rate": rate, "transmissibility": pb, "final_mean": last.mean, "percolation_reference": reference.mean}),
            );
        }
        write_output(&common.output_dir, "percolation_comparison.csv", &csv)?;
        Ok(s)
    })
}

pub fn scaling(cfg: &mut Config) -> Result<Summary> {
    let master_seed = fill(&mut cfg.master_seed, 0);
    let default_workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let workers = fill(&mut cfg.workers, default_workers);
    let default_out =
        std::env::var_os(config::OUT_DIR_ENV).map_or_else(|| std::path::PathBuf::from("sirmap-out"), Into::into);
    let output_dir = fill(&mut cfg.output_dir, default_out);
    let weights = cfg
        .psi
        .as_ref()
        .ok_or_else(|| anyhow!("psi: missing edge-weight distribution"))?
        .build()
        .context("psi")?
        .ok_or_else(|| anyhow!("psi: `none` is not a weight distribution"))?;
    let observable = match fill(&mut cfg.observable, "hops".into()).as_str() {
        "hops" => ScalingObservable::Hops,
        "distance" => ScalingObservable::Distance,
        other => bail!("observable: unknown `{other}` (expected hops or distance)"),
    };
    let sc = ScalingConfig {
        mean_degree: fill(&mut cfg.mean_degree, 3.0),
        weights,
        instances: fill(&mut cfg.instances, 100),
        sources: fill(&mut cfg.scaling_sources, 32),
        observable,
    };
    let sizes = fill(&mut cfg.sizes, vec![250, 500, 1000, 2000, 4000]);
    std::fs::create_dir_all(&output_dir).with_context(|| format!("creating {}", output_dir.display()))?;
    write_output(&output_dir, config::RESOLVED_CONFIG, &cfg.to_toml()?)?;
    with_workers(workers, || {
        let report = disorder_scaling(&sc, &sizes, master_seed)?;
        write_output(&output_dir, "scaling_report.txt", &report.to_text())?;
        let mut csv = String::from("nodes,mean,stderr,mean_giant\n");
        for p in &report.points {
            let e = p.value(observable);
            let se = e.stderr().map(|x| x.to_string()).unwrap_or_default();
            let _ = writeln!(csv, "{},{},{se},{}", p.nodes, e.mean, p.mean_giant);
        }
        write_output(&output_dir, "scaling.csv", &csv)?;
        let mut s = Summary::new();
        s.insert("log_residual".into(), json!(report.log_fit.residual));
        s.insert("cube_root_residual".into(), json!(report.cube_root_fit.residual));
        s.insert("residual_ratio".into(), json!(report.residual_ratio()));
        s.insert(
            "preferred".into(),
            json!(match report.preferred() {
                sirmap::analysis::ScalingModel::Logarithmic => "logarithmic",
                sirmap::analysis::ScalingModel::CubeRoot => "cube-root",
            }),
        );
        Ok(s)
    })
}

pub fn generate(cfg: &mut Config) -> Result<Summary> {
    let common = config::resolve_common(cfg)?;
    start(&common, cfg)?;
    let net = &common.net;
    let mut edges = String::new();
    for &(a, b) in net.edges() {
        let _ = writeln!(edges, "{} {}", net.label(a), net.label(b));
    }
    write_output(&common.output_dir, "graph.edges", &edges)?;
    let mut labels = Vec::new();
    net.write_label_map(&mut labels)?;
    write_output(&common.output_dir, "labels.txt", &String::from_utf8(labels)?)?;
    let mut s = Summary::new();
    s.insert("nodes".into(), json!(net.node_count()));
    s.insert("edges".into(), json!(net.edge_count()));
    s.insert("giant_component".into(), json!(net.giant_component().len()));
    Ok(s)
}
