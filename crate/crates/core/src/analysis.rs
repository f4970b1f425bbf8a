//! Ensemble-level analysis: expected propagation times, characteristic
//! spreading timescales, outbreak curves and distance scaling with size.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::ensemble::{Ensemble, EnsembleEstimate};
use crate::error::{Error, Result};
use crate::graph::{
    generate_graph, reachable_count, GraphKind, MappingKind, NodeId, ShortestPathEngine, StaticNetwork,
};
use crate::inter_event::InterEventDistribution;
use crate::mapping::{sample_instance, MappingSpec};
use crate::rng::{Purpose, RngStreamSpec};

/// Mean pairwise propagation times over an ensemble.
///
/// Entry `(i, j)` averages `d(i, j)` over instances where it is finite; the
/// reach probability is the fraction of such instances. In unconditional
/// mode an entry that was infinite in any instance is reported as `inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationTimeMatrix {
    pub n: usize,
    pub samples: usize,
    pub conditional: bool,
    pub entries: Vec<EnsembleEstimate>,
}

impl PropagationTimeMatrix {
    /// Matrix with given means and every entry finite in all `samples`.
    pub fn from_means(n: usize, means: &[f64], samples: usize) -> Self {
        assert_eq!(means.len(), n * n);
        let entries = means
            .iter()
            .map(|&m| {
                if m.is_finite() {
                    EnsembleEstimate {
                        n: samples as u64,
                        mean: m,
                        m2: 0.0,
                    }
                } else {
                    EnsembleEstimate::default()
                }
            })
            .collect();
        Self {
            n,
            samples,
            conditional: false,
            entries,
        }
    }

    pub fn mean(&self, i: usize, j: usize) -> f64 {
        let e = &self.entries[i * self.n + j];
        if e.n == 0 || (!self.conditional && (e.n as usize) < self.samples) {
            f64::INFINITY
        } else {
            e.mean
        }
    }

    pub fn stderr(&self, i: usize, j: usize) -> Option<f64> {
        self.entries[i * self.n + j].stderr()
    }

    pub fn finite_count(&self, i: usize, j: usize) -> u64 {
        self.entries[i * self.n + j].n
    }

    pub fn reach_probability(&self, i: usize, j: usize) -> f64 {
        self.finite_count(i, j) as f64 / self.samples as f64
    }

    /// Rows and columns in `order`, with a label header row.
    pub fn to_csv(&self, net: &StaticNetwork, order: &[usize]) -> String {
        let mut out = String::from("node");
        for &j in order {
            let _ = write!(out, ",{}", net.labels()[j]);
        }
        out.push('\n');
        for &i in order {
            out.push_str(&net.labels()[i]);
            for &j in order {
                let _ = write!(out, ",{}", self.mean(i, j));
            }
            out.push('\n');
        }
        out
    }

    /// Reach probabilities, same layout as [`Self::to_csv`].
    pub fn reach_csv(&self, net: &StaticNetwork, order: &[usize]) -> String {
        let mut out = String::from("node");
        for &j in order {
            let _ = write!(out, ",{}", net.labels()[j]);
        }
        out.push('\n');
        for &i in order {
            out.push_str(&net.labels()[i]);
            for &j in order {
                let _ = write!(out, ",{}", self.reach_probability(i, j));
            }
            out.push('\n');
        }
        out
    }
}

/// Expected propagation time between all node pairs.
///
/// With recovery (`phi` present) the unconditional mean is infinite, so
/// `conditional` must be set; it averages only finite distances.
pub fn propagation_matrix(ensemble: &Ensemble, n: usize, conditional: bool) -> Result<PropagationTimeMatrix> {
    if !ensemble.spec.is_si() && !conditional {
        return Err(Error::DivergentExpectation);
    }
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    let net = ensemble.net;
    let size = net.node_count();
    let entries = ensemble.fold(
        n,
        || vec![EnsembleEstimate::default(); size * size],
        |acc, inst| {
            let mut engine = ShortestPathEngine::new();
            let mut row = Vec::with_capacity(size);
            for s in 0..size {
                engine.run(net, &inst.weights, s, &mut row, None);
                for (j, &d) in row.iter().enumerate() {
                    if d.is_finite() {
                        acc[s * size + j].push(d);
                    }
                }
            }
        },
    );
    Ok(PropagationTimeMatrix {
        n: size,
        samples: n,
        conditional,
        entries,
    })
}

/// Per-node characteristic spreading timescale and the ascending ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct TimescaleRanking {
    pub tau: Vec<f64>,
    pub n_bar: usize,
    /// Nodes sorted by `tau`, ties by index.
    pub ordering: Vec<usize>,
    /// Per node, the number of finite off-diagonal entries in its row.
    pub finite: Vec<usize>,
}

impl TimescaleRanking {
    pub fn to_csv(&self, net: &StaticNetwork) -> String {
        let mut out = String::from("rank,node,tau,finite_entries\n");
        for (rank, &v) in self.ordering.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{}", rank + 1, net.labels()[v], self.tau[v], self.finite[v]);
        }
        out
    }
}

/// `tau_i` is the earliest `t` at which `n_bar` other nodes have
/// `D_ij <= t`: the `n_bar`-th smallest off-diagonal entry of row `i`, or
/// `inf` when the row has fewer finite entries.
pub fn characteristic_timescale(d: &PropagationTimeMatrix, n_bar: usize) -> Result<TimescaleRanking> {
    let n = d.n;
    if n_bar < 1 || n_bar + 1 > n {
        return Err(Error::InvalidParameter(format!(
            "N_bar = {n_bar} outside [1, {}]",
            n.saturating_sub(1)
        )));
    }
    let mut tau = Vec::with_capacity(n);
    let mut finite = Vec::with_capacity(n);
    let mut row = Vec::with_capacity(n);
    for i in 0..n {
        row.clear();
        row.extend((0..n).filter(|&j| j != i).map(|j| d.mean(i, j)).filter(|x| x.is_finite()));
        finite.push(row.len());
        if row.len() < n_bar {
            tau.push(f64::INFINITY);
        } else {
            row.sort_by(f64::total_cmp);
            tau.push(row[n_bar - 1]);
        }
    }
    let mut ordering: Vec<usize> = (0..n).collect();
    ordering.sort_by(|&a, &b| tau[a].total_cmp(&tau[b]).then(a.cmp(&b)));
    Ok(TimescaleRanking {
        tau,
        n_bar,
        ordering,
        finite,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub t: f64,
    pub mean: f64,
    pub stderr: Option<f64>,
}

/// Mean number of nodes reached from `source` by each time in `grid`.
pub fn outbreak_curve(ensemble: &Ensemble, source: NodeId, n: usize, grid: &[f64]) -> Result<Vec<CurvePoint>> {
    if grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidParameter("time grid must be ascending".into()));
    }
    if source.index() >= ensemble.net.node_count() {
        return Err(Error::InvalidParameter(format!("source {source} out of range")));
    }
    let net = ensemble.net;
    let est = ensemble.fold(
        n,
        || vec![EnsembleEstimate::default(); grid.len()],
        |acc, inst| {
            let mut d = Vec::new();
            ShortestPathEngine::new().run(net, &inst.weights, source.index(), &mut d, None);
            for (e, &t) in acc.iter_mut().zip(grid) {
                e.push(reachable_count(&d, t) as f64);
            }
        },
    );
    Ok(grid
        .iter()
        .zip(est)
        .map(|(&t, e)| CurvePoint {
            t,
            mean: e.mean,
            stderr: e.stderr(),
        })
        .collect())
}

pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("t,mean,stderr\n");
    for p in points {
        let se = p.stderr.map(|s| s.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{}", p.t, p.mean, se);
    }
    out
}

/// Least-squares fit `y = a f(N)` through the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    pub a: f64,
    pub residual: f64,
}

fn fit_through_origin(x: &[f64], y: &[f64]) -> ScalingFit {
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let a = sxy / sxx;
    let residual = x.iter().zip(y).map(|(xi, yi)| (yi - a * xi).powi(2)).sum();
    ScalingFit { a, residual }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingModel {
    Logarithmic,
    CubeRoot,
}

/// Quantity whose growth with `N` is fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingObservable {
    /// Weighted shortest-path distance.
    Distance,
    /// Number of links on the weighted shortest path.
    Hops,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingPoint {
    pub nodes: usize,
    pub mean_distance: EnsembleEstimate,
    pub mean_hops: EnsembleEstimate,
    pub mean_giant: f64,
}

impl ScalingPoint {
    pub fn value(&self, observable: ScalingObservable) -> &EnsembleEstimate {
        match observable {
            ScalingObservable::Distance => &self.mean_distance,
            ScalingObservable::Hops => &self.mean_hops,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub observable: ScalingObservable,
    pub points: Vec<ScalingPoint>,
    pub log_fit: ScalingFit,
    pub cube_root_fit: ScalingFit,
}

impl ScalingReport {
    pub fn preferred(&self) -> ScalingModel {
        if self.log_fit.residual <= self.cube_root_fit.residual {
            ScalingModel::Logarithmic
        } else {
            ScalingModel::CubeRoot
        }
    }

    /// `cube-root residual / log residual`; above 1 favours the log model.
    pub fn residual_ratio(&self) -> f64 {
        self.cube_root_fit.residual / self.log_fit.residual
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for p in &self.points {
            let _ = writeln!(
                out,
                "size.{} = {{ mean_distance = {}, distance_stderr = {}, mean_hops = {}, hops_stderr = {}, mean_giant = {} }}",
                p.nodes,
                p.mean_distance.mean,
                p.mean_distance.stderr().unwrap_or(f64::NAN),
                p.mean_hops.mean,
                p.mean_hops.stderr().unwrap_or(f64::NAN),
                p.mean_giant
            );
        }
        let observable = match self.observable {
            ScalingObservable::Distance => "distance",
            ScalingObservable::Hops => "hops",
        };
        let _ = writeln!(out, "observable = \"{observable}\"");
        let _ = writeln!(out, "log_fit.a = {}", self.log_fit.a);
        let _ = writeln!(out, "log_fit.residual = {}", self.log_fit.residual);
        let _ = writeln!(out, "cube_root_fit.a = {}", self.cube_root_fit.a);
        let _ = writeln!(out, "cube_root_fit.residual = {}", self.cube_root_fit.residual);
        let _ = writeln!(out, "residual_ratio = {}", self.residual_ratio());
        let model = match self.preferred() {
            ScalingModel::Logarithmic => "logarithmic",
            ScalingModel::CubeRoot => "cube-root",
        };
        let _ = writeln!(out, "preferred = \"{model}\"");
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingConfig {
    pub mean_degree: f64,
    pub weights: InterEventDistribution,
    /// Graph and weight realizations per size.
    pub instances: usize,
    /// Random sources per instance; distances go to every other node of
    /// the giant component.
    pub sources: usize,
    pub observable: ScalingObservable,
}

/// Mean shortest-path distance and hop count inside the giant component of
/// Erdős–Rényi graphs with i.i.d. edge weights, for each size, and fits of
/// `a ln N` and `a N^(1/3)` to the chosen observable.
pub fn disorder_scaling(config: &ScalingConfig, sizes: &[usize], master_seed: u64) -> Result<ScalingReport> {
    if sizes.len() < 3 {
        return Err(Error::InvalidParameter(
            "scaling fits need at least 3 system sizes".into(),
        ));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("sizes must be strictly ascending".into()));
    }
    if config.instances == 0 || config.sources == 0 {
        return Err(Error::InvalidParameter("instances and sources must be positive".into()));
    }
    config.weights.validate()?;
    let streams = RngStreamSpec::new(master_seed);
    let spec = MappingSpec::new(config.weights, None, MappingKind::MeanField);
    let mut points = Vec::with_capacity(sizes.len());
    for (si, &size) in sizes.iter().enumerate() {
        let per_instance: Vec<Result<(f64, f64, usize)>> = (0..config.instances)
            .into_par_iter()
            .map(|k| {
                let key = (si as u64) << 32 | k as u64;
                let mut stream = streams.stream(Purpose::Scaling, key, 0);
                let graph_seed = rand::RngCore::next_u64(&mut stream);
                let net = generate_graph(
                    GraphKind::ErdosRenyi {
                        nodes: size,
                        mean_degree: config.mean_degree,
                    },
                    graph_seed,
                )?;
                let giant = net.giant_component();
                if giant.len() < 2 || giant.len() * 10 < size {
                    return Err(Error::NoGiantComponent(format!(
                        "largest component has {} of {size} nodes at mean degree {}",
                        giant.len(),
                        config.mean_degree
                    )));
                }
                let inst = sample_instance(&net, &spec, &mut streams.stream(Purpose::Scaling, key, 1));
                let mut picker = streams.stream(Purpose::Scaling, key, 2);
                let mut engine = ShortestPathEngine::new();
                let mut d = Vec::new();
                let mut parent = Vec::new();
                let mut hops = vec![u32::MAX; size];
                let mut chain = Vec::new();
                let mut dist = EnsembleEstimate::default();
                let mut hop = EnsembleEstimate::default();
                let pairs = (giant.len() - 1) as f64;
                for _ in 0..config.sources {
                    let s = giant[picker.below(giant.len())];
                    engine.run(&net, &inst.weights, s, &mut d, Some(&mut parent));
                    hops.fill(u32::MAX);
                    hops[s] = 0;
                    for &v in &giant {
                        // Walk up the shortest-path tree to a node with a known depth.
                        let mut u = v;
                        while hops[u] == u32::MAX {
                            chain.push(u);
                            u = net.arc_source(parent[u]);
                        }
                        let mut h = hops[u];
                        while let Some(w) = chain.pop() {
                            h += 1;
                            hops[w] = h;
                        }
                    }
                    dist.push(giant.iter().map(|&v| d[v]).sum::<f64>() / pairs);
                    hop.push(giant.iter().map(|&v| hops[v] as f64).sum::<f64>() / pairs);
                }
                Ok((dist.mean, hop.mean, giant.len()))
            })
            .collect();
        let mut dist = EnsembleEstimate::default();
        let mut hops = EnsembleEstimate::default();
        let mut giant_total = 0usize;
        for r in per_instance {
            // One value per instance: sources within an instance are correlated.
            let (d, h, g) = r?;
            dist.push(d);
            hops.push(h);
            giant_total += g;
        }
        points.push(ScalingPoint {
            nodes: size,
            mean_distance: dist,
            mean_hops: hops,
            mean_giant: giant_total as f64 / config.instances as f64,
        });
    }
    let y: Vec<f64> = points.iter().map(|p| p.value(config.observable).mean).collect();
    let ln: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
    let cube: Vec<f64> = sizes.iter().map(|&n| (n as f64).cbrt()).collect();
    Ok(ScalingReport {
        observable: config.observable,
        log_fit: fit_through_origin(&ln, &y),
        cube_root_fit: fit_through_origin(&cube, &y),
        points,
    })
}
