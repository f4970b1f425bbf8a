//! Ensembles of weighted instances: independent sampling, the rejection-free
//! Gibbs chain, ensemble averages and incremental all-pairs maintenance.

use rayon::prelude::*;

use crate::graph::{
    DistanceMatrix, MappingKind, ShortestPathEngine, StaticNetwork, WeightedInstance, NO_PARENT,
};
use crate::mapping::{resample_edge, resample_node, sample_instance, MappingSpec};
use crate::rng::{Purpose, RngStreamSpec, Stream};

/// Samples per parallel work unit. Fixed so that results do not depend on
/// the worker count.
pub const BLOCK: usize = 64;

/// Streaming mean and variance (Welford), mergeable (Chan et al.).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnsembleEstimate {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl EnsembleEstimate {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Self) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * (self.n as f64) * (other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn variance(&self) -> Option<f64> {
        (self.n >= 2).then(|| self.m2 / (self.n - 1) as f64)
    }

    /// `sqrt(m2 / (n (n - 1)))`; `None` for fewer than two samples.
    pub fn stderr(&self) -> Option<f64> {
        (self.n >= 2).then(|| (self.m2 / (self.n as f64 * (self.n - 1) as f64)).sqrt())
    }

    pub fn from_values(values: &[f64]) -> Self {
        let mut e = Self::default();
        values.iter().for_each(|&x| e.push(x));
        e
    }
}

/// Batch-means estimate for autocorrelated chain output: the mean equals the
/// plain mean, the standard error is that of `batches` consecutive batch means.
pub fn batch_means(values: &[f64], batches: usize) -> EnsembleEstimate {
    let batches = batches.clamp(1, values.len().max(1));
    let size = values.len() / batches;
    if size == 0 {
        return EnsembleEstimate::from_values(values);
    }
    let means: Vec<f64> = values
        .chunks_exact(size)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let mut est = EnsembleEstimate::from_values(&means);
    est.mean = values.iter().sum::<f64>() / values.len() as f64;
    est
}

/// Accumulators merged across work units in a fixed order.
pub trait Accumulator: Send {
    fn merge(&mut self, other: Self);
}

impl Accumulator for EnsembleEstimate {
    fn merge(&mut self, other: Self) {
        EnsembleEstimate::merge(self, &other)
    }
}

impl Accumulator for Vec<EnsembleEstimate> {
    fn merge(&mut self, other: Self) {
        if self.is_empty() {
            *self = other;
            return;
        }
        for (a, b) in self.iter_mut().zip(&other) {
            a.merge(b);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerConfig {
    Independent,
    Gibbs {
        /// Defaults to `10 * E` steps.
        burn_in: Option<usize>,
        /// Defaults to `E` steps.
        thinning: Option<usize>,
        /// Independent chains whose samples are pooled.
        chains: usize,
    },
}

impl SamplerConfig {
    pub fn gibbs() -> Self {
        SamplerConfig::Gibbs {
            burn_in: None,
            thinning: None,
            chains: 1,
        }
    }
}

/// State of one Gibbs chain.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub current: WeightedInstance,
    pub step_count: u64,
    pub burn_in: usize,
    pub thinning: usize,
}

/// An arc whose weight changed in a chain step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcChange {
    pub arc: usize,
    pub old: f64,
    pub new: f64,
}

/// Resamples the recovery time and all outgoing arcs of one uniformly chosen
/// node.
pub fn gibbs_step_exact(
    state: &mut ChainState,
    net: &StaticNetwork,
    spec: &MappingSpec,
    stream: &mut Stream,
) -> Vec<ArcChange> {
    debug_assert_eq!(state.current.kind, MappingKind::Exact);
    let node = stream.below(net.node_count());
    let old: Vec<f64> = net.arcs(node).map(|a| state.current.weights[a]).collect();
    resample_node(net, spec, &mut state.current, node, stream);
    state.step_count += 1;
    net.arcs(node)
        .zip(old)
        .filter(|&(a, o)| state.current.weights[a] != o)
        .map(|(a, o)| ArcChange {
            arc: a,
            old: o,
            new: state.current.weights[a],
        })
        .collect()
}

/// Resamples the weight of one uniformly chosen edge (both arcs).
pub fn gibbs_step_meanfield(
    state: &mut ChainState,
    net: &StaticNetwork,
    edge_arcs: &[(usize, Option<usize>)],
    spec: &MappingSpec,
    stream: &mut Stream,
) -> Vec<ArcChange> {
    debug_assert_eq!(state.current.kind, MappingKind::MeanField);
    let mut changes = Vec::with_capacity(2);
    if edge_arcs.is_empty() {
        state.step_count += 1;
        return changes;
    }
    let _ = net;
    let (arc, rev) = edge_arcs[stream.below(edge_arcs.len())];
    let old = state.current.weights[arc];
    resample_edge(spec, &mut state.current, arc, rev, stream);
    state.step_count += 1;
    let new = state.current.weights[arc];
    if new != old {
        changes.push(ArcChange { arc, old, new });
        if let Some(r) = rev {
            changes.push(ArcChange { arc: r, old, new });
        }
    }
    changes
}

/// A Gibbs chain over instances of one network.
pub struct GibbsChain<'a> {
    net: &'a StaticNetwork,
    spec: MappingSpec,
    edge_arcs: Vec<(usize, Option<usize>)>,
    pub state: ChainState,
    stream: Stream,
}

impl<'a> GibbsChain<'a> {
    /// Starts from an independently sampled instance.
    pub fn new(
        net: &'a StaticNetwork,
        spec: MappingSpec,
        streams: &RngStreamSpec,
        chain: u64,
        burn_in: Option<usize>,
        thinning: Option<usize>,
    ) -> Self {
        let current = sample_instance(net, &spec, &mut streams.stream(Purpose::GibbsInit, chain, 0));
        let e = net.edge_count().max(1);
        Self {
            net,
            spec,
            edge_arcs: net.edge_arcs(),
            state: ChainState {
                current,
                step_count: 0,
                burn_in: burn_in.unwrap_or(10 * e),
                thinning: thinning.unwrap_or(e).max(1),
            },
            stream: streams.stream(Purpose::GibbsStep, chain, 0),
        }
    }

    pub fn step(&mut self) -> Vec<ArcChange> {
        match self.spec.kind {
            MappingKind::Exact => gibbs_step_exact(&mut self.state, self.net, &self.spec, &mut self.stream),
            MappingKind::MeanField => gibbs_step_meanfield(
                &mut self.state,
                self.net,
                &self.edge_arcs,
                &self.spec,
                &mut self.stream,
            ),
        }
    }

    pub fn burn_in(&mut self) {
        for _ in 0..self.state.burn_in {
            self.step();
        }
    }

    /// Advances by the thinning interval and returns the current instance.
    pub fn next_sample(&mut self) -> &WeightedInstance {
        for _ in 0..self.state.thinning {
            self.step();
        }
        &self.state.current
    }
}

/// A network, dynamics and sampler: the source of instances for estimates.
#[derive(Debug, Clone, Copy)]
pub struct Ensemble<'a> {
    pub net: &'a StaticNetwork,
    pub spec: MappingSpec,
    pub sampler: SamplerConfig,
    pub streams: RngStreamSpec,
}

impl<'a> Ensemble<'a> {
    pub fn new(net: &'a StaticNetwork, spec: MappingSpec, sampler: SamplerConfig, master_seed: u64) -> Self {
        Self {
            net,
            spec,
            sampler,
            streams: RngStreamSpec::new(master_seed),
        }
    }

    /// Independent instance number `k`.
    pub fn instance(&self, k: u64) -> WeightedInstance {
        sample_instance(self.net, &self.spec, &mut self.streams.stream(Purpose::Instance, k, 0))
    }

    /// Folds `n` instances into an accumulator. Work is split into fixed
    /// units (blocks of independent samples, or whole chains) that run in
    /// parallel and merge in unit order, so the result is independent of
    /// the number of worker threads.
    pub fn fold<A, I, F>(&self, n: usize, init: I, observe: F) -> A
    where
        A: Accumulator,
        I: Fn() -> A + Sync,
        F: Fn(&mut A, &WeightedInstance) + Sync,
    {
        let parts: Vec<A> = match self.sampler {
            SamplerConfig::Independent => {
                let blocks = n.div_ceil(BLOCK);
                (0..blocks)
                    .into_par_iter()
                    .map(|b| {
                        let mut acc = init();
                        for k in b * BLOCK..((b + 1) * BLOCK).min(n) {
                            let inst = self.instance(k as u64);
                            observe(&mut acc, &inst);
                        }
                        acc
                    })
                    .collect()
            }
            SamplerConfig::Gibbs {
                burn_in,
                thinning,
                chains,
            } => {
                let chains = chains.max(1);
                (0..chains)
                    .into_par_iter()
                    .map(|c| {
                        let count = n / chains + usize::from(c < n % chains);
                        let mut acc = init();
                        let mut chain =
                            GibbsChain::new(self.net, self.spec, &self.streams, c as u64, burn_in, thinning);
                        chain.burn_in();
                        for _ in 0..count {
                            let inst = chain.next_sample();
                            observe(&mut acc, inst);
                        }
                        acc
                    })
                    .collect()
            }
        };
        let mut parts = parts.into_iter();
        let mut total = parts.next().unwrap_or_else(&init);
        for p in parts {
            total.merge(p);
        }
        total
    }

    /// Ensemble average of a scalar observable.
    pub fn estimate<F>(&self, n: usize, f: F) -> EnsembleEstimate
    where
        F: Fn(&WeightedInstance) -> f64 + Sync,
    {
        self.fold(n, EnsembleEstimate::default, |acc, inst| acc.push(f(inst)))
    }

    /// Observable values in sample order (chain order for Gibbs sampling).
    pub fn values<F>(&self, n: usize, f: F) -> Vec<f64>
    where
        F: Fn(&WeightedInstance) -> f64 + Sync,
    {
        struct Values(Vec<f64>);
        impl Accumulator for Values {
            fn merge(&mut self, other: Self) {
                self.0.extend(other.0);
            }
        }
        self.fold(n, || Values(Vec::new()), |acc, inst| acc.0.push(f(inst))).0
    }
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// All-pairs distances together with each source's shortest-path tree.
#[derive(Debug, Clone)]
pub struct ApspState {
    pub dist: DistanceMatrix,
    /// Row-major parent arc per (source, node); [`NO_PARENT`] at the root.
    pub parent: Vec<usize>,
}

impl ApspState {
    pub fn compute(net: &StaticNetwork, inst: &WeightedInstance) -> Self {
        let n = net.node_count();
        let mut dist = DistanceMatrix {
            n,
            data: vec![f64::INFINITY; n * n],
        };
        let mut parent = vec![NO_PARENT; n * n];
        let mut engine = ShortestPathEngine::new();
        let (mut d, mut p) = (Vec::new(), Vec::new());
        for s in 0..n {
            engine.run(net, &inst.weights, s, &mut d, Some(&mut p));
            dist.row_mut(s).copy_from_slice(&d);
            parent[s * n..(s + 1) * n].copy_from_slice(&p);
        }
        Self { dist, parent }
    }
}

/// Updates `state` after the arc weights in `changed` were modified in
/// `inst`. A source row is recomputed when one of its tree arcs changed, or
/// when a changed arc now offers a strictly shorter route; all other rows
/// are provably unchanged. Returns the number of rows recomputed.
pub fn recompute_affected(
    state: &mut ApspState,
    changed: &[ArcChange],
    net: &StaticNetwork,
    inst: &WeightedInstance,
) -> usize {
    if changed.is_empty() {
        return 0;
    }
    let n = net.node_count();
    // Arc tails, needed to test the relaxation condition.
    let tails: Vec<(usize, usize, &ArcChange)> = changed
        .iter()
        .map(|c| {
            let tail = (0..n)
                .find(|&u| net.arcs(u).contains(&c.arc))
                .expect("arc belongs to the network");
            (tail, net.arc_target(c.arc), c)
        })
        .collect();
    let mut engine = ShortestPathEngine::new();
    let (mut d, mut p) = (Vec::new(), Vec::new());
    let mut recomputed = 0;
    for s in 0..n {
        let row = state.dist.row(s);
        let parents = &state.parent[s * n..(s + 1) * n];
        let stale = tails.iter().any(|&(u, v, c)| {
            parents[v] == c.arc || (c.new < c.old && row[u] + c.new < row[v])
        });
        if stale {
            engine.run(net, &inst.weights, s, &mut d, Some(&mut p));
            state.dist.row_mut(s).copy_from_slice(&d);
            state.parent[s * n..(s + 1) * n].copy_from_slice(&p);
            recomputed += 1;
        }
    }
    recomputed
}
