//! Source detection from an observed snapshot and time-critical vaccination.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::ensemble::{Accumulator, Ensemble, EnsembleEstimate};
use crate::error::{Error, Result};
use crate::graph::{MappingKind, NodeId, ShortestPathEngine, StaticNetwork};
use crate::mapping::{state_at, Snapshot, State};
use crate::rng::{Purpose, RngStreamSpec, Stream};
use crate::sim::{discrete_step, exact_discrete_distribution, SimState};

/// Default Gaussian-kernel bandwidth.
pub const DEFAULT_BANDWIDTH: f64 = 0.125;

/// Fraction of nodes whose states agree.
pub fn similarity(a: &Snapshot, b: &Snapshot) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::SnapshotMismatch(format!(
            "snapshots cover {} and {} nodes",
            a.len(),
            b.len()
        )));
    }
    if a.observation_time != b.observation_time {
        return Err(Error::SnapshotMismatch(format!(
            "observation times differ: {} vs {}",
            a.observation_time, b.observation_time
        )));
    }
    if a.is_empty() {
        return Err(Error::SnapshotMismatch("snapshot is empty".into()));
    }
    let equal = a.states.iter().zip(&b.states).filter(|(x, y)| x == y).count();
    Ok(equal as f64 / a.len() as f64)
}

/// `exp(-(phi - 1)^2 / a^2)`.
#[inline]
pub fn kernel(phi: f64, bandwidth: f64) -> f64 {
    let x = (phi - 1.0) / bandwidth;
    (-x * x).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceMethod {
    Temporal,
    DirectMonteCarlo,
    Topological,
}

impl SourceMethod {
    pub fn name(self) -> &'static str {
        match self {
            Self::Temporal => "temporal",
            Self::DirectMonteCarlo => "direct-mc",
            Self::Topological => "topological",
        }
    }
}

/// Normalized source likelihoods; non-candidates score 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceScores {
    pub method: SourceMethod,
    pub scores: Vec<f64>,
    /// Unnormalized evidence (kernel mean, match count or `1/<d>`).
    pub raw: Vec<f64>,
    pub candidates: Vec<usize>,
    pub samples: usize,
}

impl SourceScores {
    fn from_raw(method: SourceMethod, raw: Vec<f64>, candidates: Vec<usize>, samples: usize) -> Option<Self> {
        let total: f64 = raw.iter().sum();
        if !(total > 0.0) {
            return None;
        }
        let scores = raw.iter().map(|r| r / total).collect();
        Some(Self {
            method,
            scores,
            raw,
            candidates,
            samples,
        })
    }

    pub fn argmax(&self) -> usize {
        let mut best = self.candidates[0];
        for &c in &self.candidates {
            if self.scores[c] > self.scores[best] {
                best = c;
            }
        }
        best
    }

    pub fn to_csv(&self, net: &StaticNetwork) -> String {
        let mut out = String::from("node,score,raw\n");
        for &c in &self.candidates {
            let _ = writeln!(out, "{},{},{}", net.labels()[c], self.scores[c], self.raw[c]);
        }
        out
    }
}

/// Candidate sources: nodes not susceptible in the snapshot.
pub fn candidates(observed: &Snapshot) -> Result<Vec<usize>> {
    let c = observed.affected();
    if c.is_empty() {
        Err(Error::NoInfected)
    } else {
        Ok(c)
    }
}

/// Per observed snapshot and candidate, the histogram over instances of the
/// number of nodes whose extracted state matches the observation. Kernel
/// scores for any bandwidth follow from it without resampling.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalEvidence {
    pub nodes: usize,
    pub samples: usize,
    pub candidates: Vec<Vec<usize>>,
    /// `histograms[o][c][k]`: instances in which candidate `c` of snapshot
    /// `o` reproduced exactly `k` node states.
    pub histograms: Vec<Vec<Vec<u64>>>,
}

struct Counts(Vec<u64>);

impl Accumulator for Counts {
    fn merge(&mut self, other: Self) {
        for (a, b) in self.0.iter_mut().zip(other.0) {
            *a += b;
        }
    }
}

/// Shares one set of `n` instances across all `observed` snapshots.
pub fn temporal_evidence(ensemble: &Ensemble, observed: &[Snapshot], n: usize) -> Result<TemporalEvidence> {
    if ensemble.spec.kind != MappingKind::Exact {
        return Err(Error::RequiresExactInstance);
    }
    let net = ensemble.net;
    let size = net.node_count();
    for o in observed {
        if o.len() != size {
            return Err(Error::SnapshotMismatch(format!(
                "snapshot covers {} nodes, network has {size}",
                o.len()
            )));
        }
    }
    let cands: Vec<Vec<usize>> = observed.iter().map(candidates).collect::<Result<_>>()?;
    let mut needed = vec![false; size];
    for c in cands.iter().flatten() {
        needed[*c] = true;
    }
    let sources: Vec<usize> = (0..size).filter(|&v| needed[v]).collect();
    // Flat layout: offset[o] + c_idx * (size + 1) + matches.
    let mut offsets = Vec::with_capacity(observed.len());
    let mut total = 0;
    for c in &cands {
        offsets.push(total);
        total += c.len() * (size + 1);
    }
    let counts = ensemble.fold(
        n,
        || Counts(vec![0; total]),
        |acc, inst| {
            let recovery = inst.recovery.as_deref().expect("exact instance carries recovery times");
            let mut engine = ShortestPathEngine::new();
            let mut d = Vec::with_capacity(size);
            for &s in &sources {
                engine.run(net, &inst.weights, s, &mut d, None);
                for (o, snap) in observed.iter().enumerate() {
                    let Ok(ci) = cands[o].binary_search(&s) else { continue };
                    let t = snap.observation_time;
                    let matches = (0..size).filter(|&v| state_at(d[v], recovery[v], t) == snap.states[v]).count();
                    acc.0[offsets[o] + ci * (size + 1) + matches] += 1;
                }
            }
        },
    );
    let histograms = cands
        .iter()
        .enumerate()
        .map(|(o, c)| {
            (0..c.len())
                .map(|ci| {
                    let start = offsets[o] + ci * (size + 1);
                    counts.0[start..start + size + 1].to_vec()
                })
                .collect()
        })
        .collect();
    Ok(TemporalEvidence {
        nodes: size,
        samples: n,
        candidates: cands,
        histograms,
    })
}

impl TemporalEvidence {
    /// Kernel score estimate for snapshot `o`; per-candidate standard
    /// errors of the kernel mean are returned alongside.
    pub fn scores(&self, o: usize, bandwidth: f64) -> Result<(SourceScores, Vec<f64>)> {
        if !(bandwidth > 0.0) {
            return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {bandwidth}")));
        }
        let weights: Vec<f64> = (0..=self.nodes)
            .map(|k| kernel(k as f64 / self.nodes as f64, bandwidth))
            .collect();
        let mut raw = vec![0.0; self.nodes];
        let mut stderr = vec![0.0; self.nodes];
        for (ci, &c) in self.candidates[o].iter().enumerate() {
            let mut e = EnsembleEstimate::default();
            let hist = &self.histograms[o][ci];
            // Merge one constant block per histogram bin.
            for (k, &count) in hist.iter().enumerate() {
                if count > 0 {
                    e.merge(&EnsembleEstimate {
                        n: count,
                        mean: weights[k],
                        m2: 0.0,
                    });
                }
            }
            raw[c] = e.mean;
            stderr[c] = e.stderr().unwrap_or(0.0);
        }
        let total: f64 = raw.iter().sum();
        let s = SourceScores::from_raw(SourceMethod::Temporal, raw, self.candidates[o].clone(), self.samples)
            .ok_or(Error::ZeroKernelMass { bandwidth })?;
        let stderr = stderr.iter().map(|x| x / total).collect();
        Ok((s, stderr))
    }
}

/// Kernel-based source likelihoods from `n` ensemble instances.
pub fn source_detect_temporal(ensemble: &Ensemble, observed: &Snapshot, n: usize, bandwidth: f64) -> Result<SourceScores> {
    let ev = temporal_evidence(ensemble, std::slice::from_ref(observed), n)?;
    Ok(ev.scores(0, bandwidth)?.0)
}

/// Integer observation time of a discrete-time snapshot.
fn discrete_time(observed: &Snapshot) -> Result<usize> {
    let t = observed.observation_time;
    if t >= 0.0 && t.fract() == 0.0 && t.is_finite() {
        Ok(t as usize)
    } else {
        Err(Error::InvalidParameter(format!(
            "discrete-time method needs an integer observation time, got {t}"
        )))
    }
}

/// How the direct Monte Carlo method estimates `P(snapshot | source)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectMcMode {
    /// Fraction of unconstrained simulations reproducing the snapshot.
    ExactMatch,
    /// Simulations constrained to stay compatible with the snapshot
    /// (observed-S nodes never infected, observed-I nodes never recovered),
    /// weighted by the probability of the constraints, with the last step
    /// evaluated exactly. Unbiased for the same probability.
    Conditioned,
}

/// One constrained trajectory; returns its likelihood weight.
fn conditioned_trial(
    net: &StaticNetwork,
    beta: f64,
    gamma: f64,
    observed: &[State],
    source: usize,
    steps: usize,
    stream: &mut Stream,
) -> f64 {
    let n = observed.len();
    let mut cur = vec![State::S; n];
    cur[source] = State::I;
    if steps == 0 {
        return if cur == observed { 1.0 } else { 0.0 };
    }
    let mut pressure = vec![0u32; n];
    let mut next = cur.clone();
    let mut w = 1.0;
    for step in 0..steps {
        let last = step + 1 == steps;
        pressure.fill(0);
        for v in 0..n {
            if cur[v] == State::I {
                for u in net.neighbors(v) {
                    pressure[u] += 1;
                }
            }
        }
        for v in 0..n {
            let obs = observed[v];
            next[v] = match cur[v] {
                State::R => {
                    if last && obs != State::R {
                        return 0.0;
                    }
                    State::R
                }
                State::I => match (obs, last) {
                    (State::S, _) => return 0.0,
                    (State::I, _) => {
                        w *= 1.0 - gamma;
                        State::I
                    }
                    (State::R, true) => {
                        w *= gamma;
                        State::R
                    }
                    (State::R, false) => {
                        if stream.bernoulli(gamma) {
                            State::R
                        } else {
                            State::I
                        }
                    }
                },
                State::S => {
                    let stay = (1.0 - beta).powi(pressure[v] as i32);
                    match (obs, last) {
                        (State::S, _) => {
                            w *= stay;
                            State::S
                        }
                        (State::I, true) => {
                            w *= 1.0 - stay;
                            State::I
                        }
                        (State::R, true) => return 0.0,
                        (_, false) => {
                            if stream.bernoulli(1.0 - stay) {
                                State::I
                            } else {
                                State::S
                            }
                        }
                    }
                }
            };
        }
        if w == 0.0 {
            return 0.0;
        }
        std::mem::swap(&mut cur, &mut next);
    }
    w
}

/// Per-candidate estimates of `n_per_candidate * P(snapshot | candidate)`
/// from discrete-time simulations (match counts for
/// [`DirectMcMode::ExactMatch`]).
pub fn direct_mc_counts(
    net: &StaticNetwork,
    beta: f64,
    gamma: f64,
    observed: &Snapshot,
    n_per_candidate: usize,
    mode: DirectMcMode,
    streams: &RngStreamSpec,
) -> Result<(Vec<usize>, Vec<f64>)> {
    let steps = discrete_time(observed)?;
    let cands = candidates(observed)?;
    let size = net.node_count();
    if observed.len() != size {
        return Err(Error::SnapshotMismatch(format!(
            "snapshot covers {} nodes, network has {size}",
            observed.len()
        )));
    }
    let susceptible: Vec<usize> = (0..size).filter(|&v| observed.states[v] == State::S).collect();
    let counts: Vec<f64> = cands
        .par_iter()
        .map(|&c| {
            let mut state = SimState::new(size, &[c]);
            let mut total = 0.0;
            for trial in 0..n_per_candidate {
                let mut stream = streams.stream(Purpose::SourceDetection, trial as u64, c as u64);
                if mode == DirectMcMode::Conditioned {
                    total += conditioned_trial(net, beta, gamma, &observed.states, c, steps, &mut stream);
                    continue;
                }
                state.reset(&[c]);
                let mut alive = true;
                for _ in 0..steps {
                    discrete_step(&mut state, net, beta, gamma, &mut stream);
                    // Infection is irreversible: reaching an observed-S node rules the run out.
                    if susceptible.iter().any(|&v| state.states[v] != State::S) {
                        alive = false;
                        break;
                    }
                }
                if alive && state.states == observed.states {
                    total += 1.0;
                }
            }
            total
        })
        .collect();
    let mut raw = vec![0.0; size];
    for (&c, h) in cands.iter().zip(counts) {
        raw[c] = h;
    }
    Ok((cands, raw))
}

/// Source likelihoods proportional to direct Monte Carlo estimates of
/// `P(snapshot | candidate)`.
pub fn source_detect_direct_mc(
    net: &StaticNetwork,
    beta: f64,
    gamma: f64,
    observed: &Snapshot,
    n_per_candidate: usize,
    mode: DirectMcMode,
    streams: &RngStreamSpec,
) -> Result<SourceScores> {
    let (cands, raw) = direct_mc_counts(net, beta, gamma, observed, n_per_candidate, mode, streams)?;
    SourceScores::from_raw(SourceMethod::DirectMonteCarlo, raw, cands, n_per_candidate).ok_or(Error::NoMatches {
        per_candidate: n_per_candidate,
    })
}

/// Scores proportional to the inverse mean hop distance from each candidate
/// to the other affected nodes. Candidates that cannot reach every affected
/// node score 0.
pub fn source_detect_topological(net: &StaticNetwork, observed: &Snapshot) -> Result<SourceScores> {
    let cands = candidates(observed)?;
    if observed.len() != net.node_count() {
        return Err(Error::SnapshotMismatch("snapshot and network sizes differ".into()));
    }
    let mut raw = vec![0.0; net.node_count()];
    if cands.len() == 1 {
        raw[cands[0]] = 1.0;
    } else {
        for &c in &cands {
            let hops = net.hop_distances(c);
            let mut sum = 0usize;
            let mut reachable = true;
            for &v in &cands {
                if v != c {
                    if hops[v] == usize::MAX {
                        reachable = false;
                        break;
                    }
                    sum += hops[v];
                }
            }
            if reachable {
                raw[c] = (cands.len() - 1) as f64 / sum as f64;
            }
        }
    }
    SourceScores::from_raw(SourceMethod::Topological, raw, cands, 0).ok_or_else(|| {
        Error::InvalidParameter("no candidate reaches every affected node".into())
    })
}

/// Exact posterior over sources (uniform prior) of a discrete-time snapshot,
/// by enumerating the process on small networks.
pub fn exact_source_posterior(net: &StaticNetwork, beta: f64, gamma: f64, observed: &Snapshot) -> Result<Vec<f64>> {
    let steps = discrete_time(observed)?;
    let mut like = vec![0.0; net.node_count()];
    for (s, l) in like.iter_mut().enumerate() {
        let dist = exact_discrete_distribution(net, beta, gamma, &[s], steps)?;
        *l = dist.get(&observed.states).copied().unwrap_or(0.0);
    }
    let total: f64 = like.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidParameter("snapshot has zero probability under every source".into()));
    }
    Ok(like.into_iter().map(|l| l / total).collect())
}

/// Ranks with ties sharing their average rank (1-based). Values within
/// relative distance `tol` of the first value of a run count as tied.
fn average_ranks(x: &[f64], tol: f64) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let head = x[idx[i]];
        let mut j = i;
        while j + 1 < idx.len() && (x[idx[j + 1]] - head).abs() <= tol * head.abs().max(x[idx[j + 1]].abs()) {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation; `None` if either input is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    spearman_with_tolerance(a, b, 0.0)
}

/// Spearman rank correlation treating values within relative distance
/// `tol` as tied (for inputs that are exact up to rounding).
pub fn spearman_with_tolerance(a: &[f64], b: &[f64], tol: f64) -> Option<f64> {
    assert_eq!(a.len(), b.len());
    let (ra, rb) = (average_ranks(a, tol), average_ranks(b, tol));
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        None
    } else {
        Some(sab / (saa * sbb).sqrt())
    }
}

/// Largest network accepted by [`symmetrize_scores`].
pub const SYMMETRIZE_MAX_NODES: usize = 8;

/// Averages per-node `values` over every node permutation that preserves
/// both the network and the snapshot states. The exact source likelihood is
/// invariant under such permutations, so this only removes sampling noise.
pub fn symmetrize_scores(net: &StaticNetwork, observed: &Snapshot, values: &[f64]) -> Result<Vec<f64>> {
    let n = net.node_count();
    if n > SYMMETRIZE_MAX_NODES {
        return Err(Error::InvalidParameter(format!(
            "symmetrization enumerates permutations; limited to {SYMMETRIZE_MAX_NODES} nodes"
        )));
    }
    let mut adj = vec![false; n * n];
    for &(a, b) in net.edges() {
        adj[a.index() * n + b.index()] = true;
        if !net.is_directed() {
            adj[b.index() * n + a.index()] = true;
        }
    }
    let mut sum = vec![0.0; n];
    let mut count = 0usize;
    let mut perm: Vec<usize> = (0..n).collect();
    // Heap's algorithm over all permutations.
    let mut c = vec![0usize; n];
    let mut visit = |p: &[usize]| {
        let preserves = (0..n).all(|v| observed.states[p[v]] == observed.states[v])
            && (0..n).all(|u| (0..n).all(|v| adj[p[u] * n + p[v]] == adj[u * n + v]));
        if preserves {
            for v in 0..n {
                sum[v] += values[p[v]];
            }
            count += 1;
        }
    };
    visit(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            visit(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(sum.into_iter().map(|s| s / count as f64).collect())
}

/// Discrete-time source-detection benchmark settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluationConfig {
    pub beta: f64,
    pub gamma: f64,
    pub time: usize,
    pub source: NodeId,
    pub realizations: usize,
    pub temporal_samples: usize,
    pub direct_samples: usize,
    pub direct_mode: DirectMcMode,
}

/// Score curves by rank, averaged over observed realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceEvaluation {
    pub bandwidth: f64,
    pub methods: Vec<SourceMethod>,
    /// `mean[m][r]`: mean score method `m` gives the node at rank `r`.
    pub mean: Vec<Vec<f64>>,
    pub std: Vec<Vec<f64>>,
    /// Per realization, Spearman correlation of temporal and direct-MC
    /// scores over candidates (`None` when undefined).
    pub spearman: Vec<Option<f64>>,
    /// Realizations in which the direct-MC estimate was zero for every
    /// candidate.
    pub unmatched: usize,
}

impl SourceEvaluation {
    /// Running sums of the mean curve of method `m`.
    pub fn cumulative(&self, m: usize) -> Vec<f64> {
        self.mean[m]
            .iter()
            .scan(0.0, |acc, x| {
                *acc += x;
                Some(*acc)
            })
            .collect()
    }

    /// Mean of the defined per-realization Spearman correlations.
    pub fn mean_spearman(&self) -> Option<f64> {
        let defined: Vec<f64> = self.spearman.iter().flatten().copied().collect();
        (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank");
        for m in &self.methods {
            let _ = write!(out, ",{0}_mean,{0}_std", m.name());
        }
        out.push('\n');
        for r in 0..self.mean[0].len() {
            let _ = write!(out, "{}", r + 1);
            for m in 0..self.methods.len() {
                let _ = write!(out, ",{},{}", self.mean[m][r], self.std[m][r]);
            }
            out.push('\n');
        }
        out
    }
}

/// Observed snapshots simulated from `config.source`.
pub fn evaluation_snapshots(net: &StaticNetwork, config: &EvaluationConfig, master_seed: u64) -> Vec<Snapshot> {
    let streams = RngStreamSpec::new(master_seed);
    (0..config.realizations)
        .map(|r| {
            let mut state = SimState::new(net.node_count(), &[config.source.index()]);
            let mut stream = streams.stream(Purpose::Evaluation, r as u64, 0);
            for _ in 0..config.time {
                discrete_step(&mut state, net, config.beta, config.gamma, &mut stream);
            }
            Snapshot {
                states: state.states,
                observation_time: config.time as f64,
                source: Some(config.source),
            }
        })
        .collect()
}

/// Generates observed snapshots from `config.source`, scores them with all
/// three methods and averages the score-by-rank curves, once per bandwidth.
/// Nodes are ranked by direct-MC score, ties broken by temporal score, then
/// by index.
pub fn evaluate_source_detection(
    ensemble: &Ensemble,
    config: &EvaluationConfig,
    bandwidths: &[f64],
    master_seed: u64,
) -> Result<Vec<SourceEvaluation>> {
    let net = ensemble.net;
    let size = net.node_count();
    let observed = evaluation_snapshots(net, config, master_seed);
    let evidence = temporal_evidence(ensemble, &observed, config.temporal_samples)?;
    let mut direct = Vec::with_capacity(observed.len());
    let mut topo = Vec::with_capacity(observed.len());
    let mut unmatched = 0;
    for (o, snap) in observed.iter().enumerate() {
        topo.push(source_detect_topological(net, snap)?);
        let streams = RngStreamSpec::new(master_seed).stream(Purpose::SourceDetection, o as u64, u64::MAX);
        let seed = rand::RngCore::next_u64(&mut { streams });
        match source_detect_direct_mc(
            net,
            config.beta,
            config.gamma,
            snap,
            config.direct_samples,
            config.direct_mode,
            &RngStreamSpec::new(seed),
        ) {
            Ok(s) => direct.push(Some(s)),
            Err(Error::NoMatches { .. }) => {
                unmatched += 1;
                direct.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    let methods = vec![SourceMethod::DirectMonteCarlo, SourceMethod::Temporal, SourceMethod::Topological];
    bandwidths
        .iter()
        .map(|&a| {
            let mut curves = vec![vec![EnsembleEstimate::default(); size]; methods.len()];
            let mut rho = Vec::with_capacity(observed.len());
            for o in 0..observed.len() {
                let (temporal, _) = evidence.scores(o, a)?;
                let direct_scores = direct[o].as_ref().map(|d| d.scores.clone()).unwrap_or_else(|| vec![0.0; size]);
                let mut order: Vec<usize> = (0..size).collect();
                order.sort_by(|&x, &y| {
                    direct_scores[y]
                        .total_cmp(&direct_scores[x])
                        .then(temporal.scores[y].total_cmp(&temporal.scores[x]))
                        .then(x.cmp(&y))
                });
                for (r, &v) in order.iter().enumerate() {
                    curves[0][r].push(direct_scores[v]);
                    curves[1][r].push(temporal.scores[v]);
                    curves[2][r].push(topo[o].scores[v]);
                }
                rho.push(direct[o].as_ref().and_then(|d| {
                    let x: Vec<f64> = d.candidates.iter().map(|&c| temporal.scores[c]).collect();
                    let y: Vec<f64> = d.candidates.iter().map(|&c| d.scores[c]).collect();
                    spearman(&x, &y)
                }));
            }
            Ok(SourceEvaluation {
                bandwidth: a,
                mean: curves.iter().map(|c| c.iter().map(|e| e.mean).collect()).collect(),
                std: curves
                    .iter()
                    .map(|c| c.iter().map(|e| e.variance().unwrap_or(0.0).sqrt()).collect())
                    .collect(),
                methods: methods.clone(),
                spearman: rho,
                unmatched,
            })
        })
        .collect()
}

/// Probability that each node is not infected before `t0 + delta_t`:
/// the fraction of instances with `d(source, i) >= t0 + delta_t`.
pub fn vaccination_survival(ensemble: &Ensemble, source: NodeId, t0: f64, delta_t: f64, n: usize) -> Result<Vec<f64>> {
    if !(t0 >= 0.0 && delta_t >= 0.0) {
        return Err(Error::InvalidParameter("t0 and delta_t must be non-negative".into()));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    let net = ensemble.net;
    let size = net.node_count();
    let horizon = t0 + delta_t;
    let counts = ensemble.fold(
        n,
        || Counts(vec![0; size]),
        |acc, inst| {
            let mut d = Vec::new();
            ShortestPathEngine::new().run(net, &inst.weights, source.index(), &mut d, None);
            for (c, &x) in acc.0.iter_mut().zip(&d) {
                if x >= horizon {
                    *c += 1;
                }
            }
        },
    );
    Ok(counts.0.into_iter().map(|c| c as f64 / n as f64).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VaccinationStrategy {
    /// Sampled proportional to the survival probability.
    Temporal,
    /// The `m` susceptible nodes with the highest survival probability.
    TemporalTop,
    /// Uniform among susceptible nodes.
    Random,
    /// Proportional to degree among susceptible nodes.
    Hubs,
}

impl VaccinationStrategy {
    pub fn name(self) -> &'static str {
        match self {
            Self::Temporal => "temporal",
            Self::TemporalTop => "temporal-top",
            Self::Random => "random",
            Self::Hubs => "hubs",
        }
    }

    fn index(self) -> u64 {
        match self {
            Self::Temporal => 0,
            Self::TemporalTop => 1,
            Self::Random => 2,
            Self::Hubs => 3,
        }
    }
}

impl std::str::FromStr for VaccinationStrategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "temporal" => Ok(Self::Temporal),
            "temporal-top" => Ok(Self::TemporalTop),
            "random" => Ok(Self::Random),
            "hubs" => Ok(Self::Hubs),
            other => Err(format!(
                "unknown strategy `{other}` (expected temporal, temporal-top, random or hubs)"
            )),
        }
    }
}

/// Discrete-time vaccination scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VaccinationConfig {
    pub beta: f64,
    pub gamma: f64,
    pub source: NodeId,
    pub t0: usize,
    pub delta_t: usize,
    pub doses: usize,
    pub trials: usize,
    /// Last time point of the reported curve.
    pub horizon: usize,
    /// Use the same dynamics stream per trial for every strategy.
    pub common_random_numbers: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VaccinationOutcome {
    pub strategy: VaccinationStrategy,
    /// Mean cumulative infected at `t = 0..=horizon`.
    pub curve: Vec<EnsembleEstimate>,
    /// Cumulative infected at extinction, per trial.
    pub final_infected: Vec<f64>,
}

/// Upper bound on steps when running a trial to extinction.
const MAX_STEPS: usize = 1_000_000;

/// Chooses `m` of `pool` without replacement with probability proportional
/// to `weight` (exponential-key method). Zero-weight nodes fill remaining
/// places uniformly.
fn weighted_sample(pool: &[usize], weight: impl Fn(usize) -> f64, m: usize, stream: &mut Stream) -> Vec<usize> {
    let mut keyed: Vec<(f64, f64, usize)> = pool
        .iter()
        .map(|&v| {
            let u = stream.uniform_open0();
            let w = weight(v);
            let key = if w > 0.0 { u.ln() / w } else { f64::NEG_INFINITY };
            (key, u, v)
        })
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)).then(a.2.cmp(&b.2)));
    keyed.into_iter().take(m).map(|(_, _, v)| v).collect()
}

fn choose_vaccinees(
    net: &StaticNetwork,
    strategy: VaccinationStrategy,
    susceptible: &[usize],
    p_tilde: &[f64],
    m: usize,
    stream: &mut Stream,
) -> Vec<usize> {
    match strategy {
        VaccinationStrategy::Temporal => weighted_sample(susceptible, |v| p_tilde[v], m, stream),
        VaccinationStrategy::TemporalTop => {
            let mut pool = susceptible.to_vec();
            pool.sort_by(|&a, &b| p_tilde[b].total_cmp(&p_tilde[a]).then(a.cmp(&b)));
            pool.truncate(m);
            pool
        }
        VaccinationStrategy::Random => weighted_sample(susceptible, |_| 1.0, m, stream),
        VaccinationStrategy::Hubs => weighted_sample(susceptible, |v| net.degree(v) as f64, m, stream),
    }
}

/// Runs `trials` discrete-time epidemics from `config.source`; at `t0`
/// `doses` susceptible nodes are vaccinated, effective from
/// `t0 + delta_t`. A vaccinee infected earlier is an ordinary case.
pub fn vaccination_run(
    net: &StaticNetwork,
    config: &VaccinationConfig,
    strategy: VaccinationStrategy,
    p_tilde: &[f64],
    master_seed: u64,
) -> Result<VaccinationOutcome> {
    let size = net.node_count();
    if p_tilde.len() != size {
        return Err(Error::InvalidParameter("survival vector length differs from node count".into()));
    }
    if config.source.index() >= size {
        return Err(Error::InvalidParameter(format!("source {} out of range", config.source)));
    }
    let streams = RngStreamSpec::new(master_seed);
    let effective = (config.t0 + config.delta_t) as f64;
    let results: Vec<Result<(Vec<usize>, usize)>> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let dynamics_entity = if config.common_random_numbers { 0 } else { 1 + strategy.index() };
            let mut dyn_stream = streams.stream(Purpose::Vaccination, trial as u64, dynamics_entity);
            let mut pick_stream = streams.stream(Purpose::Vaccination, trial as u64, 100 + strategy.index());
            let mut state = SimState::new(size, &[config.source.index()]);
            let mut curve = Vec::with_capacity(config.horizon + 1);
            curve.push(state.cumulative_infected());
            let mut t = 0;
            loop {
                if t == config.t0 {
                    let susceptible: Vec<usize> = (0..size).filter(|&v| state.states[v] == State::S).collect();
                    if config.doses > susceptible.len() {
                        return Err(Error::InvalidParameter(format!(
                            "{} doses but only {} susceptible nodes at t0 = {}",
                            config.doses,
                            susceptible.len(),
                            config.t0
                        )));
                    }
                    for v in choose_vaccinees(net, strategy, &susceptible, p_tilde, config.doses, &mut pick_stream) {
                        state.protect(v, effective);
                    }
                }
                if t >= config.horizon && (state.is_extinct() || t >= MAX_STEPS) && t >= config.t0 {
                    break;
                }
                discrete_step(&mut state, net, config.beta, config.gamma, &mut dyn_stream);
                t += 1;
                if t <= config.horizon {
                    curve.push(state.cumulative_infected());
                }
            }
            Ok((curve, state.cumulative_infected()))
        })
        .collect();
    let mut curve = vec![EnsembleEstimate::default(); config.horizon + 1];
    let mut final_infected = Vec::with_capacity(config.trials);
    for r in results {
        let (c, f) = r?;
        for (e, x) in curve.iter_mut().zip(c) {
            e.push(x as f64);
        }
        final_infected.push(f as f64);
    }
    Ok(VaccinationOutcome {
        strategy,
        curve,
        final_infected,
    })
}

/// Mean and standard error of `a[i] - b[i]` over paired trials.
pub fn paired_difference(a: &[f64], b: &[f64]) -> EnsembleEstimate {
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    EnsembleEstimate::from_values(&diffs)
}

/// One column pair (`mean`, `stderr`) per strategy.
pub fn vaccination_csv(outcomes: &[VaccinationOutcome]) -> String {
    let mut out = String::from("t");
    for o in outcomes {
        let _ = write!(out, ",{0}_mean,{0}_stderr", o.strategy.name());
    }
    out.push('\n');
    let len = outcomes.first().map_or(0, |o| o.curve.len());
    for t in 0..len {
        let _ = write!(out, "{t}");
        for o in outcomes {
            let e = &o.curve[t];
            let se = e.stderr().map(|s| s.to_string()).unwrap_or_default();
            let _ = write!(out, ",{},{}", e.mean, se);
        }
        out.push('\n');
    }
    out
}
