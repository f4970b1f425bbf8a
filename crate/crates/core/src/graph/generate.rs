use super::StaticNetwork;
use crate::error::{Error, Result};
use crate::rng::{Purpose, RngStreamSpec};

/// Synthetic network families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphKind {
    /// 4-connected `width x height` grid; node `(x, y)` has index `y * width + x`.
    Lattice { width: usize, height: usize },
    /// G(N, p) with `p = mean_degree / (N - 1)`.
    ErdosRenyi { nodes: usize, mean_degree: f64 },
    /// Source `0`, destination `1`, and `chains` disjoint paths of `length`
    /// intermediate nodes between them.
    ChainToy { chains: usize, length: usize },
    /// Preferential attachment, `m` links per new node.
    BarabasiAlbert { nodes: usize, m: usize },
}

pub fn generate_graph(kind: GraphKind, seed: u64) -> Result<StaticNetwork> {
    let streams = RngStreamSpec::new(seed);
    match kind {
        GraphKind::Lattice { width, height } => {
            if width == 0 || height == 0 {
                return Err(Error::InvalidParameter("lattice sides must be positive".into()));
            }
            let mut edges = Vec::with_capacity(2 * width * height);
            for y in 0..height {
                for x in 0..width {
                    let v = y * width + x;
                    if x + 1 < width {
                        edges.push((v, v + 1));
                    }
                    if y + 1 < height {
                        edges.push((v, v + width));
                    }
                }
            }
            StaticNetwork::from_edges(width * height, &edges, false)
        }
        GraphKind::ErdosRenyi { nodes, mean_degree } => {
            if nodes == 0 || !(mean_degree >= 0.0) || !mean_degree.is_finite() {
                return Err(Error::InvalidParameter(
                    "Erdős–Rényi needs N >= 1 and a finite non-negative mean degree".into(),
                ));
            }
            let p = if nodes > 1 {
                mean_degree / (nodes - 1) as f64
            } else {
                0.0
            };
            if p > 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "mean degree {mean_degree} exceeds N - 1"
                )));
            }
            let mut stream = streams.stream(Purpose::Graph, 0, 0);
            let mut edges = Vec::new();
            if p >= 1.0 {
                for v in 1..nodes {
                    for w in 0..v {
                        edges.push((v, w));
                    }
                }
            } else if p > 0.0 {
                // Geometric skipping over the lower triangle (Batagelj & Brandes).
                let log_q = (1.0 - p).ln();
                let mut v: usize = 1;
                let mut w: i64 = -1;
                while v < nodes {
                    let r = stream.uniform();
                    w += 1 + ((1.0 - r).ln() / log_q).floor() as i64;
                    while w >= v as i64 && v < nodes {
                        w -= v as i64;
                        v += 1;
                    }
                    if v < nodes {
                        edges.push((v, w as usize));
                    }
                }
            }
            StaticNetwork::from_edges(nodes, &edges, false)
        }
        GraphKind::ChainToy { chains, length } => {
            if chains == 0 || length == 0 {
                return Err(Error::InvalidParameter(
                    "chain toy needs at least one chain of at least one node".into(),
                ));
            }
            let n = 2 + chains * length;
            let mut edges = Vec::with_capacity(chains * (length + 1));
            for c in 0..chains {
                let first = 2 + c * length;
                edges.push((0, first));
                for k in 0..length - 1 {
                    edges.push((first + k, first + k + 1));
                }
                edges.push((first + length - 1, 1));
            }
            let mut labels: Vec<String> = vec!["s".into(), "d".into()];
            for c in 0..chains {
                for k in 0..length {
                    labels.push(format!("c{c}_{k}"));
                }
            }
            debug_assert_eq!(labels.len(), n);
            StaticNetwork::with_labels(labels, &edges, false)
        }
        GraphKind::BarabasiAlbert { nodes, m } => {
            if m == 0 || nodes <= m {
                return Err(Error::InvalidParameter(
                    "preferential attachment needs m >= 1 and N > m".into(),
                ));
            }
            let mut stream = streams.stream(Purpose::Graph, 0, 1);
            let mut edges = Vec::with_capacity(nodes * m);
            // Each node appears once per incident edge end.
            let mut ends: Vec<usize> = Vec::with_capacity(2 * nodes * m);
            for v in 0..=m {
                for w in 0..v {
                    edges.push((v, w));
                    ends.push(v);
                    ends.push(w);
                }
            }
            let mut chosen = Vec::with_capacity(m);
            for v in (m + 1)..nodes {
                chosen.clear();
                while chosen.len() < m {
                    let t = ends[stream.below(ends.len())];
                    if !chosen.contains(&t) {
                        chosen.push(t);
                    }
                }
                for &t in &chosen {
                    edges.push((v, t));
                    ends.push(v);
                    ends.push(t);
                }
            }
            StaticNetwork::from_edges(nodes, &edges, false)
        }
    }
}

/// Largest size accepted by [`connected_graphs`].
pub const ENUMERATE_MAX_NODES: usize = 6;

/// Every connected simple undirected graph on `1..=max_nodes` nodes, one
/// representative per isomorphism class, ordered by node count then by edge
/// bitmask over the lexicographic pair list.
pub fn connected_graphs(max_nodes: usize) -> Result<Vec<StaticNetwork>> {
    if max_nodes > ENUMERATE_MAX_NODES {
        return Err(Error::InvalidParameter(format!(
            "graph enumeration is limited to {ENUMERATE_MAX_NODES} nodes"
        )));
    }
    let mut out = Vec::new();
    for n in 1..=max_nodes {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        let perms = permutations(n);
        let mut seen = std::collections::HashSet::new();
        for mask in 0u32..(1 << pairs.len()) {
            let edges: Vec<(usize, usize)> = pairs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &e)| e)
                .collect();
            if edges.len() + 1 < n {
                continue;
            }
            let canon = perms
                .iter()
                .map(|p| {
                    let mut s: Vec<(usize, usize)> = edges
                        .iter()
                        .map(|&(a, b)| (p[a].min(p[b]), p[a].max(p[b])))
                        .collect();
                    s.sort_unstable();
                    s
                })
                .min()
                .expect("at least one permutation");
            if !seen.insert(canon) {
                continue;
            }
            let net = StaticNetwork::from_edges(n, &edges, false)?;
            if net.hop_distances(0).iter().all(|&h| h != usize::MAX) {
                out.push(net);
            }
        }
    }
    Ok(out)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..n {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}
