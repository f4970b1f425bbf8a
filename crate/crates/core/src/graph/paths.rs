use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{NodeId, StaticNetwork, WeightedInstance};

/// Parent-arc marker for the source and unreachable nodes.
pub const NO_PARENT: usize = usize::MAX;

#[derive(Copy, Clone, PartialEq)]
struct HeapEntry {
    dist: f64,
    node: u32,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on distance, ties by node index.
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Reusable Dijkstra scratch space (lazy deletion, no decrease-key).
#[derive(Debug, Default)]
pub struct ShortestPathEngine {
    heap: BinaryHeap<HeapEntry>,
}

impl std::fmt::Debug for HeapEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.node, self.dist)
    }
}

impl ShortestPathEngine {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fills `dist` with shortest-path distances from `source` over arc
    /// `weights`. Infinite arcs are never relaxed. When `parent` is given it
    /// receives the arc through which each node was reached.
    pub fn run(
        &mut self,
        net: &StaticNetwork,
        weights: &[f64],
        source: usize,
        dist: &mut Vec<f64>,
        mut parent: Option<&mut Vec<usize>>,
    ) {
        let n = net.node_count();
        dist.clear();
        dist.resize(n, f64::INFINITY);
        if let Some(p) = parent.as_deref_mut() {
            p.clear();
            p.resize(n, NO_PARENT);
        }
        self.heap.clear();
        dist[source] = 0.0;
        self.heap.push(HeapEntry {
            dist: 0.0,
            node: source as u32,
        });
        while let Some(HeapEntry { dist: du, node }) = self.heap.pop() {
            let u = node as usize;
            if du > dist[u] {
                continue;
            }
            for a in net.arcs(u) {
                let w = weights[a];
                if w == f64::INFINITY {
                    continue;
                }
                let v = net.arc_target(a);
                let cand = du + w;
                if cand < dist[v] {
                    dist[v] = cand;
                    if let Some(p) = parent.as_deref_mut() {
                        p[v] = a;
                    }
                    self.heap.push(HeapEntry {
                        dist: cand,
                        node: v as u32,
                    });
                }
            }
        }
    }

    /// Like [`run`](Self::run) but stops once every node within `limit` is
    /// settled; distances above `limit` are reported as infinite.
    pub fn run_bounded(
        &mut self,
        net: &StaticNetwork,
        weights: &[f64],
        source: usize,
        limit: f64,
        dist: &mut Vec<f64>,
    ) {
        let n = net.node_count();
        dist.clear();
        dist.resize(n, f64::INFINITY);
        self.heap.clear();
        dist[source] = 0.0;
        self.heap.push(HeapEntry {
            dist: 0.0,
            node: source as u32,
        });
        while let Some(HeapEntry { dist: du, node }) = self.heap.pop() {
            let u = node as usize;
            if du > dist[u] {
                continue;
            }
            for a in net.arcs(u) {
                let w = weights[a];
                let cand = du + w;
                if cand > limit {
                    continue;
                }
                let v = net.arc_target(a);
                if cand < dist[v] {
                    dist[v] = cand;
                    self.heap.push(HeapEntry {
                        dist: cand,
                        node: v as u32,
                    });
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceVector {
    pub source: NodeId,
    pub d: Vec<f64>,
}

pub fn shortest_paths_from(
    net: &StaticNetwork,
    instance: &WeightedInstance,
    source: NodeId,
) -> DistanceVector {
    let mut d = Vec::new();
    ShortestPathEngine::new().run(net, &instance.weights, source.index(), &mut d, None);
    DistanceVector { source, d }
}

/// Row-major `N x N` matrix; row `i` holds distances from node `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

pub fn all_pairs(net: &StaticNetwork, instance: &WeightedInstance) -> DistanceMatrix {
    let n = net.node_count();
    let mut data = Vec::with_capacity(n * n);
    let mut engine = ShortestPathEngine::new();
    let mut row = Vec::with_capacity(n);
    for s in 0..n {
        engine.run(net, &instance.weights, s, &mut row, None);
        data.extend_from_slice(&row);
    }
    DistanceMatrix { n, data }
}

/// Nodes with `d <= t`, ascending.
pub fn reachable_within(distances: &DistanceVector, t: f64) -> Vec<NodeId> {
    distances
        .d
        .iter()
        .enumerate()
        .filter(|(_, &d)| within(d, t))
        .map(|(j, _)| NodeId::from(j))
        .collect()
}

pub fn reachable_count(d: &[f64], t: f64) -> usize {
    d.iter().filter(|&&x| within(x, t)).count()
}

/// Closed-interval reachability; `t = inf` keeps every finite distance.
#[inline]
fn within(d: f64, t: f64) -> bool {
    if t == f64::INFINITY {
        d.is_finite()
    } else {
        d <= t
    }
}
