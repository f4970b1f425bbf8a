//! Immutable input networks, edge-list ingestion and weighted shortest paths.

mod generate;
mod instance;
mod paths;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;

pub use generate::{connected_graphs, generate_graph, GraphKind, ENUMERATE_MAX_NODES};
pub use instance::{MappingKind, WeightedInstance};
pub use paths::{
    all_pairs, reachable_count, reachable_within, shortest_paths_from, DistanceMatrix,
    DistanceVector, ShortestPathEngine, NO_PARENT,
};

use crate::error::{Error, Result};

/// Dense node index in `[0, N)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(i as u32)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Unweighted input graph in compressed adjacency form.
///
/// Undirected edges are stored once in `edges` and expand to two arcs
/// (`u -> v` and `v -> u`); directed edges expand to one arc. Arc weights of a
/// [`WeightedInstance`] are indexed by arc id.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticNetwork {
    labels: Vec<String>,
    edges: Vec<(NodeId, NodeId)>,
    directed: bool,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    arc_edge: Vec<u32>,
    /// For undirected graphs, the id of the opposite arc.
    arc_reverse: Vec<u32>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    pub directed: bool,
}

impl StaticNetwork {
    /// Builds a network on `n` nodes labelled `0..n`.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], directed: bool) -> Result<Self> {
        let labels = (0..n).map(|i| i.to_string()).collect();
        Self::with_labels(labels, edges, directed)
    }

    /// Builds a network with explicit labels. Duplicate edges are collapsed;
    /// self-loops are rejected.
    pub fn with_labels(labels: Vec<String>, edges: &[(usize, usize)], directed: bool) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::InvalidParameter("network needs at least one node".into()));
        }
        let mut seen = HashSet::with_capacity(edges.len());
        let mut kept = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({u}, {v}) references a node outside 0..{n}"
                )));
            }
            if u == v {
                return Err(Error::SelfLoop {
                    line: 0,
                    label: labels[u].clone(),
                });
            }
            let key = if directed { (u, v) } else { (u.min(v), u.max(v)) };
            if seen.insert(key) {
                kept.push(key);
            }
        }
        Ok(Self::build(labels, kept, directed))
    }

    fn build(labels: Vec<String>, edges: Vec<(usize, usize)>, directed: bool) -> Self {
        let n = labels.len();
        // (source, target, edge id), sorted for a deterministic arc order.
        let mut arcs: Vec<(u32, u32, u32)> = Vec::with_capacity(edges.len() * 2);
        for (e, &(u, v)) in edges.iter().enumerate() {
            arcs.push((u as u32, v as u32, e as u32));
            if !directed {
                arcs.push((v as u32, u as u32, e as u32));
            }
        }
        arcs.sort_unstable();
        let mut offsets = vec![0usize; n + 1];
        for &(u, _, _) in &arcs {
            offsets[u as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let targets: Vec<u32> = arcs.iter().map(|a| a.1).collect();
        let arc_edge: Vec<u32> = arcs.iter().map(|a| a.2).collect();
        let mut arc_reverse = vec![u32::MAX; arcs.len()];
        if !directed {
            let mut first: Vec<u32> = vec![u32::MAX; edges.len()];
            for (a, &(_, _, e)) in arcs.iter().enumerate() {
                let e = e as usize;
                if first[e] == u32::MAX {
                    first[e] = a as u32;
                } else {
                    arc_reverse[a] = first[e];
                    arc_reverse[first[e] as usize] = a as u32;
                }
            }
        }
        Self {
            labels,
            edges: edges
                .into_iter()
                .map(|(u, v)| (NodeId::from(u), NodeId::from(v)))
                .collect(),
            directed,
            offsets,
            targets,
            arc_edge,
            arc_reverse,
        }
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn arc_count(&self) -> usize {
        self.targets.len()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, node: NodeId) -> &str {
        &self.labels[node.index()]
    }

    pub fn node_by_label(&self, label: &str) -> Option<NodeId> {
        self.labels.iter().position(|l| l == label).map(NodeId::from)
    }

    /// Arc ids leaving `node`.
    #[inline]
    pub fn arcs(&self, node: usize) -> std::ops::Range<usize> {
        self.offsets[node]..self.offsets[node + 1]
    }

    #[inline]
    pub fn arc_target(&self, arc: usize) -> usize {
        self.targets[arc] as usize
    }

    /// Node an arc leaves from.
    pub fn arc_source(&self, arc: usize) -> usize {
        self.offsets.partition_point(|&o| o <= arc) - 1
    }

    #[inline]
    pub fn arc_edge(&self, arc: usize) -> usize {
        self.arc_edge[arc] as usize
    }

    /// Opposite arc of an undirected edge; `None` for directed networks.
    #[inline]
    pub fn arc_reverse(&self, arc: usize) -> Option<usize> {
        let r = self.arc_reverse[arc];
        (r != u32::MAX).then_some(r as usize)
    }

    /// Arc ids carrying each edge (one for directed, two for undirected).
    pub fn edge_arcs(&self) -> Vec<(usize, Option<usize>)> {
        let mut out = vec![(usize::MAX, None); self.edges.len()];
        for node in 0..self.node_count() {
            for a in self.arcs(node) {
                let e = self.arc_edge(a);
                if out[e].0 == usize::MAX {
                    out[e] = (a, self.arc_reverse(a));
                }
            }
        }
        out
    }

    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.targets[self.offsets[node]..self.offsets[node + 1]]
            .iter()
            .map(|&t| t as usize)
    }

    #[inline]
    pub fn degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    /// Hop distances from `source` (unweighted BFS); `usize::MAX` if unreachable.
    pub fn hop_distances(&self, source: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.node_count()];
        let mut queue = std::collections::VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            for v in self.neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Nodes of the largest weakly connected component, ascending.
    pub fn giant_component(&self) -> Vec<usize> {
        let n = self.node_count();
        let mut comp = vec![usize::MAX; n];
        let mut best: (usize, usize) = (0, 0);
        let mut next = 0;
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            let mut size = 0;
            let mut stack = vec![start];
            comp[start] = next;
            while let Some(u) = stack.pop() {
                size += 1;
                for v in self.neighbors(u) {
                    if comp[v] == usize::MAX {
                        comp[v] = next;
                        stack.push(v);
                    }
                }
            }
            if size > best.1 {
                best = (next, size);
            }
            next += 1;
        }
        (0..n).filter(|&v| comp[v] == best.0).collect()
    }

    /// Writes the `label index` side table.
    pub fn write_label_map<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (i, l) in self.labels.iter().enumerate() {
            writeln!(out, "{l} {i}")?;
        }
        Ok(())
    }
}

/// Parses an edge list: two whitespace-separated labels per line, `#`
/// comments and blank lines ignored.
pub fn parse_edge_list(text: &str, options: LoadOptions) -> Result<StaticNetwork> {
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut edges = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (a, b) = match (fields.next(), fields.next()) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("expected two node labels, found `{line}`"),
                })
            }
        };
        if a == b {
            return Err(Error::SelfLoop {
                line: lineno + 1,
                label: a.to_string(),
            });
        }
        let mut ids = [0usize; 2];
        for (slot, label) in ids.iter_mut().zip([a, b]) {
            *slot = *index.entry(label).or_insert_with(|| {
                labels.push(label.to_string());
                labels.len() - 1
            });
        }
        let [u, v] = ids;
        edges.push((u, v));
    }
    if labels.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "edge list contains no edges".into(),
        });
    }
    StaticNetwork::with_labels(labels, &edges, options.directed)
}

pub fn load_edge_list(path: &Path, options: LoadOptions) -> Result<StaticNetwork> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_edge_list(&text, options)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_numeric_labels() {
        let net = parse_edge_list("0 1\n1 2", LoadOptions::default()).unwrap();
        assert_eq!(net.node_count(), 3);
        assert_eq!(net.edge_count(), 2);
        assert_eq!(net.labels(), &["0", "1", "2"]);
    }

    #[test]
    fn collapses_duplicates_and_skips_comments() {
        let net = parse_edge_list("a b\nb a\n# c", LoadOptions::default()).unwrap();
        assert_eq!(net.node_count(), 2);
        assert_eq!(net.edge_count(), 1);
        assert_eq!(net.arc_count(), 2);
    }

    #[test]
    fn directed_keeps_both_orientations() {
        let net = parse_edge_list("a b\nb a\n", LoadOptions { directed: true }).unwrap();
        assert_eq!(net.edge_count(), 2);
        assert_eq!(net.arc_count(), 2);
    }

    #[test]
    fn malformed_line_reports_number() {
        let err = parse_edge_list("0 1\n\n2\n", LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn self_loop_rejected() {
        let err = parse_edge_list("0 1\n1 1\n", LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::SelfLoop { line: 2, .. }), "{err}");
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_edge_list(Path::new("/nonexistent/edges.txt"), LoadOptions::default());
        assert!(matches!(err, Err(Error::Io { .. })));
    }

    #[test]
    fn reverse_arcs_pair_up() {
        let net = StaticNetwork::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)], false).unwrap();
        for u in 0..4 {
            for a in net.arcs(u) {
                let r = net.arc_reverse(a).unwrap();
                assert_eq!(net.arc_target(r), u);
                assert_eq!(net.arc_edge(r), net.arc_edge(a));
            }
        }
    }

    #[test]
    fn label_map_round_trip() {
        let net = parse_edge_list("x y\ny z\n", LoadOptions::default()).unwrap();
        let mut buf = Vec::new();
        net.write_label_map(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x 0\ny 1\nz 2\n");
        assert_eq!(net.node_by_label("z"), Some(NodeId(2)));
    }
}
