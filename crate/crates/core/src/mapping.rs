//! Mapping of spreading dynamics onto weighted instances, and S/I/R snapshot
//! extraction from an instance.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{MappingKind, NodeId, ShortestPathEngine, StaticNetwork, WeightedInstance};
use crate::inter_event::InterEventDistribution;
use crate::rng::Stream;

/// Dynamics plus mapping choice. `phi = None` is the SI model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MappingSpec {
    pub psi: InterEventDistribution,
    pub phi: Option<InterEventDistribution>,
    pub kind: MappingKind,
}

impl MappingSpec {
    pub fn new(
        psi: InterEventDistribution,
        phi: Option<InterEventDistribution>,
        kind: MappingKind,
    ) -> Self {
        Self { psi, phi, kind }
    }

    pub fn with_kind(mut self, kind: MappingKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn is_si(&self) -> bool {
        self.phi.is_none()
    }

    #[inline]
    fn recovery_draw(&self, stream: &mut Stream) -> f64 {
        match &self.phi {
            Some(phi) => phi.sample(stream),
            None => f64::INFINITY,
        }
    }
}

/// Applies the weight rule: transmit after `tau` if `tau <= recovery`,
/// otherwise never.
#[inline]
pub fn edge_weight(tau: f64, recovery: f64) -> f64 {
    if tau <= recovery {
        tau
    } else {
        f64::INFINITY
    }
}

pub fn sample_instance(net: &StaticNetwork, spec: &MappingSpec, stream: &mut Stream) -> WeightedInstance {
    match spec.kind {
        MappingKind::Exact => sample_exact_instance(net, spec, stream),
        MappingKind::MeanField => sample_meanfield_instance(net, spec, stream),
    }
}

/// One recovery draw per node, one transmission draw per arc.
pub fn sample_exact_instance(
    net: &StaticNetwork,
    spec: &MappingSpec,
    stream: &mut Stream,
) -> WeightedInstance {
    let mut inst = WeightedInstance {
        kind: MappingKind::Exact,
        weights: vec![f64::INFINITY; net.arc_count()],
        recovery: Some(vec![f64::INFINITY; net.node_count()]),
    };
    for node in 0..net.node_count() {
        resample_node(net, spec, &mut inst, node, stream);
    }
    inst
}

/// Redraws the recovery time of `node` and the weights of all its outgoing
/// arcs. Other weights are untouched.
pub fn resample_node(
    net: &StaticNetwork,
    spec: &MappingSpec,
    inst: &mut WeightedInstance,
    node: usize,
    stream: &mut Stream,
) {
    let r = spec.recovery_draw(stream);
    inst.recovery.as_mut().expect("exact instance carries recovery times")[node] = r;
    for a in net.arcs(node) {
        let tau = spec.psi.sample(stream);
        inst.weights[a] = edge_weight(tau, r);
    }
}

/// Independent `(x, y)` per undirected edge, weight assigned to both arcs.
pub fn sample_meanfield_instance(
    net: &StaticNetwork,
    spec: &MappingSpec,
    stream: &mut Stream,
) -> WeightedInstance {
    let mut inst = WeightedInstance {
        kind: MappingKind::MeanField,
        weights: vec![f64::INFINITY; net.arc_count()],
        recovery: None,
    };
    for (arc, reverse) in net.edge_arcs() {
        resample_edge(spec, &mut inst, arc, reverse, stream);
    }
    inst
}

pub fn resample_edge(
    spec: &MappingSpec,
    inst: &mut WeightedInstance,
    arc: usize,
    reverse: Option<usize>,
    stream: &mut Stream,
) {
    let tau = spec.psi.sample(stream);
    let r = spec.recovery_draw(stream);
    let w = edge_weight(tau, r);
    inst.weights[arc] = w;
    if let Some(rev) = reverse {
        inst.weights[rev] = w;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum State {
    S,
    I,
    R,
}

impl State {
    pub fn is_infected_or_recovered(self) -> bool {
        !matches!(self, State::S)
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            State::S => "S",
            State::I => "I",
            State::R => "R",
        })
    }
}

impl FromStr for State {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "S" => Ok(State::S),
            "I" => Ok(State::I),
            "R" => Ok(State::R),
            other => Err(format!("unknown state `{other}` (expected S, I or R)")),
        }
    }
}

/// Per-node epidemic state at an observation time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub states: Vec<State>,
    pub observation_time: f64,
    pub source: Option<NodeId>,
}

impl Snapshot {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Nodes not in state S.
    pub fn affected(&self) -> Vec<usize> {
        self.states
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_infected_or_recovered())
            .map(|(i, _)| i)
            .collect()
    }

    /// `# time <t>` header, then `label state` lines.
    pub fn to_text(&self, net: &StaticNetwork) -> String {
        let mut out = format!("# time {}\n", self.observation_time);
        for (i, s) in self.states.iter().enumerate() {
            out.push_str(&format!("{} {}\n", net.labels()[i], s));
        }
        out
    }

    pub fn from_text(net: &StaticNetwork, text: &str) -> Result<Self> {
        let mut time = None;
        let mut states: Vec<Option<State>> = vec![None; net.node_count()];
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut f = rest.split_whitespace();
                if f.next() == Some("time") {
                    let v = f.next().ok_or_else(|| Error::Parse {
                        line: line_no,
                        message: "missing observation time".into(),
                    })?;
                    time = Some(v.parse::<f64>().map_err(|e| Error::Parse {
                        line: line_no,
                        message: format!("bad observation time `{v}`: {e}"),
                    })?);
                }
                continue;
            }
            let mut f = line.split_whitespace();
            let (label, state) = match (f.next(), f.next()) {
                (Some(l), Some(s)) => (l, s),
                _ => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "expected `label state`".into(),
                    })
                }
            };
            let node = net.node_by_label(label).ok_or_else(|| {
                Error::SnapshotMismatch(format!("line {line_no}: unknown node `{label}`"))
            })?;
            let state = state.parse::<State>().map_err(|message| Error::Parse {
                line: line_no,
                message,
            })?;
            states[node.index()] = Some(state);
        }
        let observation_time = time.ok_or_else(|| Error::Parse {
            line: 0,
            message: "snapshot needs a `# time <t>` header".into(),
        })?;
        if states.iter().all(Option::is_none) {
            return Err(Error::SnapshotMismatch("snapshot is empty".into()));
        }
        let missing: Vec<&str> = states
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_none())
            .map(|(i, _)| net.labels()[i].as_str())
            .take(5)
            .collect();
        if !missing.is_empty() {
            return Err(Error::SnapshotMismatch(format!(
                "no state given for node(s) {}",
                missing.join(", ")
            )));
        }
        Ok(Self {
            states: states.into_iter().map(|s| s.expect("checked")).collect(),
            observation_time,
            source: None,
        })
    }
}

/// State of one node given its infection time `d` and recovery duration `r`.
#[inline]
pub fn state_at(d: f64, r: f64, t: f64) -> State {
    if !(d <= t) {
        State::S
    } else if t < d + r {
        State::I
    } else {
        State::R
    }
}

/// Fills `out` with states at time `t` from distances and recovery durations.
pub fn states_from_distances(d: &[f64], recovery: &[f64], t: f64, out: &mut Vec<State>) {
    out.clear();
    out.extend(d.iter().zip(recovery).map(|(&d, &r)| state_at(d, r, t)));
}

pub fn extract_snapshot(
    net: &StaticNetwork,
    instance: &WeightedInstance,
    source: NodeId,
    t: f64,
) -> Result<Snapshot> {
    let recovery = match (instance.kind, &instance.recovery) {
        (MappingKind::Exact, Some(r)) => r,
        _ => return Err(Error::RequiresExactInstance),
    };
    let mut d = Vec::new();
    ShortestPathEngine::new().run(net, &instance.weights, source.index(), &mut d, None);
    let mut states = Vec::with_capacity(d.len());
    states_from_distances(&d, recovery, t, &mut states);
    Ok(Snapshot {
        states,
        observation_time: t,
        source: Some(source),
    })
}
