//! Reference SIR simulators that do not go through the weighted-instance
//! mapping: a synchronous discrete-time simulator and a Gillespie
//! (direct-method) continuous-time simulator.
//!
//! Discrete order of operations within a step from `t` to `t + 1`: every node
//! infected at `t` attempts each susceptible neighbour with probability
//! `beta`, then recovers with probability `gamma`; nodes infected during the
//! step become active at `t + 1`.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::graph::StaticNetwork;
use crate::mapping::State;
use crate::rng::Stream;

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub states: Vec<State>,
    pub clock: f64,
    /// Time from which a node can no longer be infected (`inf` if never).
    pub protected_from: Vec<f64>,
    infected: Vec<u32>,
}

impl SimState {
    /// All susceptible except `sources`, which start infected at time 0.
    pub fn new(n: usize, sources: &[usize]) -> Self {
        let mut s = Self {
            states: vec![State::S; n],
            clock: 0.0,
            protected_from: vec![f64::INFINITY; n],
            infected: Vec::new(),
        };
        s.reset(sources);
        s
    }

    pub fn reset(&mut self, sources: &[usize]) {
        self.states.fill(State::S);
        self.protected_from.fill(f64::INFINITY);
        self.infected.clear();
        self.clock = 0.0;
        for &v in sources {
            if self.states[v] == State::S {
                self.states[v] = State::I;
                self.infected.push(v as u32);
            }
        }
    }

    /// Currently infected nodes.
    pub fn infected(&self) -> impl Iterator<Item = usize> + '_ {
        self.infected.iter().map(|&v| v as usize)
    }

    pub fn infected_count(&self) -> usize {
        self.infected.len()
    }

    pub fn count(&self, state: State) -> usize {
        self.states.iter().filter(|&&s| s == state).count()
    }

    /// Susceptible nodes whose protection is in force at the current clock.
    pub fn protected_count(&self) -> usize {
        self.states
            .iter()
            .zip(&self.protected_from)
            .filter(|(&s, &p)| s == State::S && p <= self.clock)
            .count()
    }

    /// Ever infected: `I` plus `R`.
    pub fn cumulative_infected(&self) -> usize {
        self.states.iter().filter(|s| s.is_infected_or_recovered()).count()
    }

    pub fn is_extinct(&self) -> bool {
        self.infected.is_empty()
    }

    /// Marks `node` immune to infections arriving at or after `from`.
    pub fn protect(&mut self, node: usize, from: f64) {
        self.protected_from[node] = self.protected_from[node].min(from);
    }

    #[inline]
    fn can_infect(&self, node: usize, at: f64) -> bool {
        self.states[node] == State::S && at < self.protected_from[node]
    }
}

/// One synchronous discrete-time step.
pub fn discrete_step(state: &mut SimState, net: &StaticNetwork, beta: f64, gamma: f64, stream: &mut Stream) {
    let arrival = state.clock + 1.0;
    let active = state.infected.len();
    let mut newly: Vec<u32> = Vec::new();
    for idx in 0..active {
        let i = state.infected[idx] as usize;
        for j in net.neighbors(i) {
            if state.states[j] == State::S && stream.bernoulli(beta) && state.can_infect(j, arrival) {
                // Marked I immediately so later attempts this step skip it;
                // it is not in the active prefix, so it cannot transmit yet.
                state.states[j] = State::I;
                newly.push(j as u32);
            }
        }
    }
    let mut kept = 0;
    for idx in 0..active {
        let i = state.infected[idx];
        if stream.bernoulli(gamma) {
            state.states[i as usize] = State::R;
        } else {
            state.infected[kept] = i;
            kept += 1;
        }
    }
    state.infected.truncate(kept);
    state.infected.extend(newly);
    state.clock = arrival;
}

/// Runs `steps` discrete steps (stopping early at extinction) and returns the
/// per-step cumulative infected counts, index `t` for time `t`.
pub fn run_discrete(
    state: &mut SimState,
    net: &StaticNetwork,
    beta: f64,
    gamma: f64,
    steps: usize,
    stream: &mut Stream,
) -> Vec<usize> {
    let mut curve = Vec::with_capacity(steps + 1);
    curve.push(state.cumulative_infected());
    for _ in 0..steps {
        if state.is_extinct() {
            let last = *curve.last().expect("non-empty");
            curve.push(last);
            state.clock += 1.0;
            continue;
        }
        discrete_step(state, net, beta, gamma, stream);
        curve.push(state.cumulative_infected());
    }
    curve
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    Infection { node: usize, by: usize },
    Recovery { node: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub events: Vec<Event>,
}

impl Trajectory {
    /// States at time `t`, replaying events with `time <= t` over `initial`.
    pub fn states_at(&self, initial: &[State], t: f64) -> Vec<State> {
        let mut s = initial.to_vec();
        for e in self.events.iter().take_while(|e| e.time <= t) {
            match e.kind {
                EventKind::Infection { node, .. } => s[node] = State::I,
                EventKind::Recovery { node } => s[node] = State::R,
            }
        }
        s
    }

    /// `time kind node [neighbour]` per line.
    pub fn to_text(&self, net: &StaticNetwork) -> String {
        let mut out = String::new();
        for e in &self.events {
            let _ = match e.kind {
                EventKind::Infection { node, by } => writeln!(
                    out,
                    "{:?} infection {} {}",
                    e.time,
                    net.labels()[node],
                    net.labels()[by]
                ),
                EventKind::Recovery { node } => {
                    writeln!(out, "{:?} recovery {}", e.time, net.labels()[node])
                }
            };
        }
        out
    }
}

/// Gillespie direct method until extinction or `t_max`. Total rate is
/// `beta * (#S-I contact arcs) + gamma * (#I)`, recomputed after every event.
pub fn gillespie_run(
    state: &mut SimState,
    net: &StaticNetwork,
    beta: f64,
    gamma: f64,
    stream: &mut Stream,
    t_max: f64,
) -> Trajectory {
    let n = net.node_count();
    let mut traj = Trajectory::default();
    // Infected-neighbour counts of susceptible nodes.
    let mut pressure = vec![0u32; n];
    for i in state.infected() {
        for j in net.neighbors(i) {
            pressure[j] += 1;
        }
    }
    loop {
        let clock = state.clock;
        let susceptible_pressure: u64 = (0..n)
            .filter(|&j| state.can_infect(j, clock))
            .map(|j| pressure[j] as u64)
            .sum();
        let n_inf = state.infected.len();
        let total = beta * susceptible_pressure as f64 + gamma * n_inf as f64;
        // Next time at which a protection takes effect and rates drop.
        let boundary = state
            .protected_from
            .iter()
            .zip(&state.states)
            .filter(|(&p, &s)| s == State::S && p > clock)
            .map(|(&p, _)| p)
            .fold(f64::INFINITY, f64::min);
        if total <= 0.0 {
            if boundary.is_finite() && boundary < t_max && n_inf > 0 {
                state.clock = boundary;
                continue;
            }
            break;
        }
        let dt = -stream.uniform_open0().ln() / total;
        let t = clock + dt;
        if t >= boundary {
            state.clock = boundary;
            continue;
        }
        if t > t_max {
            state.clock = t_max;
            break;
        }
        state.clock = t;
        let mut target = stream.uniform() * total;
        let rec_total = gamma * n_inf as f64;
        if target < rec_total {
            let idx = ((target / gamma) as usize).min(n_inf - 1);
            let node = state.infected.swap_remove(idx) as usize;
            state.states[node] = State::R;
            for j in net.neighbors(node) {
                pressure[j] -= 1;
            }
            traj.events.push(Event {
                time: t,
                kind: EventKind::Recovery { node },
            });
        } else {
            target = (target - rec_total) / beta;
            let mut chosen = None;
            for j in 0..n {
                if pressure[j] == 0 || !state.can_infect(j, clock) {
                    continue;
                }
                let w = pressure[j] as f64;
                if target < w {
                    chosen = Some((j, target));
                    break;
                }
                target -= w;
            }
            // Rounding can leave a sliver past the last candidate.
            let (node, within) = chosen.unwrap_or_else(|| {
                let j = (0..n)
                    .rev()
                    .find(|&j| pressure[j] > 0 && state.can_infect(j, clock))
                    .expect("positive infection rate implies a candidate");
                (j, pressure[j] as f64 - 0.5)
            });
            let k = (within as usize).min(pressure[node] as usize - 1);
            let by = net
                .neighbors(node)
                .filter(|&i| state.states[i] == State::I)
                .nth(k)
                .expect("pressure counts infected neighbours");
            state.states[node] = State::I;
            state.infected.push(node as u32);
            for j in net.neighbors(node) {
                pressure[j] += 1;
            }
            traj.events.push(Event {
                time: t,
                kind: EventKind::Infection { node, by },
            });
        }
    }
    traj
}

/// Largest network accepted by [`exact_discrete_distribution`].
pub const EXACT_MAX_NODES: usize = 10;

/// Exact distribution of configurations after `steps` discrete steps from
/// `sources`, by propagating every configuration of the synchronous chain.
/// A susceptible node with `k` infected neighbours is infected with
/// probability `1 - (1 - beta)^k`; an infected node recovers with
/// probability `gamma`; all nodes update independently.
pub fn exact_discrete_distribution(
    net: &StaticNetwork,
    beta: f64,
    gamma: f64,
    sources: &[usize],
    steps: usize,
) -> crate::Result<HashMap<Vec<State>, f64>> {
    let n = net.node_count();
    if n > EXACT_MAX_NODES {
        return Err(crate::Error::InvalidParameter(format!(
            "exact enumeration limited to {EXACT_MAX_NODES} nodes, got {n}"
        )));
    }
    if !(0.0..=1.0).contains(&beta) || !(0.0..=1.0).contains(&gamma) {
        return Err(crate::Error::InvalidParameter("beta and gamma must lie in [0, 1]".into()));
    }
    let mut start = vec![State::S; n];
    for &v in sources {
        start[v] = State::I;
    }
    let mut dist = HashMap::from([(start, 1.0)]);
    for _ in 0..steps {
        let mut next: HashMap<Vec<State>, f64> = HashMap::new();
        for (config, p) in dist {
            // Per-node outcome lists, then their product.
            let mut partial: Vec<(Vec<State>, f64)> = vec![(Vec::with_capacity(n), p)];
            for v in 0..n {
                let options: Vec<(State, f64)> = match config[v] {
                    State::R => vec![(State::R, 1.0)],
                    State::I => vec![(State::I, 1.0 - gamma), (State::R, gamma)],
                    State::S => {
                        let k = net.neighbors(v).filter(|&u| config[u] == State::I).count();
                        let stay = (1.0 - beta).powi(k as i32);
                        vec![(State::S, stay), (State::I, 1.0 - stay)]
                    }
                };
                let mut grown = Vec::with_capacity(partial.len() * options.len());
                for (prefix, q) in &partial {
                    for &(s, w) in &options {
                        if w > 0.0 {
                            let mut c = prefix.clone();
                            c.push(s);
                            grown.push((c, q * w));
                        }
                    }
                }
                partial = grown;
            }
            for (c, q) in partial {
                *next.entry(c).or_insert(0.0) += q;
            }
        }
        dist = next;
    }
    Ok(dist)
}
