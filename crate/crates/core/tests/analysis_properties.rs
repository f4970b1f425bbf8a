use proptest::prelude::*;

use sirmap::analysis::{outbreak_curve, propagation_matrix};
use sirmap::applications::{exact_source_posterior, source_detect_topological};
use sirmap::ensemble::{Ensemble, EnsembleEstimate, SamplerConfig};
use sirmap::graph::{generate_graph, reachable_count, GraphKind, MappingKind, NodeId, ShortestPathEngine, StaticNetwork};
use sirmap::inter_event::InterEventDistribution as Dist;
use sirmap::mapping::{MappingSpec, Snapshot, State};
use sirmap::rng::{Purpose, RngStreamSpec};

fn si(kind: MappingKind) -> MappingSpec {
    MappingSpec::new(Dist::exponential(1.0).unwrap(), None, kind)
}

#[test]
fn si_matrix_finite_with_zero_diagonal() {
    let net = generate_graph(GraphKind::Lattice { width: 4, height: 4 }, 0).unwrap();
    let ens = Ensemble::new(&net, si(MappingKind::Exact), SamplerConfig::Independent, 1);
    let d = propagation_matrix(&ens, 300, false).unwrap();
    for i in 0..16 {
        assert_eq!(d.mean(i, i), 0.0);
        for j in 0..16 {
            assert!(d.mean(i, j).is_finite());
        }
    }
}

#[test]
fn meanfield_matrix_symmetric_within_stderr() {
    let net = generate_graph(GraphKind::ErdosRenyi { nodes: 12, mean_degree: 3.0 }, 2).unwrap();
    let spec = MappingSpec::new(
        Dist::exponential(1.0).unwrap(),
        Some(Dist::exponential(0.4).unwrap()),
        MappingKind::MeanField,
    );
    let ens = Ensemble::new(&net, spec, SamplerConfig::Independent, 3);
    let d = propagation_matrix(&ens, 2_000, true).unwrap();
    // Each instance is symmetric, so the conditional means agree exactly up
    // to summation order.
    for i in 0..12 {
        for j in 0..12 {
            let (a, b) = (d.mean(i, j), d.mean(j, i));
            if a.is_finite() || b.is_finite() {
                assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{i},{j}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn outbreak_curve_matches_direct_reachability() {
    let net = generate_graph(GraphKind::ErdosRenyi { nodes: 40, mean_degree: 3.0 }, 5).unwrap();
    let spec = MappingSpec::new(
        Dist::lognormal(0.0, 1.0).unwrap(),
        Some(Dist::weibull(2.0, 3.0).unwrap()),
        MappingKind::Exact,
    );
    let source = net.giant_component()[0];
    let grid = [0.5, 1.0, 2.0, 4.0, f64::INFINITY];
    let ens = Ensemble::new(&net, spec, SamplerConfig::Independent, 6);
    let curve = outbreak_curve(&ens, NodeId::from(source), 4_000, &grid).unwrap();

    // Independent recomputation from freshly keyed instances.
    let other = Ensemble::new(&net, spec, SamplerConfig::Independent, 7);
    let mut direct = vec![EnsembleEstimate::default(); grid.len()];
    let mut engine = ShortestPathEngine::new();
    let mut d = Vec::new();
    for k in 0..4_000 {
        engine.run(&net, &other.instance(k).weights, source, &mut d, None);
        for (e, &t) in direct.iter_mut().zip(&grid) {
            e.push(reachable_count(&d, t) as f64);
        }
    }
    for (c, e) in curve.iter().zip(&direct) {
        let se = (c.stderr.unwrap().powi(2) + e.stderr().unwrap().powi(2)).sqrt();
        assert!((c.mean - e.mean).abs() <= 3.0 * se, "t={}: {} vs {}", c.t, c.mean, e.mean);
    }
    assert!(curve.windows(2).all(|w| w[0].mean <= w[1].mean));
}

fn permuted(net: &StaticNetwork, perm: &[usize]) -> StaticNetwork {
    let edges: Vec<(usize, usize)> = net.edges().iter().map(|&(a, b)| (perm[a.index()], perm[b.index()])).collect();
    StaticNetwork::from_edges(net.node_count(), &edges, false).unwrap()
}

fn case() -> impl Strategy<Value = (StaticNetwork, Vec<State>, Vec<usize>)> {
    (3usize..7).prop_flat_map(|n| {
        let graph = generate_graph(GraphKind::Lattice { width: n, height: 1 }, 0)
            .unwrap()
            .edges()
            .iter()
            .map(|&(a, b)| (a.index(), b.index()))
            .collect::<Vec<_>>();
        let extra = proptest::collection::vec((0..n, 0..n), 0..n);
        let states = proptest::collection::vec(prop_oneof![Just(State::S), Just(State::I), Just(State::R)], n);
        let perm = Just((0..n).collect::<Vec<usize>>()).prop_shuffle();
        (Just(n), Just(graph), extra, states, perm).prop_map(|(n, mut edges, extra, mut states, perm)| {
            edges.extend(extra.into_iter().filter(|(a, b)| a != b));
            if states.iter().all(|&s| s == State::S) {
                states[0] = State::I;
            }
            (StaticNetwork::from_edges(n, &edges, false).unwrap(), states, perm)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn source_scores_are_permutation_equivariant((net, states, perm) in case()) {
        let snap = Snapshot { states: states.clone(), observation_time: 2.0, source: None };
        let mut moved = vec![State::S; states.len()];
        for (v, &s) in states.iter().enumerate() {
            moved[perm[v]] = s;
        }
        let pnet = permuted(&net, &perm);
        let psnap = Snapshot { states: moved, observation_time: 2.0, source: None };

        let a = source_detect_topological(&net, &snap);
        let b = source_detect_topological(&pnet, &psnap);
        prop_assert_eq!(a.is_ok(), b.is_ok());
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert!((a.scores.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for v in 0..states.len() {
                prop_assert!((a.scores[v] - b.scores[perm[v]]).abs() < 1e-12);
            }
        }
        let a = exact_source_posterior(&net, 0.6, 0.3, &snap);
        let b = exact_source_posterior(&pnet, 0.6, 0.3, &psnap);
        prop_assert_eq!(a.is_ok(), b.is_ok());
        if let (Ok(a), Ok(b)) = (a, b) {
            for v in 0..states.len() {
                prop_assert!((a[v] - b[perm[v]]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn percolation_component_contains_source(seed in any::<u64>(), p in 0.0f64..=1.0) {
        let net = generate_graph(GraphKind::Lattice { width: 5, height: 5 }, 0).unwrap();
        let mut stream = RngStreamSpec::new(seed).stream(Purpose::Percolation, 0, 0);
        let comp = sirmap::percolation::bond_percolation_component(&net, p, NodeId(12), &mut stream).unwrap();
        prop_assert!(comp.contains(&NodeId(12)));
        prop_assert!(comp.windows(2).all(|w| w[0] < w[1]));
    }
}
