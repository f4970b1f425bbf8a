use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use sirmap::ensemble::{Ensemble, SamplerConfig};
use sirmap::graph::{all_pairs, MappingKind, StaticNetwork};
use sirmap::inter_event::InterEventDistribution as Dist;
use sirmap::mapping::{sample_instance, MappingSpec};
use sirmap::percolation::{ln_binomial, p_nk_poisson};
use sirmap::rng::{Purpose, RngStreamSpec};

fn star(leaves: usize) -> StaticNetwork {
    let edges: Vec<(usize, usize)> = (1..=leaves).map(|v| (0, v)).collect();
    StaticNetwork::from_edges(leaves + 1, &edges, false).unwrap()
}

fn poisson(beta: f64, gamma: f64, kind: MappingKind) -> MappingSpec {
    MappingSpec::new(
        Dist::exponential(beta).unwrap(),
        Some(Dist::exponential(gamma).unwrap()),
        kind,
    )
}

/// Histogram of the number of finite outgoing weights of the star centre.
fn active_out_links(net: &StaticNetwork, spec: MappingSpec, n: usize) -> Vec<f64> {
    let leaves = net.degree(0);
    let ens = Ensemble::new(net, spec, SamplerConfig::Independent, 17);
    let values = ens.values(n, |inst| net.arcs(0).filter(|&a| inst.weights[a].is_finite()).count() as f64);
    let mut hist = vec![0.0; leaves + 1];
    for k in values {
        hist[k as usize] += 1.0;
    }
    hist
}

/// Pearson statistic and its 1% critical value; bins with expectation
/// below 5 are pooled into their neighbour.
fn chi_square(observed: &[f64], probs: &[f64]) -> (f64, f64) {
    let n: f64 = observed.iter().sum();
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (o, p) in observed.iter().zip(probs) {
        acc.0 += o;
        acc.1 += p * n;
        if acc.1 >= 5.0 {
            bins.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if let Some(last) = bins.last_mut() {
        last.0 += acc.0;
        last.1 += acc.1;
    }
    let stat = bins.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let df = (bins.len() - 1) as f64;
    (stat, ChiSquared::new(df).unwrap().inverse_cdf(0.99))
}

fn binomial(n: usize, p: f64) -> Vec<f64> {
    (0..=n)
        .map(|k| (ln_binomial(n, k) + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()).exp())
        .collect()
}

#[test]
fn exact_star_follows_p_nk_and_meanfield_follows_binomial() {
    let (beta, gamma, leaves, n) = (1.0, 1.0, 6, 100_000);
    let net = star(leaves);
    let pnk = p_nk_poisson(beta, gamma, leaves).unwrap().p_nk;
    let bin = binomial(leaves, beta / (beta + gamma));

    let exact = active_out_links(&net, poisson(beta, gamma, MappingKind::Exact), n);
    let (stat, crit) = chi_square(&exact, &pnk);
    assert!(stat < crit, "exact vs p_nk: {stat} >= {crit}");
    let (stat, crit) = chi_square(&exact, &bin);
    assert!(stat > 100.0 * crit, "exact mapping should not look binomial: {stat}");

    let mf = active_out_links(&net, poisson(beta, gamma, MappingKind::MeanField), n);
    let (stat, crit) = chi_square(&mf, &bin);
    assert!(stat < crit, "mean-field vs binomial: {stat} >= {crit}");
}

#[test]
fn si_mappings_share_the_weight_law() {
    // Without recovery both mappings draw every weight from psi.
    let net = star(4);
    let psi = Dist::exponential(2.0).unwrap();
    let n = 20_000;
    let mut quantiles = Vec::new();
    for kind in [MappingKind::Exact, MappingKind::MeanField] {
        let ens = Ensemble::new(&net, MappingSpec::new(psi, None, kind), SamplerConfig::Independent, 5);
        let mut w = ens.values(n, |inst| inst.weights[0]);
        assert!(w.iter().all(|x| x.is_finite()));
        w.sort_by(f64::total_cmp);
        quantiles.push([w[n / 4], w[n / 2], w[3 * n / 4]]);
    }
    for q in 0..3 {
        let expected = psi.quantile([0.25, 0.5, 0.75][q]).unwrap();
        for kind in &quantiles {
            assert!((kind[q] - expected).abs() < 0.03 * expected.max(0.1), "{kind:?} vs {expected}");
        }
    }
}

fn arbitrary_graph() -> impl Strategy<Value = StaticNetwork> {
    (2usize..9)
        .prop_flat_map(|n| {
            let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
            let len = pairs.len();
            (Just(n), Just(pairs), proptest::collection::vec(any::<bool>(), len))
        })
        .prop_map(|(n, pairs, keep)| {
            let edges: Vec<(usize, usize)> = pairs.into_iter().zip(keep).filter(|(_, k)| *k).map(|(e, _)| e).collect();
            StaticNetwork::from_edges(n, &edges, false).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn instances_respect_weight_rule(net in arbitrary_graph(), seed in any::<u64>(), beta in 0.1f64..3.0, gamma in 0.1f64..3.0) {
        let streams = RngStreamSpec::new(seed);
        for kind in [MappingKind::Exact, MappingKind::MeanField] {
            let inst = sample_instance(&net, &poisson(beta, gamma, kind), &mut streams.stream(Purpose::Instance, 0, 0));
            prop_assert!(inst.validate(&net).is_ok());
            let d = all_pairs(&net, &inst);
            for s in 0..net.node_count() {
                prop_assert_eq!(d.get(s, s), 0.0);
            }
            if kind == MappingKind::MeanField {
                for i in 0..net.node_count() {
                    for j in 0..net.node_count() {
                        let (a, b) = (d.get(i, j), d.get(j, i));
                        // Equal up to summation order along the path.
                        prop_assert!(a == b || (a - b).abs() <= 1e-12 * a.abs());
                    }
                }
            }
        }
    }

    #[test]
    fn exact_weights_never_exceed_recovery(net in arbitrary_graph(), seed in any::<u64>()) {
        let spec = MappingSpec::new(Dist::weibull(1.5, 1.0).unwrap(), Some(Dist::lognormal(0.0, 1.0).unwrap()), MappingKind::Exact);
        let inst = sample_instance(&net, &spec, &mut RngStreamSpec::new(seed).stream(Purpose::Instance, 0, 0));
        let rec = inst.recovery.as_ref().unwrap();
        for u in 0..net.node_count() {
            for a in net.arcs(u) {
                let w = inst.weights[a];
                prop_assert!(w == f64::INFINITY || w <= rec[u]);
            }
        }
    }
}
