//! Transmissibility, first-neighbourhood activation probabilities `p_{n,k}`,
//! the chain toy-network reachability formula and bond percolation.

use rayon::prelude::*;

use crate::ensemble::{EnsembleEstimate, BLOCK};
use crate::error::{Error, Result};
use crate::graph::{NodeId, StaticNetwork};
use crate::inter_event::InterEventDistribution;
use crate::quadrature::integrate;
use crate::rng::{Purpose, RngStreamSpec, Stream};

/// Absolute tolerance of every quadrature below.
const QUAD_TOL: f64 = 1e-11;

/// Probability that exactly `k` of `n` outgoing links of an infected node
/// transmit before it recovers, for `k = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissibilityTable {
    pub n: usize,
    pub p_nk: Vec<f64>,
}

impl TransmissibilityTable {
    pub fn get(&self, k: usize) -> f64 {
        self.p_nk[k]
    }

    pub fn total(&self) -> f64 {
        self.p_nk.iter().sum()
    }
}

/// `E[g(R)]` over the recovery time `R ~ phi`; `R = inf` for the SI model.
///
/// Continuous laws are integrated in probability space, `∫_0^1 g(Q(u)) du`,
/// which keeps the domain bounded for heavy tails.
fn expect_over_recovery<G: Fn(f64) -> f64>(phi: Option<&InterEventDistribution>, g: G) -> Result<f64> {
    let phi = match phi {
        None => return Ok(g(f64::INFINITY)),
        Some(p) => p,
    };
    match *phi {
        InterEventDistribution::Deterministic { delay } => Ok(g(delay)),
        InterEventDistribution::Geometric { p } => {
            let q = 1.0 - p;
            let mut total = 0.0;
            let mut mass = p;
            let mut tail = 1.0;
            let mut k = 1.0;
            while tail > 1e-16 {
                total += mass * g(k);
                tail -= mass;
                mass *= q;
                k += 1.0;
                if mass == 0.0 {
                    break;
                }
            }
            Ok(total)
        }
        _ => integrate(
            |u| {
                let t = phi.quantile(u).unwrap_or(f64::INFINITY);
                g(t)
            },
            0.0,
            1.0,
            QUAD_TOL,
        ),
    }
}

/// Probability that an infected node transmits along one link before it
/// recovers: `∫ φ(τ) Ψ(τ) dτ`.
pub fn transmissibility(
    psi: &InterEventDistribution,
    phi: Option<&InterEventDistribution>,
) -> Result<f64> {
    psi.validate()?;
    if let Some(phi) = phi {
        phi.validate()?;
    }
    match (psi, phi) {
        (_, None) => Ok(1.0),
        (
            InterEventDistribution::Exponential { rate: beta },
            Some(InterEventDistribution::Exponential { rate: gamma }),
        ) => Ok(beta / (beta + gamma)),
        _ => expect_over_recovery(phi, |tau| psi.cdf(tau)),
    }
}

/// `ln C(n, k)`.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

/// `C(n,k) x^k (1-x)^(n-k)` in log space; `surv = 1 - x` passed separately
/// to avoid cancellation.
fn binomial_term(n: usize, k: usize, x: f64, surv: f64) -> f64 {
    let mut log = ln_binomial(n, k);
    if k > 0 {
        if x <= 0.0 {
            return 0.0;
        }
        log += k as f64 * x.ln();
    }
    if n > k {
        if surv <= 0.0 {
            return 0.0;
        }
        log += (n - k) as f64 * surv.ln();
    }
    log.exp()
}

/// `p_{n,k}` for arbitrary inter-event laws by quadrature over the shared
/// recovery time.
pub fn p_nk_general(
    psi: &InterEventDistribution,
    phi: Option<&InterEventDistribution>,
    n: usize,
) -> Result<TransmissibilityTable> {
    psi.validate()?;
    let p_nk = (0..=n)
        .map(|k| {
            expect_over_recovery(phi, |tau| {
                if tau.is_infinite() {
                    return if k == n { 1.0 } else { 0.0 };
                }
                binomial_term(n, k, psi.cdf(tau), psi.survival(tau))
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(TransmissibilityTable { n, p_nk })
}

/// Closed form of `p_{n,k}` for exponential transmission (`beta`) and
/// recovery (`gamma`):
/// `C(n,k) (γ/β) Γ(k+1) Γ(a) / Γ(k+1+a)` with `a = (γ + β(n-k)) / β`.
pub fn p_nk_poisson(beta: f64, gamma: f64, n: usize) -> Result<TransmissibilityTable> {
    if !(beta > 0.0 && gamma > 0.0 && beta.is_finite() && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "rates must be positive and finite, got beta={beta}, gamma={gamma}"
        )));
    }
    let p_nk = (0..=n)
        .map(|k| {
            let a = (gamma + beta * (n - k) as f64) / beta;
            let log = ln_binomial(n, k) + (gamma / beta).ln() + libm::lgamma(k as f64 + 1.0) + libm::lgamma(a)
                - libm::lgamma(k as f64 + 1.0 + a);
            log.exp()
        })
        .collect();
    Ok(TransmissibilityTable { n, p_nk })
}

/// Probability that the source of the chain toy network reaches the
/// destination: `1 - Σ_j p_{n_c,j} (1 - p_{1,1}^l)^j`.
///
/// `tables(n)` must return the `p_{n,·}` table for out-degree `n`; it is
/// queried for `n_c` and for `1`.
pub fn toy_network_prob<F>(chains: usize, length: usize, tables: F) -> Result<f64>
where
    F: Fn(usize) -> Result<TransmissibilityTable>,
{
    if chains == 0 || length == 0 {
        return Err(Error::InvalidParameter("chains and chain length must be >= 1".into()));
    }
    let source = tables(chains)?;
    let p11 = tables(1)?.get(1);
    let chain_blocked = 1.0 - p11.powi(length as i32);
    let miss: f64 = source
        .p_nk
        .iter()
        .enumerate()
        .map(|(j, p)| p * chain_blocked.powi(j as i32))
        .sum();
    Ok(1.0 - miss)
}

/// Keeps each edge independently with probability `p` and returns the
/// component of `source`, ascending.
pub fn bond_percolation_component(
    net: &StaticNetwork,
    p: f64,
    source: NodeId,
    stream: &mut Stream,
) -> Result<Vec<NodeId>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("bond probability {p} outside [0, 1]")));
    }
    let kept: Vec<bool> = (0..net.edge_count()).map(|_| stream.uniform() < p).collect();
    let mut seen = vec![false; net.node_count()];
    let mut stack = vec![source.index()];
    seen[source.index()] = true;
    while let Some(u) = stack.pop() {
        for a in net.arcs(u) {
            let v = net.arc_target(a);
            if !seen[v] && kept[net.arc_edge(a)] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    Ok((0..net.node_count())
        .filter(|&v| seen[v])
        .map(NodeId::from)
        .collect())
}

/// Mean size of the bond-percolation component of `source` over `n`
/// realizations.
pub fn bond_percolation_mean(
    net: &StaticNetwork,
    p: f64,
    source: NodeId,
    n: usize,
    streams: &RngStreamSpec,
) -> Result<EnsembleEstimate> {
    let blocks: Vec<Result<EnsembleEstimate>> = (0..n.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut e = EnsembleEstimate::default();
            for k in b * BLOCK..((b + 1) * BLOCK).min(n) {
                let comp = bond_percolation_component(net, p, source, &mut streams.stream(Purpose::Percolation, k as u64, 0))?;
                e.push(comp.len() as f64);
            }
            Ok(e)
        })
        .collect();
    let mut total = EnsembleEstimate::default();
    for b in blocks {
        total.merge(&b?);
    }
    Ok(total)
}
