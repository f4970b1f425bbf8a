use std::fmt::Write as _;

use super::StaticNetwork;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MappingKind {
    /// One recovery draw per node shared by its outgoing arcs; directed weights.
    Exact,
    /// Independent draws per edge; symmetric weights, no recovery times.
    MeanField,
}

/// One sampled realization: a delay per arc (`f64::INFINITY` when the
/// transmission never happens) plus, for exact instances, a recovery duration
/// per node.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedInstance {
    pub kind: MappingKind,
    pub weights: Vec<f64>,
    pub recovery: Option<Vec<f64>>,
}

impl WeightedInstance {
    pub fn weight(&self, arc: usize) -> f64 {
        self.weights[arc]
    }

    /// Checks the structural invariants against `net`.
    pub fn validate(&self, net: &StaticNetwork) -> Result<()> {
        if self.weights.len() != net.arc_count() {
            return Err(Error::InvalidParameter(format!(
                "instance has {} weights for {} arcs",
                self.weights.len(),
                net.arc_count()
            )));
        }
        if let Some(w) = self.weights.iter().find(|w| w.is_nan() || **w < 0.0) {
            return Err(Error::InvalidParameter(format!("invalid weight {w}")));
        }
        match (self.kind, &self.recovery) {
            (MappingKind::Exact, Some(rec)) => {
                if rec.len() != net.node_count() {
                    return Err(Error::InvalidParameter("recovery length mismatch".into()));
                }
                for u in 0..net.node_count() {
                    for a in net.arcs(u) {
                        let w = self.weights[a];
                        if w.is_finite() && w > rec[u] {
                            return Err(Error::InvalidParameter(format!(
                                "arc {a} weight {w} exceeds recovery {} of node {u}",
                                rec[u]
                            )));
                        }
                    }
                }
            }
            (MappingKind::Exact, None) => return Err(Error::RequiresExactInstance),
            (MappingKind::MeanField, _) => {
                for a in 0..net.arc_count() {
                    if let Some(r) = net.arc_reverse(a) {
                        if self.weights[a] != self.weights[r] {
                            return Err(Error::InvalidParameter(format!(
                                "mean-field arc {a} is not symmetric"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Text dump: `source target weight` per arc (`inf` for no transmission),
    /// then a `# recovery` block of `node duration` lines for exact instances.
    pub fn to_text(&self, net: &StaticNetwork) -> String {
        let mut out = String::new();
        let kind = match self.kind {
            MappingKind::Exact => "exact",
            MappingKind::MeanField => "mean-field",
        };
        let _ = writeln!(out, "# mapping {kind}");
        for u in 0..net.node_count() {
            for a in net.arcs(u) {
                let _ = writeln!(
                    out,
                    "{} {} {}",
                    net.labels()[u],
                    net.labels()[net.arc_target(a)],
                    fmt_time(self.weights[a])
                );
            }
        }
        if let Some(rec) = &self.recovery {
            let _ = writeln!(out, "# recovery");
            for (u, r) in rec.iter().enumerate() {
                let _ = writeln!(out, "{} {}", net.labels()[u], fmt_time(*r));
            }
        }
        out
    }

    /// Parses the format written by [`WeightedInstance::to_text`].
    pub fn from_text(net: &StaticNetwork, text: &str) -> Result<Self> {
        let mut kind = None;
        let mut weights = vec![f64::NAN; net.arc_count()];
        let mut recovery: Option<Vec<f64>> = None;
        let mut in_recovery = false;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(k) = rest.strip_prefix("mapping") {
                    kind = Some(match k.trim() {
                        "exact" => MappingKind::Exact,
                        "mean-field" => MappingKind::MeanField,
                        other => {
                            return Err(Error::Parse {
                                line: line_no,
                                message: format!("unknown mapping kind `{other}`"),
                            })
                        }
                    });
                } else if rest == "recovery" {
                    in_recovery = true;
                    recovery = Some(vec![f64::NAN; net.node_count()]);
                }
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let node = |label: &str| {
                net.node_by_label(label).ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: format!("unknown node `{label}`"),
                })
            };
            if in_recovery {
                if fields.len() != 2 {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "expected `node duration`".into(),
                    });
                }
                let u = node(fields[0])?;
                let r = parse_time(fields[1], line_no)?;
                recovery.as_mut().expect("recovery block opened")[u.index()] = r;
            } else {
                if fields.len() != 3 {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "expected `source target weight`".into(),
                    });
                }
                let u = node(fields[0])?.index();
                let v = node(fields[1])?.index();
                let w = parse_time(fields[2], line_no)?;
                let arc = net
                    .arcs(u)
                    .find(|&a| net.arc_target(a) == v)
                    .ok_or_else(|| Error::Parse {
                        line: line_no,
                        message: format!("no arc {} -> {}", fields[0], fields[1]),
                    })?;
                weights[arc] = w;
            }
        }
        if weights.iter().any(|w| w.is_nan())
            || recovery.as_ref().is_some_and(|r| r.iter().any(|x| x.is_nan()))
        {
            return Err(Error::Parse {
                line: 0,
                message: "instance dump does not cover every arc and node".into(),
            });
        }
        let kind = kind.unwrap_or(if recovery.is_some() {
            MappingKind::Exact
        } else {
            MappingKind::MeanField
        });
        Ok(Self {
            kind,
            weights,
            recovery,
        })
    }
}

fn fmt_time(t: f64) -> String {
    if t.is_infinite() {
        "inf".to_string()
    } else {
        // Shortest representation that round-trips exactly.
        format!("{t:?}")
    }
}

fn parse_time(s: &str, line: usize) -> Result<f64> {
    if s == "inf" {
        return Ok(f64::INFINITY);
    }
    s.parse::<f64>().map_err(|e| Error::Parse {
        line,
        message: format!("bad time `{s}`: {e}"),
    })
}
