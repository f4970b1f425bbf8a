use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: self-loop on node `{label}` is not allowed")]
    SelfLoop { line: usize, label: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("uniform variate {0} outside (0, 1]")]
    UniformOutOfRange(f64),

    #[error("operation requires an exact-mapping instance (per-node recovery times)")]
    RequiresExactInstance,

    #[error(
        "expected propagation time diverges for SIR dynamics (finite recovery); \
         enable conditional mode to report means over finite distances"
    )]
    DivergentExpectation,

    #[error("quadrature did not converge: estimated error {error:e} after {intervals} intervals")]
    Quadrature { error: f64, intervals: usize },

    #[error("snapshot mismatch: {0}")]
    SnapshotMismatch(String),

    #[error("all kernel weights underflowed to zero; try a larger bandwidth than {bandwidth}")]
    ZeroKernelMass { bandwidth: f64 },

    #[error("no candidate matched the observed snapshot in {per_candidate} simulations each; increase the sample count")]
    NoMatches { per_candidate: usize },

    #[error("observed snapshot has no infected or recovered nodes")]
    NoInfected,

    #[error("giant component absent: {0}")]
    NoGiantComponent(String),
}

pub type Result<T> = std::result::Result<T, Error>;
