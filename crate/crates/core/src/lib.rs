//! Simulation of SIR-type spreading on networks through ensembles of
//! weighted "temporal map" instances: each instance assigns a propagation
//! delay to every arc, and infection times become weighted shortest paths.

pub mod analysis;
pub mod applications;
pub mod ensemble;
pub mod error;
pub mod graph;
pub mod inter_event;
pub mod mapping;
pub mod percolation;
pub mod quadrature;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
