//! Contour-arc ensembles and the effective random walk built from them.
//!
//! [`ensemble`] sums contour weights over arcs exactly, truncated at a length
//! cutoff with a certified tail bound. The remaining modules treat the arc
//! above a long segment as a random walk: [`steps`] builds step laws,
//! [`ballot`] computes the probability that the walk stays positive,
//! [`harmonic`] the functions `h±`, and [`scaling`] the finite-size checks.

pub mod ballot;
pub mod directed;
pub mod ensemble;
pub mod error;
pub mod harmonic;
pub mod model;
pub mod saw;
pub mod scaling;
pub mod steps;

pub use error::{Error, Result};
pub use model::{ClusterMode, WeightModel};
