//! Finite-box 2D Ising model with frozen plus/minus segments.
//!
//! The crate provides the lattice and energy bookkeeping ([`lattice`]),
//! exact finite-volume probabilities by enumeration and column transfer
//! ([`exact`]), seeded single-spin-flip samplers with batch-means error bars
//! ([`mc`]) and Peierls contour extraction under the South-West splitting rule
//! ([`contour`]).

pub mod contour;
pub mod error;
pub mod exact;
pub mod lattice;
pub mod mc;

pub use error::{Error, Result};
pub use lattice::{
    build_lattice, flip_delta, hamiltonian, BoxGeometry, FrozenSpec, Lattice, ModelParams,
    Segment, Site, Spin, SpinConfiguration, MINUS, PLUS,
};
