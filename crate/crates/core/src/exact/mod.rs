//! Exact finite-volume Gibbs probabilities.
//!
//! Two independent routes compute `P(event)` for an event given as a partial
//! assignment of free spins: full enumeration of the free spins
//! ([`brute_probability`]) and a left-to-right column transfer
//! ([`transfer_probability`]). They agree to round-off wherever both apply,
//! which is what makes either one usable as an oracle for the samplers.

mod brute;
mod fkg;
mod transfer;

pub use brute::{brute_probability, EnergyHistogram, DEFAULT_BRUTE_CAP};
pub use fkg::{check_comparable, fkg_audit, FkgAudit, FKG_TOLERANCE};
pub use transfer::{transfer_probability, MAX_TRANSFER_ROWS};

use crate::error::{Error, Result};
use crate::lattice::{Lattice, ModelParams, Site, Spin, PLUS, MINUS};

/// A list of `(site, spin)` constraints on free sites.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PartialAssignment {
    pub fixed: Vec<(Site, Spin)>,
}

impl PartialAssignment {
    pub fn new(fixed: Vec<(Site, Spin)>) -> Self {
        PartialAssignment { fixed }
    }

    /// The single-site event `{σ_site = value}`.
    pub fn single(site: Site, value: Spin) -> Self {
        PartialAssignment { fixed: vec![(site, value)] }
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        self.fixed.iter().map(|&(s, _)| s)
    }

    pub fn validate(&self, lattice: &Lattice) -> Result<()> {
        for (i, &(s, v)) in self.fixed.iter().enumerate() {
            lattice.free_position(s)?;
            if v != PLUS && v != MINUS {
                return Err(Error::Parameter(format!("{v} is not a spin")));
            }
            if self.fixed[..i].iter().any(|&(t, _)| t == s) {
                return Err(Error::Parameter(format!("site ({}, {}) assigned twice", s.x, s.y)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Brute,
    Transfer,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactResult {
    pub probability: f64,
    /// `ln Z` of the unconstrained measure, frozen-frozen bonds included.
    pub log_partition: f64,
    pub method: Method,
}

/// Uses enumeration when the free-site count allows it, the transfer otherwise.
pub fn exact_probability(
    lattice: &Lattice,
    params: ModelParams,
    event: &PartialAssignment,
) -> Result<ExactResult> {
    if lattice.free_count() <= DEFAULT_BRUTE_CAP {
        brute_probability(lattice, params, event)
    } else {
        transfer_probability(lattice, params, event)
    }
}

/// `P(σ_site = +1)`, with frozen sites answered directly.
pub fn plus_probability(lattice: &Lattice, params: ModelParams, site: Site) -> Result<f64> {
    if let Some(v) = lattice.frozen_value(site) {
        return Ok(if v == PLUS { 1.0 } else { 0.0 });
    }
    Ok(exact_probability(lattice, params, &PartialAssignment::single(site, PLUS))?.probability)
}
