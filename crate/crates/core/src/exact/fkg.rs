use super::plus_probability;
use crate::error::{Error, Result};
use crate::lattice::{BoxGeometry, FrozenSpec, Lattice, ModelParams, Site, Spin, MINUS, PLUS};

/// Allowed round-off before an audit counts as a violation.
pub const FKG_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FkgAudit {
    pub p_low: f64,
    pub p_high: f64,
}

/// Range of spin values a site may take under a spec.
fn range(l: &Lattice, s: Site) -> (Spin, Spin) {
    match l.frozen_value(s) {
        Some(v) => (v, v),
        None => (MINUS, PLUS),
    }
}

/// Checks that `high` dominates `low` site by site: frozen ranges of `high`
/// lie above those of `low` at both ends.
pub fn check_comparable(low: &Lattice, high: &Lattice) -> Result<()> {
    for i in 0..low.geometry().len() {
        let s = low.geometry().site(i);
        let (a_lo, a_hi) = range(low, s);
        let (b_lo, b_hi) = range(high, s);
        if b_lo < a_lo || b_hi < a_hi {
            return Err(Error::NotComparable(format!(
                "site ({}, {}) allows [{a_lo}, {a_hi}] in the low spec and [{b_lo}, {b_hi}] in the high one",
                s.x, s.y
            )));
        }
    }
    Ok(())
}

/// Computes `P(σ_site = +1)` under both specs and fails unless the high spec
/// gives the larger value (up to [`FKG_TOLERANCE`]).
pub fn fkg_audit(
    geometry: BoxGeometry,
    params: ModelParams,
    spec_low: &FrozenSpec,
    spec_high: &FrozenSpec,
    site: Site,
) -> Result<FkgAudit> {
    let low = Lattice::new(geometry, spec_low.clone())?;
    let high = Lattice::new(geometry, spec_high.clone())?;
    if !geometry.contains(site) {
        return Err(Error::OutsideBox(site));
    }
    check_comparable(&low, &high)?;
    let p_low = plus_probability(&low, params, site)?;
    let p_high = plus_probability(&high, params, site)?;
    if p_low > p_high + FKG_TOLERANCE {
        return Err(Error::FkgViolation { site, p_low, p_high });
    }
    Ok(FkgAudit { p_low, p_high })
}
