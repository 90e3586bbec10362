//! Exact-oracle grids: enumeration against transfer, samplers against the
//! oracle, and FKG monotonicity in the frozen segments.

use std::sync::Arc;

use rayon::prelude::*;

use schn_core::exact::{transfer_probability, EnergyHistogram, PartialAssignment, FKG_TOLERANCE};
use schn_core::mc::{run_chain, Dynamics, Observable, RunOptions, Schedule};
use schn_core::{BoxGeometry, FrozenSpec, Lattice, ModelParams, Segment, Site, MINUS, PLUS};

use crate::error::Result;
use crate::report::resolution;

/// Inverse temperatures of the exact grids.
pub const GRID_BETAS: [f64; 4] = [0.0, 0.5, 1.0, 2.0];

/// The `M = 2` box and the strip with 3 rows and 8 columns.
pub fn grid_geometries() -> Vec<BoxGeometry> {
    vec![BoxGeometry::square(2).expect("valid"), BoxGeometry::strip(3, 8).expect("valid")]
}

/// The all-minus spec and every spec with one segment strictly inside the
/// box, frozen to either value.
pub fn one_segment_specs(g: &BoxGeometry) -> Vec<FrozenSpec> {
    let mut out = vec![FrozenSpec::minus()];
    for y in g.y_min + 1..g.y_max {
        for a in g.x_min + 1..g.x_max {
            for b in a..g.x_max {
                for v in [PLUS, MINUS] {
                    out.push(FrozenSpec::minus().with_segment(Segment::new(a, b, y, v)));
                }
            }
        }
    }
    out
}

/// `P(σ_site = +1)` by the column transfer, frozen sites answered directly.
pub fn transfer_plus(lattice: &Lattice, params: ModelParams, site: Site) -> Result<f64> {
    if let Some(v) = lattice.frozen_value(site) {
        return Ok(if v == PLUS { 1.0 } else { 0.0 });
    }
    Ok(transfer_probability(lattice, params, &PartialAssignment::single(site, PLUS))?.probability)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleReport {
    pub lattices: usize,
    pub comparisons: usize,
    pub max_discrepancy: f64,
}

/// Sites watched per enumeration pass.
const WATCH_CHUNK: usize = 8;

/// Compares enumeration and transfer on `P(σ_s = ±1)` for every free site of
/// every one-segment spec of `geometries`, at every `beta`.
pub fn oracle_cross_check(geometries: &[BoxGeometry], betas: &[f64]) -> Result<OracleReport> {
    let lattices: Vec<Lattice> = geometries
        .iter()
        .flat_map(|g| one_segment_specs(g).into_iter().map(move |s| (*g, s)))
        .map(|(g, s)| Lattice::new(g, s))
        .collect::<Result<_, _>>()?;
    let per: Vec<(usize, f64)> = lattices
        .par_iter()
        .map(|l| -> Result<(usize, f64)> {
            let sites: Vec<Site> = l.free_sites().collect();
            let (mut count, mut worst) = (0usize, 0.0f64);
            for chunk in sites.chunks(WATCH_CHUNK) {
                let h = EnergyHistogram::build(l, chunk)?;
                for &beta in betas {
                    let p = ModelParams::new(beta)?;
                    for &s in chunk {
                        for v in [PLUS, MINUS] {
                            let ev = PartialAssignment::single(s, v);
                            let a = h.probability(p, &ev)?.probability;
                            let b = transfer_probability(l, p, &ev)?.probability;
                            worst = worst.max((a - b).abs());
                            count += 1;
                        }
                    }
                }
            }
            Ok((count, worst))
        })
        .collect::<Result<_>>()?;
    Ok(OracleReport {
        lattices: lattices.len(),
        comparisons: per.iter().map(|p| p.0).sum(),
        max_discrepancy: per.iter().map(|p| p.1).fold(0.0, f64::max),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerReport {
    pub runs: usize,
    pub comparisons: usize,
    /// Comparisons within three standard errors of the oracle.
    pub agreeing: usize,
    /// Runs in which every comparison agreed.
    pub clean_runs: usize,
}

impl SamplerReport {
    pub fn agreement(&self) -> f64 {
        self.agreeing as f64 / self.comparisons as f64
    }
}

/// `runs` seeded runs over the grid. Run `k` picks a geometry, `β` and
/// one-segment spec from `k`, then estimates `P(σ_s = +1)` at every free site
/// with both dynamics.
pub fn sampler_cross_check(runs: u64, schedule: Schedule) -> Result<SamplerReport> {
    let geometries = grid_geometries();
    let specs: Vec<Vec<FrozenSpec>> = geometries.iter().map(one_segment_specs).collect();
    let per: Vec<(usize, usize, bool)> = (0..runs)
        .into_par_iter()
        .map(|k| -> Result<(usize, usize, bool)> {
            let gi = (k % 2) as usize;
            let beta = GRID_BETAS[(k / 2 % 4) as usize];
            let list = &specs[gi];
            let spec = list[(k as usize * 7 + 3) % list.len()].clone();
            let lattice = Arc::new(Lattice::new(geometries[gi], spec)?);
            let p = ModelParams::new(beta)?;
            let sites: Vec<Site> = lattice.free_sites().collect();
            let exact: Vec<f64> = sites.iter().map(|&s| transfer_plus(&lattice, p, s)).collect::<Result<_>>()?;
            let obs: Vec<Observable> = sites.iter().map(|&s| Observable::SpinUp(s)).collect();
            let (mut total, mut ok) = (0, 0);
            for dynamics in [Dynamics::HeatBath, Dynamics::Metropolis] {
                let est = run_chain(lattice.clone(), p, schedule, k, RunOptions { dynamics, replicas: 1 }, &obs)?;
                for (e, &x) in est.iter().zip(&exact) {
                    total += 1;
                    ok += ((e.mean - x).abs() <= 3.0 * resolution(e)) as usize;
                }
            }
            Ok((total, ok, total == ok))
        })
        .collect::<Result<_>>()?;
    Ok(SamplerReport {
        runs: per.len(),
        comparisons: per.iter().map(|p| p.0).sum(),
        agreeing: per.iter().map(|p| p.1).sum(),
        clean_runs: per.iter().filter(|p| p.2).count(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FkgReport {
    pub audits: usize,
    pub violations: usize,
    /// Smallest `p_high - p_low` seen.
    pub worst_margin: f64,
}

impl FkgReport {
    fn merge(self, o: FkgReport) -> FkgReport {
        FkgReport {
            audits: self.audits + o.audits,
            violations: self.violations + o.violations,
            worst_margin: self.worst_margin.min(o.worst_margin),
        }
    }

    fn empty() -> FkgReport {
        FkgReport { audits: 0, violations: 0, worst_margin: f64::INFINITY }
    }
}

/// Pairs `(low, high)` of comparable specs on row `y`: each segment against
/// its one-site extensions, and each segment against itself plus a second
/// segment further right.
fn spec_pairs(g: &BoxGeometry, y: i32) -> Vec<(FrozenSpec, FrozenSpec)> {
    let (lo, hi) = (g.x_min + 1, g.x_max - 1);
    let mut out = Vec::new();
    for a in lo..=hi {
        for b in a..=hi {
            let base = FrozenSpec::minus().with_segment(Segment::new(a, b, y, PLUS));
            if a > lo {
                out.push((base.clone(), FrozenSpec::minus().with_segment(Segment::new(a - 1, b, y, PLUS))));
            }
            if b < hi {
                out.push((base.clone(), FrozenSpec::minus().with_segment(Segment::new(a, b + 1, y, PLUS))));
            }
            for c in b + 2..=hi {
                for d in c..=hi {
                    out.push((base.clone(), base.clone().with_segment(Segment::new(c, d, y, PLUS))));
                }
            }
        }
    }
    out
}

/// Audits `P_low(σ_s = +1) <= P_high(σ_s = +1)` at `sites` (all box sites
/// when `None`) for every pair and `beta`.
fn audit_pairs(
    g: BoxGeometry,
    pairs: &[(FrozenSpec, FrozenSpec)],
    betas: &[f64],
    sites: Option<&[Site]>,
) -> Result<FkgReport> {
    let parts: Vec<FkgReport> = pairs
        .par_iter()
        .map(|(low, high)| -> Result<FkgReport> {
            let (l, h) = (Lattice::new(g, low.clone())?, Lattice::new(g, high.clone())?);
            schn_core::exact::check_comparable(&l, &h)?;
            let all: Vec<Site> = (0..g.len()).map(|i| g.site(i)).collect();
            let mut r = FkgReport::empty();
            for &beta in betas {
                let p = ModelParams::new(beta)?;
                for &s in sites.unwrap_or(&all) {
                    let margin = transfer_plus(&h, p, s)? - transfer_plus(&l, p, s)?;
                    r.audits += 1;
                    r.violations += (margin < -FKG_TOLERANCE) as usize;
                    r.worst_margin = r.worst_margin.min(margin);
                }
            }
            Ok(r)
        })
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().fold(FkgReport::empty(), FkgReport::merge))
}

/// Longer-segment and two-sided dominance over the grid geometries (every
/// row, every site) and over the symmetric two-sided family `[-N, -n]`,
/// `[n, N]` on a 5-row strip, probed at the origin.
pub fn fkg_grid(betas: &[f64]) -> Result<FkgReport> {
    let mut report = FkgReport::empty();
    for g in grid_geometries() {
        for y in g.y_min + 1..g.y_max {
            report = report.merge(audit_pairs(g, &spec_pairs(&g, y), betas, None)?);
        }
    }
    let strip = BoxGeometry::strip(5, 17)?;
    let mut pairs = Vec::new();
    for n in 1..=3 {
        for len in n..=8 {
            let one = FrozenSpec::minus().with_segment(Segment::new(-len, -n, 0, PLUS));
            let two = one.clone().with_segment(Segment::new(n, len, 0, PLUS));
            pairs.push((one, two.clone()));
            if len < 8 {
                let longer = FrozenSpec::minus()
                    .with_segment(Segment::new(-len - 1, -n, 0, PLUS))
                    .with_segment(Segment::new(n, len + 1, 0, PLUS));
                pairs.push((two, longer));
            }
        }
    }
    report = report.merge(audit_pairs(strip, &pairs, betas, Some(&[Site::new(0, 0)]))?);
    Ok(report)
}
