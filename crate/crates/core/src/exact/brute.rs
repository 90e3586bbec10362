use rayon::prelude::*;

use super::{ExactResult, Method, PartialAssignment};
use crate::error::{Error, Result};
use crate::lattice::{local_delta, raw_energy, Lattice, ModelParams, Site};
use crate::lattice::{MINUS, PLUS};

/// Largest free-site count enumerated by default (2^26 ≈ 6.7e7 states).
pub const DEFAULT_BRUTE_CAP: usize = 26;

/// Below this many free sites the enumeration is not split into chunks.
const SPLIT_THRESHOLD: usize = 18;
const SPLIT_BITS: usize = 6;

/// Number of states per (energy, watched-spin pattern) over all free-spin
/// assignments of a lattice.
///
/// Counts are exact integers, so any probability of an event on the watched
/// sites follows for every β from a short sum over energy levels.
#[derive(Debug, Clone)]
pub struct EnergyHistogram {
    watched: Vec<Site>,
    min_energy: i64,
    patterns: usize,
    counts: Vec<u64>,
}

impl EnergyHistogram {
    pub fn build(lattice: &Lattice, watched: &[Site]) -> Result<Self> {
        Self::build_with_cap(lattice, watched, DEFAULT_BRUTE_CAP)
    }

    pub fn build_with_cap(lattice: &Lattice, watched: &[Site], cap: usize) -> Result<Self> {
        let n = lattice.free_count();
        if n > cap {
            return Err(Error::TooManySites { free: n, cap });
        }
        if watched.len() > 16 {
            return Err(Error::Parameter("at most 16 watched sites".into()));
        }
        let mut watch_bit = vec![None; n];
        for (b, &s) in watched.iter().enumerate() {
            let k = lattice.free_position(s)?;
            if watch_bit[k].is_some() {
                return Err(Error::Parameter(format!("site ({}, {}) watched twice", s.x, s.y)));
            }
            watch_bit[k] = Some(b);
        }
        let bonds = lattice.geometry().bond_count() as i64;
        let min_energy = -bonds;
        let patterns = 1usize << watched.len();
        let levels = (2 * bonds + 1) as usize;

        let split = if n >= SPLIT_THRESHOLD { SPLIT_BITS } else { 0 };
        let chunks: Vec<Vec<u64>> = (0..1u64 << split)
            .into_par_iter()
            .map(|chunk| {
                let mut counts = vec![0u64; levels * patterns];
                enumerate_chunk(lattice, &watch_bit, split, chunk, min_energy, patterns, &mut counts);
                counts
            })
            .collect();
        let mut counts = vec![0u64; levels * patterns];
        for c in &chunks {
            for (a, b) in counts.iter_mut().zip(c) {
                *a += b;
            }
        }
        Ok(EnergyHistogram { watched: watched.to_vec(), min_energy, patterns, counts })
    }

    pub fn watched(&self) -> &[Site] {
        &self.watched
    }

    /// Total number of states counted (2^free).
    pub fn total_states(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn mask_for(&self, event: &PartialAssignment) -> Result<(usize, usize)> {
        let mut mask = 0usize;
        let mut want = 0usize;
        for &(s, v) in &event.fixed {
            let b = self
                .watched
                .iter()
                .position(|&w| w == s)
                .ok_or_else(|| Error::Parameter(format!("site ({}, {}) is not watched", s.x, s.y)))?;
            mask |= 1 << b;
            if v == PLUS {
                want |= 1 << b;
            }
        }
        Ok((mask, want))
    }

    /// Returns `(ln Z_event, ln Z)`.
    fn log_sums(&self, beta: f64, mask: usize, want: usize) -> (f64, f64) {
        let levels = self.counts.len() / self.patterns;
        let per_level = |l: usize| -> (u64, u64) {
            let row = &self.counts[l * self.patterns..(l + 1) * self.patterns];
            let all: u64 = row.iter().sum();
            let ev: u64 = row.iter().enumerate().filter(|(p, _)| p & mask == want).map(|(_, c)| c).sum();
            (ev, all)
        };
        // Shift energies by the lowest occupied level; sum in increasing energy.
        let lowest = (0..levels).find(|&l| per_level(l).1 > 0).expect("at least one state");
        let (mut ze, mut z) = (0.0f64, 0.0f64);
        for l in lowest..levels {
            let (ev, all) = per_level(l);
            if all == 0 {
                continue;
            }
            let w = (-beta * (l - lowest) as f64).exp();
            ze += ev as f64 * w;
            z += all as f64 * w;
        }
        let shift = -beta * (self.min_energy + lowest as i64) as f64;
        (ze.ln() + shift, z.ln() + shift)
    }

    pub fn log_partition(&self, beta: f64) -> f64 {
        self.log_sums(beta, 0, 0).1
    }

    pub fn probability(&self, params: ModelParams, event: &PartialAssignment) -> Result<ExactResult> {
        let (mask, want) = self.mask_for(event)?;
        let (lze, lz) = self.log_sums(params.beta, mask, want);
        Ok(ExactResult { probability: (lze - lz).exp(), log_partition: lz, method: Method::Brute })
    }
}

/// Gray-code walk over the free spins whose top `split` bits equal `chunk`.
fn enumerate_chunk(
    lattice: &Lattice,
    watch_bit: &[Option<usize>],
    split: usize,
    chunk: u64,
    min_energy: i64,
    patterns: usize,
    counts: &mut [u64],
) {
    let n = lattice.free_count();
    let low = n - split;
    let free: Vec<i8> = (0..n)
        .map(|k| if k >= low && (chunk >> (k - low)) & 1 == 1 { PLUS } else { MINUS })
        .collect();
    let idx = lattice.free_indices();
    let mut spins: Vec<i8> = lattice.frozen_raw().to_vec();
    for (k, &i) in idx.iter().enumerate() {
        spins[i] = free[k];
    }
    let mut energy = raw_energy(lattice.geometry(), &spins);
    let nb = lattice.free_neighbors();
    let mut pattern = 0usize;
    for (k, wb) in watch_bit.iter().enumerate() {
        if let Some(b) = wb {
            if free[k] == PLUS {
                pattern |= 1 << b;
            }
        }
    }
    let record = |counts: &mut [u64], energy: i64, pattern: usize| {
        counts[(energy - min_energy) as usize * patterns + pattern] += 1;
    };
    record(counts, energy, pattern);
    for step in 1u64..(1u64 << low) {
        let k = step.trailing_zeros() as usize;
        let i = idx[k];
        energy += local_delta(&spins, i, &nb[k]);
        spins[i] = -spins[i];
        if let Some(b) = watch_bit[k] {
            pattern ^= 1 << b;
        }
        record(counts, energy, pattern);
    }
}

/// Exact `P(event)` by enumerating every free-spin assignment.
pub fn brute_probability(
    lattice: &Lattice,
    params: ModelParams,
    event: &PartialAssignment,
) -> Result<ExactResult> {
    event.validate(lattice)?;
    let watched: Vec<Site> = event.sites().collect();
    EnergyHistogram::build(lattice, &watched)?.probability(params, event)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, FrozenSpec, Segment};

    #[test]
    fn infinite_temperature_is_uniform() {
        let l = build_lattice(2, FrozenSpec::minus().with_segment(Segment::new(-1, 0, 0, PLUS))).unwrap();
        for s in l.free_sites() {
            let r = brute_probability(&l, ModelParams::new(0.0).unwrap(), &PartialAssignment::single(s, PLUS)).unwrap();
            assert!((r.probability - 0.5).abs() < 1e-15);
            assert!((r.log_partition - 7.0 * 2f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn single_free_site_formula() {
        let l = build_lattice(1, FrozenSpec::minus()).unwrap();
        for beta in [0.1, 0.5, 1.0, 3.0] {
            let r = brute_probability(&l, ModelParams::new(beta).unwrap(), &PartialAssignment::single(Site::new(0, 0), PLUS))
                .unwrap();
            let w = (-8.0 * beta).exp();
            assert!((r.probability - w / (1.0 + w)).abs() < 1e-15);
        }
        let r = brute_probability(&l, ModelParams::new(0.5).unwrap(), &PartialAssignment::single(Site::new(0, 0), PLUS)).unwrap();
        assert!((r.probability - 1.0 / (1.0 + 4f64.exp())).abs() < 1e-15);
    }

    #[test]
    fn histogram_counts_every_state() {
        let l = build_lattice(2, FrozenSpec::minus()).unwrap();
        let h = EnergyHistogram::build(&l, &[Site::new(0, 0)]).unwrap();
        assert_eq!(h.total_states(), 512);
        let big = build_lattice(3, FrozenSpec::minus().with_segment(Segment::new(-2, 0, 0, PLUS))).unwrap();
        let h = EnergyHistogram::build(&big, &[Site::new(1, 0)]).unwrap();
        assert_eq!(h.total_states(), 1 << 22);
    }

    #[test]
    fn rejects_large_lattices() {
        let l = build_lattice(3, FrozenSpec::minus()).unwrap();
        let r = EnergyHistogram::build_with_cap(&l, &[], 20);
        assert_eq!(r.unwrap_err(), Error::TooManySites { free: 25, cap: 20 });
    }

    #[test]
    fn complementary_events_sum_to_one() {
        let l = build_lattice(2, FrozenSpec::minus().with_segment(Segment::new(-1, 0, 0, PLUS))).unwrap();
        let s = Site::new(1, 0);
        let h = EnergyHistogram::build(&l, &[s]).unwrap();
        for beta in [0.0, 0.5, 0.8, 2.0] {
            let p = ModelParams::new(beta).unwrap();
            let a = h.probability(p, &PartialAssignment::single(s, PLUS)).unwrap().probability;
            let b = h.probability(p, &PartialAssignment::single(s, MINUS)).unwrap().probability;
            assert!((a + b - 1.0).abs() < 1e-12);
        }
    }
}
