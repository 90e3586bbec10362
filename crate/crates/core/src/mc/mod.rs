//! Seeded single-spin-flip Markov chains for the conditioned Ising measure.
//!
//! Streams are keyed by `(seed, replica)`: replica `r` uses a ChaCha8
//! generator seeded from `seed` on stream `r`. Replicas run on the rayon pool
//! and are merged in replica order, so results do not depend on the thread
//! count.

mod raster;
mod stats;

pub use raster::{RasterHeader, RasterReader, RasterWriter, HEADER_LEN, MAGIC, VERSION};
pub use stats::{
    batch_means, integrated_autocorrelation, BatchMeans, EstimateWithError, DEFAULT_BATCHES,
    MIN_SAMPLES,
};

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{local_field, Lattice, ModelParams, Site, SpinConfiguration, PLUS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dynamics {
    #[default]
    HeatBath,
    Metropolis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schedule {
    pub burn_in: u64,
    pub sweeps: u64,
    pub thin: u64,
}

impl Schedule {
    pub fn new(burn_in: u64, sweeps: u64, thin: u64) -> Result<Self> {
        let s = Schedule { burn_in, sweeps, thin };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn_in < 1 || self.sweeps < 1 || self.thin < 1 {
            return Err(Error::Parameter("burn_in, sweeps and thin must be >= 1".into()));
        }
        if (self.samples() as usize) < MIN_SAMPLES {
            return Err(Error::Parameter(format!(
                "sweeps / thin = {} is below the minimum of {MIN_SAMPLES} samples",
                self.samples()
            )));
        }
        Ok(())
    }

    /// Samples recorded per replica.
    pub fn samples(&self) -> u64 {
        self.sweeps / self.thin
    }
}

/// Generator for replica `replica` of a run seeded with `seed`.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// Acceptance thresholds on `u64` draws, indexed by `(local field + 4) / 2`.
#[derive(Debug, Clone, Copy)]
struct Thresholds([u64; 5]);

fn to_threshold(p: f64) -> u64 {
    if p >= 1.0 {
        u64::MAX
    } else if p <= 0.0 {
        0
    } else {
        (p * 18446744073709551616.0) as u64
    }
}

impl Thresholds {
    /// `P(+ | field h) = 1 / (1 + exp(-2 beta h))`.
    fn heat_bath(beta: f64) -> Self {
        let mut t = [0u64; 5];
        for (k, slot) in t.iter_mut().enumerate() {
            let h = 2 * k as i32 - 4;
            *slot = to_threshold(1.0 / (1.0 + (-2.0 * beta * h as f64).exp()));
        }
        Thresholds(t)
    }

    /// `min(1, exp(-beta dH))` indexed by `dH / 4 + 2`, `dH ∈ {-8, ..., 8}`.
    fn metropolis(beta: f64) -> Self {
        let mut t = [0u64; 5];
        for (k, slot) in t.iter_mut().enumerate() {
            let dh = 4 * k as i32 - 8;
            *slot = to_threshold((-beta * dh as f64).exp().min(1.0));
        }
        Thresholds(t)
    }
}

/// A chain: configuration, generator and sweep counter.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub config: SpinConfiguration,
    pub rng: ChaCha8Rng,
    pub sweeps_done: u64,
}

impl ChainState {
    /// Cold start with every free spin at the ring value.
    pub fn cold(lattice: Arc<Lattice>, seed: u64, replica: u64) -> Self {
        ChainState {
            config: SpinConfiguration::ground(lattice),
            rng: replica_rng(seed, replica),
            sweeps_done: 0,
        }
    }

    pub fn sweep(&mut self, params: ModelParams, dynamics: Dynamics) {
        match dynamics {
            Dynamics::HeatBath => heatbath_sweep(self, params),
            Dynamics::Metropolis => metropolis_sweep(self, params),
        }
    }
}

/// One pass over the free sites in row-major order, resampling each from its
/// conditional law given the neighbours.
pub fn heatbath_sweep(state: &mut ChainState, params: ModelParams) {
    let t = Thresholds::heat_bath(params.beta);
    let lattice = state.config.lattice().clone();
    let nb = lattice.free_neighbors();
    let spins = state.config.spins_mut();
    for (k, &i) in lattice.free_indices().iter().enumerate() {
        let h = local_field(spins, &nb[k]);
        let u: u64 = state.rng.gen();
        spins[i] = if u < t.0[((h + 4) / 2) as usize] { 1 } else { -1 };
    }
    state.sweeps_done += 1;
    debug_assert!(state.config.respects_frozen());
}

/// One Metropolis pass: at each free site propose a uniformly random spin
/// value and accept with `min(1, exp(-beta dH))`.
pub fn metropolis_sweep(state: &mut ChainState, params: ModelParams) {
    let t = Thresholds::metropolis(params.beta);
    let lattice = state.config.lattice().clone();
    let nb = lattice.free_neighbors();
    let spins = state.config.spins_mut();
    for (k, &i) in lattice.free_indices().iter().enumerate() {
        let u: u64 = state.rng.gen();
        // Lowest bit picks the proposed value; a proposal equal to the current
        // spin is a no-op.
        if u & 1 == 0 {
            continue;
        }
        let dh = 2 * spins[i] as i32 * local_field(spins, &nb[k]);
        if dh <= 0 || (u >> 1) < t.0[(dh / 4 + 2) as usize] >> 1 {
            spins[i] = -spins[i];
        }
    }
    state.sweeps_done += 1;
    debug_assert!(state.config.respects_frozen());
}

/// Built-in observables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    /// Indicator of `σ_site = +1` at a free site.
    SpinUp(Site),
    /// Mean of the free spins.
    Magnetization,
}

impl Observable {
    fn validate(&self, lattice: &Lattice) -> Result<()> {
        match *self {
            Observable::SpinUp(s) => lattice.free_position(s).map(|_| ()),
            Observable::Magnetization => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub dynamics: Dynamics,
    pub replicas: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { dynamics: Dynamics::HeatBath, replicas: 1 }
    }
}

/// Runs one replica, calling `visit(config, sweep)` on each recorded sample.
pub fn run_replica<F>(
    lattice: Arc<Lattice>,
    params: ModelParams,
    schedule: Schedule,
    dynamics: Dynamics,
    seed: u64,
    replica: u64,
    mut visit: F,
) -> Result<ChainState>
where
    F: FnMut(&SpinConfiguration, u64) -> Result<()>,
{
    schedule.validate()?;
    let mut state = ChainState::cold(lattice, seed, replica);
    for _ in 0..schedule.burn_in {
        state.sweep(params, dynamics);
    }
    for k in 1..=schedule.samples() * schedule.thin {
        state.sweep(params, dynamics);
        if k % schedule.thin == 0 {
            visit(&state.config, state.sweeps_done)?;
        }
    }
    Ok(state)
}

/// Runs `options.replicas` independent chains and estimates `n_obs` values
/// computed by `observe` on every recorded sample.
pub fn run_chain_with<F>(
    lattice: Arc<Lattice>,
    params: ModelParams,
    schedule: Schedule,
    seed: u64,
    options: RunOptions,
    n_obs: usize,
    observe: F,
) -> Result<Vec<EstimateWithError>>
where
    F: Fn(&SpinConfiguration, &mut [f64]) + Sync,
{
    schedule.validate()?;
    if options.replicas < 1 {
        return Err(Error::Parameter("at least one replica is required".into()));
    }
    let per_replica: Vec<Vec<EstimateWithError>> = (0..options.replicas)
        .into_par_iter()
        .map(|r| {
            let mut acc = vec![BatchMeans::new(schedule.samples(), DEFAULT_BATCHES); n_obs];
            let mut values = vec![0.0; n_obs];
            run_replica(lattice.clone(), params, schedule, options.dynamics, seed, r, |c, _| {
                observe(c, &mut values);
                for (a, &v) in acc.iter_mut().zip(&values) {
                    a.push(v);
                }
                Ok(())
            })?;
            Ok(acc.iter().map(BatchMeans::estimate).collect())
        })
        .collect::<Result<_>>()?;
    Ok((0..n_obs)
        .map(|j| {
            let parts: Vec<_> = per_replica.iter().map(|r| r[j]).collect();
            EstimateWithError::merge(&parts)
        })
        .collect())
}

/// [`run_chain_with`] for built-in observables.
pub fn run_chain(
    lattice: Arc<Lattice>,
    params: ModelParams,
    schedule: Schedule,
    seed: u64,
    options: RunOptions,
    observables: &[Observable],
) -> Result<Vec<EstimateWithError>> {
    let mut plan = Vec::with_capacity(observables.len());
    for o in observables {
        o.validate(&lattice)?;
        plan.push(match *o {
            Observable::SpinUp(s) => Some(lattice.geometry().index(s).expect("validated")),
            Observable::Magnetization => None,
        });
    }
    run_chain_with(lattice, params, schedule, seed, options, plan.len(), |c, out| {
        for (slot, p) in out.iter_mut().zip(&plan) {
            *slot = match p {
                Some(i) => (c.spins()[*i] == PLUS) as u8 as f64,
                None => c.free_magnetization(),
            };
        }
    })
}

/// Integrated autocorrelation time (in sweeps) of `observable` over a pilot
/// run of `sweeps` sweeps after `burn_in`.
pub fn measure_autocorrelation(
    lattice: Arc<Lattice>,
    params: ModelParams,
    observable: Observable,
    burn_in: u64,
    sweeps: u64,
    seed: u64,
) -> Result<f64> {
    observable.validate(&lattice)?;
    let mut series = Vec::with_capacity(sweeps as usize);
    let schedule = Schedule::new(burn_in, sweeps, 1)?;
    run_replica(lattice, params, schedule, Dynamics::HeatBath, seed, 0, |c, _| {
        series.push(match observable {
            Observable::SpinUp(s) => (c.get(s) == Some(PLUS)) as u8 as f64,
            Observable::Magnetization => c.free_magnetization(),
        });
        Ok(())
    })?;
    Ok(integrated_autocorrelation(&series))
}

/// Burn-in of ten autocorrelation times, at least one sweep.
pub fn suggested_burn_in(tau: f64) -> u64 {
    (10.0 * tau).ceil().max(1.0) as u64
}
