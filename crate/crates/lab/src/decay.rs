//! Decay of the plus phase to the right of a one-sided segment
//! `I = [(-N, 0), (0, 0)]`.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use schn_core::contour::{exterior_contour_of, extract_contours, interior_contains};
use schn_core::exact::{brute_probability, PartialAssignment};
use schn_core::mc::{run_chain_with, Dynamics, EstimateWithError, RunOptions, Schedule};
use schn_core::{build_lattice, FrozenSpec, ModelParams, Segment, Site, PLUS};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::report::{
    critical_beta, log_linear_fit, num, point_seed, resolution, Report, Verdict, MAX_RELATIVE_STDERR,
};

pub const MIN_FIT_POINTS: usize = 3;
pub const MIN_R_SQUARED: f64 = 0.95;
/// Largest relative difference of the rates at two segment lengths.
pub const RATE_SPREAD: f64 = 0.3;
/// Largest probe-probability difference between the two box sizes.
pub const BOX_TOLERANCE: f64 = 0.02;

/// Probes estimated at every point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Probe {
    /// `σ(n, 0) = +1`.
    Spin,
    /// `(n, 0)` inside the exterior contour around the segment.
    Interior,
}

impl Probe {
    pub fn name(self) -> &'static str {
        match self {
            Probe::Spin => "spin",
            Probe::Interior => "interior",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRun {
    pub m: i32,
    pub n_seg: i32,
    pub beta: f64,
    pub probes: Vec<i32>,
    pub spin: Vec<EstimateWithError>,
    pub interior: Vec<EstimateWithError>,
}

impl ProbeRun {
    pub fn estimates(&self, p: Probe) -> &[EstimateWithError] {
        match p {
            Probe::Spin => &self.spin,
            Probe::Interior => &self.interior,
        }
    }
}

/// Sampler settings shared by the points of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainSettings {
    pub dynamics: Dynamics,
    pub schedule: Schedule,
    pub replicas: u64,
}

impl ChainSettings {
    pub fn from_config(config: &ExperimentConfig, sweeps: u64) -> Result<Self> {
        let s = &config.sampler;
        Ok(ChainSettings {
            dynamics: s.dynamics,
            schedule: Schedule::new(s.burn_in, sweeps, s.thin)?,
            replicas: s.replicas,
        })
    }

    pub fn options(&self) -> RunOptions {
        RunOptions { dynamics: self.dynamics, replicas: self.replicas }
    }
}

/// Estimates both probes at `(n, 0)` for every `n` in `probes`.
pub fn probe_run(m: i32, n_seg: i32, beta: f64, probes: &[i32], chain: ChainSettings, seed: u64) -> Result<ProbeRun> {
    let seg = Segment::left_of_origin(n_seg);
    let lattice = Arc::new(build_lattice(m, FrozenSpec::minus().with_segment(seg))?);
    let k = probes.len();
    let nearest = *probes.iter().min().expect("non-empty probes");
    let est = run_chain_with(lattice, ModelParams::new(beta)?, chain.schedule, seed, chain.options(), 2 * k, |c, out| {
        for (j, &n) in probes.iter().enumerate() {
            out[j] = (c.get(Site::new(n, 0)) == Some(PLUS)) as u8 as f64;
            out[k + j] = 0.0;
        }
        // Sites just inside the exterior contour are plus, so a probe can only
        // be enclosed if some site of its row at or beyond it is plus.
        if !(nearest..m).any(|x| c.get(Site::new(x, 0)) == Some(PLUS)) {
            return;
        }
        let contours = extract_contours(c);
        if let Ok(Some(g)) = exterior_contour_of(&contours, &seg) {
            for (j, &n) in probes.iter().enumerate() {
                out[k + j] = interior_contains(g, Site::new(n, 0)) as u8 as f64;
            }
        }
    })?;
    Ok(ProbeRun { m, n_seg, beta, probes: probes.to_vec(), spin: est[..k].to_vec(), interior: est[k..].to_vec() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitPoint {
    pub n: i32,
    pub probability: f64,
    pub stderr: f64,
    pub included: bool,
}

/// Exponential fit `ln P ≈ intercept + rate · n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub rate: f64,
    pub rate_stderr: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: Vec<FitPoint>,
}

impl DecayFit {
    pub fn included(&self) -> usize {
        self.points.iter().filter(|p| p.included).count()
    }
}

/// Points with a vanishing estimate or a relative error above
/// [`MAX_RELATIVE_STDERR`] are excluded.
pub fn fit_decay(probes: &[i32], est: &[EstimateWithError]) -> DecayFit {
    let points: Vec<FitPoint> = probes
        .iter()
        .zip(est)
        .map(|(&n, e)| FitPoint {
            n,
            probability: e.mean,
            stderr: e.stderr,
            included: e.mean > 0.0 && e.stderr <= MAX_RELATIVE_STDERR * e.mean,
        })
        .collect();
    let pts: Vec<(f64, f64, f64)> =
        points.iter().filter(|p| p.included).map(|p| (p.n as f64, p.probability, p.stderr)).collect();
    let f = log_linear_fit(&pts);
    DecayFit { rate: f.slope, rate_stderr: f.slope_stderr, intercept: f.intercept, r_squared: f.r_squared, points }
}

/// Largest `|MC - exact| / resolution` of `P(σ(n, 0) = +1)`, `n = 1, 2`, on
/// the `M = 3` box with `N = 2`.
pub fn small_instance_check(beta: f64, dynamics: Dynamics, seed: u64) -> Result<f64> {
    let lattice = Arc::new(build_lattice(3, FrozenSpec::minus().with_segment(Segment::left_of_origin(2)))?);
    let p = ModelParams::new(beta)?;
    let sites = [Site::new(1, 0), Site::new(2, 0)];
    let schedule = Schedule::new(500, 40_000, 1)?;
    let est = run_chain_with(lattice.clone(), p, schedule, seed, RunOptions { dynamics, replicas: 1 }, 2, |c, out| {
        for (o, &s) in out.iter_mut().zip(&sites) {
            *o = (c.get(s) == Some(PLUS)) as u8 as f64;
        }
    })?;
    let mut worst = 0.0f64;
    for (e, &s) in est.iter().zip(&sites) {
        let exact = brute_probability(&lattice, p, &PartialAssignment::single(s, PLUS))?.probability;
        worst = worst.max((e.mean - exact).abs() / resolution(e));
    }
    Ok(worst)
}

pub const DECAY_CSV_HEADER: &str = "M,N,beta,n,observable,probability,stderr,included";
pub const FIT_CSV_HEADER: &str = "M,N,beta,observable,rate,rate_stderr,intercept,r_squared,points";

fn write_run(csv: &mut String, fits: &mut String, run: &ProbeRun) {
    for p in [Probe::Spin, Probe::Interior] {
        let fit = fit_decay(&run.probes, run.estimates(p));
        for q in &fit.points {
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{}",
                run.m,
                run.n_seg,
                run.beta,
                q.n,
                p.name(),
                num(q.probability),
                num(q.stderr),
                q.included as u8
            );
        }
        let _ = writeln!(
            fits,
            "{},{},{},{},{},{},{},{},{}",
            run.m,
            run.n_seg,
            run.beta,
            p.name(),
            num(fit.rate),
            num(fit.rate_stderr),
            num(fit.intercept),
            num(fit.r_squared),
            fit.included()
        );
    }
}

pub fn run_one_sided_decay(config: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let g = &config.geometry;
    for (i, &beta) in config.betas.iter().enumerate() {
        let z = small_instance_check(beta, config.sampler.dynamics, point_seed(config.seed, 1000 + i as u64))?;
        report.verdict(Verdict::at_most(format!("small_instance_oracle(beta={beta})"), z, 3.0));
    }
    if report.has_failures() {
        return Ok(());
    }

    let main = ChainSettings::from_config(config, config.sampler.sweeps)?;
    let mut points = Vec::new();
    for &beta in &config.betas {
        for &n in &g.segment_lengths {
            points.push((g.m, n, beta, main));
        }
    }
    if g.m_compare != 0 {
        let cmp = ChainSettings::from_config(config, config.sampler.compare_sweeps)?;
        for &beta in &config.betas {
            for &n in &g.segment_lengths {
                points.push((g.m_compare, n, beta, cmp));
            }
        }
    }
    let runs: Vec<ProbeRun> = points
        .par_iter()
        .enumerate()
        .map(|(k, &(m, n, beta, chain))| probe_run(m, n, beta, &g.probes, chain, point_seed(config.seed, k as u64)))
        .collect::<Result<_>>()?;

    let mut csv = format!("{DECAY_CSV_HEADER}\n");
    let mut fits = format!("{FIT_CSV_HEADER}\n");
    for run in &runs {
        write_run(&mut csv, &mut fits, run);
    }
    report.artifact("one_sided_decay.csv", &csv)?;
    report.artifact("decay_fits.csv", &fits)?;

    for &beta in &config.betas {
        if beta <= critical_beta() {
            report.warn(format!("beta={beta} is not below the critical temperature; decay reported, not asserted"));
            continue;
        }
        let at = |m: i32, n: i32| runs.iter().find(|r| r.m == m && r.n_seg == n && r.beta == beta).expect("run");
        let first = fit_decay(&g.probes, &at(g.m, g.segment_lengths[0]).interior);
        for &n in &g.segment_lengths {
            let fit = fit_decay(&g.probes, &at(g.m, n).interior);
            let tag = format!("M={},N={n},beta={beta}", g.m);
            report.verdict(Verdict::below(format!("decay_rate_negative({tag})"), fit.rate, 0.0));
            report.verdict(Verdict::at_least(format!("decay_fit_points({tag})"), fit.included() as f64, MIN_FIT_POINTS as f64));
            report.verdict(Verdict::at_least(format!("decay_fit_r_squared({tag})"), fit.r_squared, MIN_R_SQUARED));
            if n != g.segment_lengths[0] {
                let spread = (fit.rate - first.rate).abs() / first.rate.abs();
                report.verdict(Verdict::at_most(
                    format!("decay_rate_uniform_in_N(N={n} vs {},beta={beta})", g.segment_lengths[0]),
                    spread,
                    RATE_SPREAD,
                ));
            }
            if g.m_compare != 0 {
                let (a, b) = (at(g.m, n), at(g.m_compare, n));
                let diff = [Probe::Spin, Probe::Interior]
                    .iter()
                    .flat_map(|&p| a.estimates(p).iter().zip(b.estimates(p)).map(|(x, y)| (x.mean - y.mean).abs()))
                    .fold(0.0, f64::max);
                report.verdict(Verdict::at_most(
                    format!("probe_uniform_in_M(M={} vs {},N={n},beta={beta})", g.m, g.m_compare),
                    diff,
                    BOX_TOLERANCE,
                ));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est(mean: f64, stderr: f64) -> EstimateWithError {
        EstimateWithError { mean, stderr, n_samples: 1000, batch_count: 32 }
    }

    #[test]
    fn noisy_and_empty_points_are_excluded() {
        let e = [est(0.1, 0.001), est(0.01, 0.001), est(0.001, 0.0005), est(0.0, 0.0)];
        let f = fit_decay(&[1, 2, 3, 4], &e);
        assert_eq!(f.points.iter().map(|p| p.included).collect::<Vec<_>>(), [true, true, false, false]);
        assert!((f.rate - 0.1f64.ln()).abs() < 1e-12);
        assert_eq!(f.included(), 2);
    }

    #[test]
    fn infinite_temperature_profile_is_flat() {
        let chain = ChainSettings { dynamics: Dynamics::HeatBath, schedule: Schedule::new(10, 20_000, 1).unwrap(), replicas: 1 };
        let run = probe_run(6, 2, 0.0, &[1, 2, 3], chain, 5).unwrap();
        for e in &run.spin {
            assert!((e.mean - 0.5).abs() <= 3.0 * resolution(e), "{e:?}");
        }
        assert!(fit_decay(&run.probes, &run.spin).rate.abs() < 0.05);
    }

    #[test]
    fn small_instance_matches_enumeration() {
        for beta in [0.3, 1.0] {
            assert!(small_instance_check(beta, Dynamics::HeatBath, 11).unwrap() <= 3.0);
        }
    }
}
