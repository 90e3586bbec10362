use std::sync::Arc;

use schn_core::exact::plus_probability;
use schn_core::mc::{
    measure_autocorrelation, run_chain, suggested_burn_in, Dynamics, EstimateWithError,
    Observable, RasterReader, RasterWriter, RunOptions, Schedule, run_replica,
};
use schn_core::{build_lattice, BoxGeometry, FrozenSpec, Lattice, ModelParams, Segment, Site, PLUS};

/// The standard error used for oracle comparisons: batch-means stderr, floored
/// at the resolution `1 / n` of a mean of indicators.
fn resolution(e: &EstimateWithError) -> f64 {
    e.stderr.max(1.0 / e.n_samples as f64)
}

fn agreement_rate(lattice: Arc<Lattice>, beta: f64, dynamics: Dynamics, seeds: u64) -> f64 {
    let p = ModelParams::new(beta).unwrap();
    let sites: Vec<Site> = lattice.free_sites().filter(|s| s.x == 0 || s.x == 1).collect();
    let exact: Vec<f64> = sites.iter().map(|&s| plus_probability(&lattice, p, s).unwrap()).collect();
    let obs: Vec<Observable> = sites.iter().map(|&s| Observable::SpinUp(s)).collect();
    let schedule = Schedule::new(200, 20_000, 1).unwrap();
    let (mut ok, mut total) = (0, 0);
    for seed in 0..seeds {
        let est = run_chain(lattice.clone(), p, schedule, seed, RunOptions { dynamics, replicas: 1 }, &obs).unwrap();
        for (e, &x) in est.iter().zip(&exact) {
            total += 1;
            if (e.mean - x).abs() <= 3.0 * resolution(e) {
                ok += 1;
            }
        }
    }
    ok as f64 / total as f64
}

#[test]
fn heat_bath_and_metropolis_match_the_oracle() {
    let m2 = Arc::new(build_lattice(2, FrozenSpec::minus().with_segment(Segment::new(-1, 0, 0, PLUS))).unwrap());
    let strip = Arc::new(
        Lattice::new(BoxGeometry::strip(3, 8).unwrap(), FrozenSpec::minus().with_segment(Segment::new(-4, -1, 0, PLUS)))
            .unwrap(),
    );
    for lattice in [m2, strip] {
        for beta in [0.0, 0.8, 2.0] {
            for d in [Dynamics::HeatBath, Dynamics::Metropolis] {
                let rate = agreement_rate(lattice.clone(), beta, d, 10);
                assert!(rate >= 0.9, "beta {beta} {d:?}: {rate}");
            }
        }
    }
}

#[test]
fn samplers_agree_with_each_other() {
    let l = Arc::new(build_lattice(2, FrozenSpec::minus().with_segment(Segment::new(-1, 0, 0, PLUS))).unwrap());
    let p = ModelParams::new(0.8).unwrap();
    let obs = [Observable::SpinUp(Site::new(1, 0)), Observable::Magnetization];
    let sch = Schedule::new(100, 100_000, 1).unwrap();
    let hb = run_chain(l.clone(), p, sch, 1, RunOptions { dynamics: Dynamics::HeatBath, replicas: 1 }, &obs).unwrap();
    let me = run_chain(l, p, sch, 2, RunOptions { dynamics: Dynamics::Metropolis, replicas: 1 }, &obs).unwrap();
    for (a, b) in hb.iter().zip(&me) {
        let joint = (a.stderr * a.stderr + b.stderr * b.stderr).sqrt();
        assert!((a.mean - b.mean).abs() <= 3.0 * joint, "{a:?} vs {b:?}");
    }
}

#[test]
fn replicas_merge_and_stay_deterministic() {
    let l = Arc::new(build_lattice(3, FrozenSpec::minus().with_segment(Segment::left_of_origin(2))).unwrap());
    let p = ModelParams::new(1.0).unwrap();
    let obs = [Observable::SpinUp(Site::new(1, 0))];
    let sch = Schedule::new(50, 5_000, 1).unwrap();
    let opt = RunOptions { dynamics: Dynamics::HeatBath, replicas: 4 };
    let a = run_chain(l.clone(), p, sch, 42, opt, &obs).unwrap();
    let b = run_chain(l.clone(), p, sch, 42, opt, &obs).unwrap();
    assert_eq!(a, b);
    assert_eq!(a[0].n_samples, 20_000);
    assert_eq!(a[0].batch_count, 128);
    let exact = plus_probability(&l, p, Site::new(1, 0)).unwrap();
    assert!((a[0].mean - exact).abs() <= 4.0 * resolution(&a[0]));
}

#[test]
fn stderr_shrinks_like_inverse_root_n() {
    let l = Arc::new(build_lattice(2, FrozenSpec::minus().with_segment(Segment::new(-1, 0, 0, PLUS))).unwrap());
    let p = ModelParams::new(0.5).unwrap();
    let obs = [Observable::SpinUp(Site::new(1, 0))];
    let mean_stderr = |sweeps: u64| -> f64 {
        let sch = Schedule::new(100, sweeps, 1).unwrap();
        (0..16u64)
            .map(|seed| run_chain(l.clone(), p, sch, seed, RunOptions::default(), &obs).unwrap()[0].stderr)
            .sum::<f64>()
            / 16.0
    };
    let ratio = mean_stderr(40_000) / mean_stderr(20_000);
    assert!((0.6..=0.85).contains(&ratio), "{ratio}");
}

#[test]
fn autocorrelation_sets_a_finite_burn_in() {
    let l = Arc::new(build_lattice(4, FrozenSpec::minus().with_segment(Segment::left_of_origin(2))).unwrap());
    let tau = measure_autocorrelation(l, ModelParams::new(1.0).unwrap(), Observable::Magnetization, 100, 20_000, 3)
        .unwrap();
    assert!(tau >= 0.5 && tau < 50.0, "{tau}");
    assert!(suggested_burn_in(tau) >= 5);
}

#[test]
fn raster_stream_replays_the_chain() {
    let l = Arc::new(build_lattice(3, FrozenSpec::minus().with_segment(Segment::left_of_origin(1))).unwrap());
    let p = ModelParams::new(0.9).unwrap();
    let sch = Schedule::new(10, 64, 4).unwrap();
    let mut w = RasterWriter::new(Vec::new(), &l).unwrap();
    let mut seen = Vec::new();
    run_replica(l.clone(), p, sch, Dynamics::HeatBath, 7, 0, |c, sweep| {
        seen.push((sweep, c.free_spins().collect::<Vec<_>>()));
        w.write(sweep, c)
    })
    .unwrap();
    let bytes = w.finish().unwrap();
    let mut r = RasterReader::new(&bytes[..]).unwrap();
    assert_eq!(r.header().n_free as usize, l.free_count());
    assert_eq!(r.header().half_side, 3);
    for expected in &seen {
        assert_eq!(r.next_record().unwrap().as_ref(), Some(expected));
    }
    assert_eq!(seen.len(), 16);
    assert_eq!(seen[0].0, 14);
    assert!(r.next_record().unwrap().is_none());
}
