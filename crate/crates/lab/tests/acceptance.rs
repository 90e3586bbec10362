//! Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers as
//! arguments to run a subset.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use schn_core::mc::Schedule;
use schn_lab::config::{ExperimentConfig, ExperimentKind, LawSpec};
use schn_lab::validation::{fkg_grid, grid_geometries, oracle_cross_check, sampler_cross_check, GRID_BETAS};
use schn_lab::walk_suite::{exponent_tolerance, law_report, MIDDLE_SPREAD, UNIFORMITY_SLOPE};
use schn_lab::{run_experiment, Summary};
use schn_walk::ensemble::{endpoint_ratio, vertical_ratio};
use schn_walk::WeightModel;

struct Outcome {
    pass: bool,
    detail: String,
}

fn within(elapsed: Duration, limit_s: u64) -> bool {
    elapsed <= Duration::from_secs(limit_s)
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run_shipped(name: &str) -> (Summary, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let mut c = ExperimentConfig::load(&config_path(name)).unwrap();
    c.out_dir = dir.path().to_path_buf();
    (run_experiment(&c).unwrap(), dir)
}

fn failures(s: &Summary) -> Vec<String> {
    s.verdicts.iter().filter(|v| !v.pass).map(|v| format!("{}={}", v.property, v.measured)).collect()
}

fn oracle() -> Outcome {
    let t = Instant::now();
    let r = oracle_cross_check(&grid_geometries(), &GRID_BETAS).unwrap();
    let el = t.elapsed();
    Outcome {
        pass: r.max_discrepancy <= 1e-12 && within(el, 30),
        detail: format!("lattices={} comparisons={} max_diff={:e} time={:.1}s", r.lattices, r.comparisons, r.max_discrepancy, el.as_secs_f64()),
    }
}

fn sampler() -> Outcome {
    let t = Instant::now();
    let r = sampler_cross_check(40, Schedule::new(1000, 20_000, 1).unwrap()).unwrap();
    let el = t.elapsed();
    Outcome {
        pass: r.runs == 40 && r.agreement() >= 0.95 && within(el, 180),
        detail: format!(
            "agreement={:.4} ({}/{}) clean_runs={}/{} time={:.1}s",
            r.agreement(),
            r.agreeing,
            r.comparisons,
            r.clean_runs,
            r.runs,
            el.as_secs_f64()
        ),
    }
}

fn fkg() -> Outcome {
    let t = Instant::now();
    let r = fkg_grid(&GRID_BETAS).unwrap();
    Outcome {
        pass: r.violations == 0 && r.audits > 0,
        detail: format!("audits={} violations={} worst_margin={:e} time={:.1}s", r.audits, r.violations, r.worst_margin, t.elapsed().as_secs_f64()),
    }
}

fn experiment(name: &str, limit_s: u64) -> Outcome {
    let t = Instant::now();
    let (s, _dir) = run_shipped(name);
    let el = t.elapsed();
    let bad = failures(&s);
    Outcome {
        pass: bad.is_empty() && !s.verdicts.is_empty() && within(el, limit_s),
        detail: format!("verdicts={} failed={:?} time={:.1}s", s.verdicts.len(), bad, el.as_secs_f64()),
    }
}

fn ensemble() -> Outcome {
    let t = Instant::now();
    let mut problems = Vec::new();
    let mut worst_tail = 0.0f64;
    let mut last_rate = [0.0; 3];
    for beta in [1.5, 2.0, 3.0] {
        let m = WeightModel::new(beta).unwrap();
        for (i, v1) in (2..=4).enumerate() {
            let r = vertical_ratio(v1, 0, &m, 8).unwrap();
            worst_tail = worst_tail.max(r.numerator.relative_tail()).max(r.denominator.relative_tail());
            if r.flagged || r.ratio > (-0.8 * beta).exp() {
                problems.push(format!("vertical beta={beta} v1={v1} ratio={:e}", r.ratio));
            }
            if r.rate(beta) <= last_rate[i] {
                problems.push(format!("rate not increasing at beta={beta} v1={v1}"));
            }
            last_rate[i] = r.rate(beta);
        }
    }
    // Endpoints above the diffusive window `v <= √N`.
    let mut checked = 0;
    for beta in [2.0, 3.0] {
        let m = WeightModel::new(beta).unwrap();
        for n in 1..=8 {
            for u in 0..=3 {
                for v in u + 1..=4 {
                    if (v as f64) <= (n as f64).sqrt() {
                        continue;
                    }
                    let r = endpoint_ratio(n, u, v, &m, 8).unwrap();
                    worst_tail = worst_tail.max(r.lower.relative_tail()).max(r.upper.relative_tail());
                    checked += 1;
                    if r.flagged || r.ratio >= 1.0 {
                        problems.push(format!("endpoint beta={beta} N={n} u={u} v={v} ratio={:e}", r.ratio));
                    }
                }
            }
        }
    }
    let el = t.elapsed();
    Outcome {
        pass: problems.is_empty() && worst_tail < 0.01 && within(el, 300),
        detail: format!(
            "endpoint_checks={checked} worst_tail={worst_tail:e} problems={problems:?} time={:.1}s",
            el.as_secs_f64()
        ),
    }
}

fn walk_config() -> ExperimentConfig {
    let mut c = ExperimentConfig::load(&config_path("walk_suite.conf")).unwrap();
    c.walk.laws = vec![LawSpec::Simple, LawSpec::Animal { beta: 2.0 }];
    c.walk.mc_walks = 0;
    c
}

fn walk_scaling() -> Outcome {
    let t = Instant::now();
    let c = walk_config();
    let mut detail = Vec::new();
    let mut pass = c.walk.sizes == [64, 128, 256, 512];
    for &law in &c.walk.laws {
        let r = law_report(law, &c, 1).unwrap();
        let dev = (r.exponent.exponent + 1.5).abs();
        let spread = r.middle.as_ref().map_or(f64::INFINITY, |m| m.spread);
        pass &= dev <= exponent_tolerance(&law) && spread < MIDDLE_SPREAD && r.flags() == 0;
        if law == LawSpec::Simple {
            pass &= r.exact_error.is_some_and(|e| e <= 1e-12);
        }
        detail.push(format!("{}: exponent={:.4} middle_spread={spread:.4} exact_error={:?}", law.label(), r.exponent.exponent, r.exact_error));
    }
    let el = t.elapsed();
    Outcome { pass: pass && within(el, 120), detail: format!("{} time={:.1}s", detail.join("; "), el.as_secs_f64()) }
}

fn walk_uniformity() -> Outcome {
    let t = Instant::now();
    let c = walk_config();
    let mut detail = Vec::new();
    let mut pass = c.walk.uniformity_sizes.first() == Some(&16) && c.walk.uniformity_sizes.last() == Some(&256);
    for &law in &c.walk.laws {
        let r = law_report(law, &c, 1).unwrap();
        pass &= r.uniformity.slope.abs() <= UNIFORMITY_SLOPE;
        detail.push(format!("{}: slope={:e}", law.label(), r.uniformity.slope));
    }
    let el = t.elapsed();
    Outcome { pass: pass && within(el, 120), detail: format!("{} time={:.1}s", detail.join("; "), el.as_secs_f64()) }
}

fn small_config(kind: ExperimentKind) -> ExperimentConfig {
    let mut c = ExperimentConfig::defaults(kind);
    c.seed = 77;
    c.geometry.m = 8;
    c.geometry.segment_lengths = vec![3, 5];
    c.geometry.probes = vec![1, 2];
    c.geometry.gap = 1;
    c.betas = vec![1.0];
    c.sampler.burn_in = 100;
    c.sampler.sweeps = 2000;
    c.sampler.replicas = 2;
    c.walk.sizes = vec![16, 32, 64, 128];
    c.walk.uniformity_sizes = vec![16, 32, 64];
    c.walk.mc_walks = 500;
    c
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect()
}

fn determinism() -> Outcome {
    let t = Instant::now();
    let mut detail = Vec::new();
    let mut pass = true;
    for kind in [ExperimentKind::OneSidedDecay, ExperimentKind::TwoSidedWetting, ExperimentKind::CutHeight, ExperimentKind::WalkSuite] {
        let runs: Vec<BTreeMap<String, Vec<u8>>> = (0..2)
            .map(|_| {
                let dir = tempfile::tempdir().unwrap();
                let mut c = small_config(kind);
                c.out_dir = dir.path().to_path_buf();
                run_experiment(&c).unwrap();
                read_dir(dir.path())
            })
            .collect();
        let same = runs[0] == runs[1] && runs[0].contains_key("summary.json") && runs[0].len() >= 2;
        pass &= same;
        detail.push(format!("{}: files={} identical={same}", kind.name(), runs[0].len()));
    }
    Outcome { pass, detail: format!("{} time={:.1}s", detail.join("; "), t.elapsed().as_secs_f64()) }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("oracle_cross_validation", oracle),
        ("sampler_correctness", sampler),
        ("fkg_monotonicity", fkg),
        ("one_sided_decay", || experiment("one_sided_decay.conf", 600)),
        ("cut_height_localization", || experiment("cut_height.conf", 600)),
        ("contour_ensemble_ratios", ensemble),
        ("walk_scaling", walk_scaling),
        ("endpoint_ratio_uniformity", walk_uniformity),
        ("determinism", determinism),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut all = true;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !selected.is_empty() && !selected.contains(&(i + 1)) {
            continue;
        }
        let o = f();
        all &= o.pass;
        println!("{} {}. {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    if all { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
