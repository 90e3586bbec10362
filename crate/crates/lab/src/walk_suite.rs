//! Ballot scaling, endpoint ratios and `h±` over the configured step laws.

use std::fmt::Write as _;

use rayon::prelude::*;

use schn_walk::ballot::{
    ballot_dp, ballot_mc, endpoint_ratio_walk, min_height_cap, reflection_count, simple_ballot_count,
    simple_ballot_exact, write_ballot_row, BallotResult, BALLOT_CSV_HEADER,
};
use schn_walk::harmonic::{h_minus_table, h_plus_table, HarmonicTable, DEFAULT_HORIZON};
use schn_walk::scaling::{endpoint_uniformity, fit_exponent, middle_regime, ExponentFit, MiddleReport, UniformityReport};
use schn_walk::steps::{build_steps_from_animals, parametric_steps, StepDistribution};
use schn_walk::WeightModel;

use crate::config::{ExperimentConfig, LawSpec};
use crate::error::Result;
use crate::report::{num, point_seed, Report, Verdict};

/// Tolerance on the ballot exponent around `-3/2`.
pub fn exponent_tolerance(law: &LawSpec) -> f64 {
    match law {
        LawSpec::Animal { .. } => 0.2,
        _ => 0.15,
    }
}

pub const MIDDLE_SPREAD: f64 = 0.25;
pub const UNIFORMITY_SLOPE: f64 = 0.02;
/// Largest max ratio over all sizes relative to the one at the smallest size.
pub const UNIFORMITY_GROWTH: f64 = 1.1;
pub const EXACT_TOLERANCE: f64 = 1e-12;
/// Heights at which `h±` is tabulated.
pub const HARMONIC_HEIGHTS: usize = 40;

pub fn build_law(law: &LawSpec, animal_cutoff: usize) -> Result<StepDistribution> {
    Ok(match *law {
        LawSpec::Simple => StepDistribution::simple(),
        LawSpec::Degenerate => StepDistribution::degenerate(),
        LawSpec::Parametric { c, q } => parametric_steps(c, q)?,
        LawSpec::Animal { beta } => build_steps_from_animals(&WeightModel::new(beta)?, animal_cutoff)?,
    })
}

/// Everything computed for one law.
#[derive(Debug, Clone)]
pub struct LawReport {
    pub law: LawSpec,
    pub steps: StepDistribution,
    pub dp: Vec<(usize, BallotResult)>,
    pub exponent: ExponentFit,
    /// `None` for laws without vertical fluctuations.
    pub middle: Option<MiddleReport>,
    pub uniformity: UniformityReport,
    pub h_plus: Option<HarmonicTable>,
    pub h_minus: Option<HarmonicTable>,
    pub endpoint_ratios: Vec<(usize, Option<f64>)>,
    /// Largest relative DP error against the exact counts (simple law only).
    pub exact_error: Option<f64>,
    pub exact: Vec<(usize, BallotResult)>,
    /// Monte Carlo estimate at the smallest size.
    pub mc: Option<(usize, BallotResult)>,
}

impl LawReport {
    pub fn degenerate(&self) -> bool {
        self.steps.var_zeta() == 0.0
    }

    /// Flags raised by the step law, fits and harmonic tables.
    pub fn flags(&self) -> usize {
        [
            self.steps.flagged,
            self.exponent.flagged,
            self.middle.as_ref().is_some_and(|m| m.flagged),
            self.h_plus.as_ref().is_some_and(|h| h.flagged),
            self.h_minus.as_ref().is_some_and(|h| h.flagged),
        ]
        .iter()
        .filter(|&&f| f)
        .count()
    }
}

pub fn law_report(law: LawSpec, config: &ExperimentConfig, seed: u64) -> Result<LawReport> {
    let w = &config.walk;
    let steps = build_law(&law, w.animal_cutoff)?;
    let dp = w
        .sizes
        .iter()
        .map(|&n| Ok((n, ballot_dp(n, w.u, w.v, &steps, min_height_cap(n))?)))
        .collect::<Result<Vec<_>>>()?;
    let exponent = fit_exponent(&steps, w.u, w.v, &w.sizes)?;
    let fluctuates = steps.var_zeta() > 0.0;
    let middle = if fluctuates { Some(middle_regime(&steps, &w.sizes)?) } else { None };
    let uniformity = endpoint_uniformity(&steps, &w.uniformity_sizes)?;
    let (h_plus, h_minus) = if fluctuates {
        (
            Some(h_plus_table(&steps, HARMONIC_HEIGHTS, DEFAULT_HORIZON)?),
            Some(h_minus_table(&steps, HARMONIC_HEIGHTS, DEFAULT_HORIZON)?),
        )
    } else {
        (None, None)
    };
    let endpoint_ratios =
        w.sizes.iter().map(|&n| Ok((n, endpoint_ratio_walk(n, w.u, w.v, &steps)?))).collect::<Result<Vec<_>>>()?;
    let (mut exact, mut exact_error) = (Vec::new(), None);
    if law == LawSpec::Simple {
        let mut worst = 0.0f64;
        for (n, r) in &dp {
            let (u, v) = (w.u as u64, w.v as u64);
            if simple_ballot_count(*n, u, v) != reflection_count(*n as u64, u, v) {
                worst = f64::INFINITY;
            }
            let e = simple_ballot_exact(*n, u, v);
            let scale = e.probability.abs().max(f64::MIN_POSITIVE);
            worst = worst.max((r.probability - e.probability).abs() / scale);
            exact.push((*n, e));
        }
        exact_error = Some(worst);
    }
    let mc = if w.mc_walks > 0 {
        let n = *w.sizes.iter().min().expect("non-empty");
        Some((n, ballot_mc(n, w.u, w.v, &steps, w.mc_walks, seed)?))
    } else {
        None
    };
    Ok(LawReport { law, steps, dp, exponent, middle, uniformity, h_plus, h_minus, endpoint_ratios, exact_error, exact, mc })
}

/// Smallest increment of a harmonic table, and whether `h(x) >= x`.
fn harmonic_shape(t: &HarmonicTable) -> (f64, bool) {
    let inc = t.values.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let above = t.values.iter().enumerate().all(|(i, &h)| h >= (i + 1) as f64 - 1e-9);
    (inc, above)
}

pub const SCALING_CSV_HEADER: &str = "law,check,N,u,v,value";
pub const FIT_CSV_HEADER: &str =
    "law,var_zeta,exponent,r_squared,middle_spread,uniformity_slope,uniformity_growth,h_plus_1,h_minus_1,flags";

fn opt(x: Option<f64>) -> String {
    x.map_or(String::new(), num)
}

pub fn run_walk_suite(config: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let w = &config.walk;
    let reports: Vec<LawReport> = w
        .laws
        .par_iter()
        .enumerate()
        .map(|(k, &law)| law_report(law, config, point_seed(config.seed, k as u64)))
        .collect::<Result<_>>()?;

    let mut ballot = format!("law,{BALLOT_CSV_HEADER}\n");
    let mut scaling = format!("{SCALING_CSV_HEADER}\n");
    let mut fits = format!("{FIT_CSV_HEADER}\n");
    for r in &reports {
        let label = r.law.label();
        let rows = r.dp.iter().chain(&r.exact).chain(r.mc.iter());
        for (n, b) in rows {
            let mut line = Vec::new();
            write_ballot_row(&mut line, *n, w.u, w.v, b)?;
            ballot.push_str(&label);
            ballot.push(',');
            ballot.push_str(&String::from_utf8(line).expect("ascii"));
        }
        for &(n, p) in &r.exponent.points {
            let _ = writeln!(scaling, "{label},exponent_point,{n},{},{},{}", w.u, w.v, num(p));
        }
        for row in r.middle.iter().flat_map(|m| &m.rows) {
            let _ = writeln!(scaling, "{label},middle_ratio,{},1,{},{}", row.n, row.v, num(row.ratio));
        }
        for &(n, m) in &r.uniformity.max_ratios {
            let _ = writeln!(scaling, "{label},uniformity_max_ratio,{n},,,{}", num(m));
        }
        for &(n, e) in &r.endpoint_ratios {
            let _ = writeln!(scaling, "{label},endpoint_ratio,{n},{},{},{}", w.u, w.v, opt(e));
        }
        let _ = writeln!(
            fits,
            "{label},{},{},{},{},{},{},{},{},{}",
            num(r.steps.var_zeta()),
            num(r.exponent.exponent),
            num(r.exponent.r_squared),
            opt(r.middle.as_ref().map(|m| m.spread)),
            num(r.uniformity.slope),
            num(r.uniformity.growth),
            opt(r.h_plus.as_ref().map(|h| h.at(1))),
            opt(r.h_minus.as_ref().map(|h| h.at(1))),
            r.flags()
        );
    }
    report.artifact("walk_ballot.csv", &ballot)?;
    report.artifact("walk_scaling.csv", &scaling)?;
    report.artifact("walk_fits.csv", &fits)?;

    for r in &reports {
        let label = r.law.label();
        if r.degenerate() {
            report.warn(format!(
                "{label}: no vertical fluctuations, exponent {} reported and excluded from verdicts",
                r.exponent.exponent
            ));
            continue;
        }
        report.verdict(Verdict::at_most(
            format!("ballot_exponent({label})"),
            (r.exponent.exponent + 1.5).abs(),
            exponent_tolerance(&r.law),
        ));
        if let Some(m) = &r.middle {
            report.verdict(Verdict::at_most(format!("middle_regime_spread({label})"), m.spread, MIDDLE_SPREAD));
        }
        report.verdict(Verdict::at_most(
            format!("endpoint_uniformity_slope({label})"),
            r.uniformity.slope.abs(),
            UNIFORMITY_SLOPE,
        ));
        if r.uniformity.max_ratios[0].1 > 0.0 {
            report.verdict(Verdict::at_most(
                format!("endpoint_ratio_growth({label})"),
                r.uniformity.growth,
                UNIFORMITY_GROWTH,
            ));
        } else {
            report.warn(format!("{label}: adjacent endpoints are never both reachable, endpoint ratios vanish"));
        }
        for (name, t) in [("h_plus", &r.h_plus), ("h_minus", &r.h_minus)] {
            if let Some(t) = t {
                let (inc, above) = harmonic_shape(t);
                let measured = if above { inc } else { f64::NEG_INFINITY };
                report.verdict(Verdict::at_least(format!("{name}_nondecreasing({label})"), measured, 0.0));
            }
        }
        if let Some(err) = r.exact_error {
            report.verdict(Verdict::at_most(format!("reflection_agreement({label})"), err, EXACT_TOLERANCE));
        }
        if let Some((n, mc)) = &r.mc {
            let dp = &r.dp.iter().find(|(m, _)| m == n).expect("size computed").1;
            let se = mc.stderr.unwrap_or(0.0).max(1.0 / w.mc_walks as f64);
            report.verdict(Verdict::at_most(
                format!("mc_matches_dp({label},N={n})"),
                (mc.probability - dp.probability).abs() / se,
                3.0,
            ));
        }
        report.verdict(Verdict::at_most(format!("flags({label})"), r.flags() as f64, 0.0));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentKind;

    #[test]
    fn degenerate_law_is_excluded() {
        let mut c = ExperimentConfig::defaults(ExperimentKind::WalkSuite);
        c.walk.laws = vec![LawSpec::Degenerate];
        c.walk.mc_walks = 0;
        let r = law_report(LawSpec::Degenerate, &c, 1).unwrap();
        assert!(r.degenerate());
        assert_eq!(r.exponent.exponent, 0.0);
        assert!(r.middle.is_none() && r.h_plus.is_none());
    }

    #[test]
    fn simple_law_matches_the_exact_counts() {
        let mut c = ExperimentConfig::defaults(ExperimentKind::WalkSuite);
        c.walk.mc_walks = 0;
        let r = law_report(LawSpec::Simple, &c, 1).unwrap();
        assert!(r.exact_error.unwrap() <= EXACT_TOLERANCE);
        assert!((r.exponent.exponent + 1.5).abs() <= 0.15);
        assert_eq!(r.flags(), 0);
    }
}
