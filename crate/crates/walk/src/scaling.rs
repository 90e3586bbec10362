//! Finite-size scaling checks on ballot probabilities.

use crate::ballot::{ballot_dp, certified_row, min_height_cap};
use crate::error::{Error, Result};
use crate::harmonic::{h_plus_table, DEFAULT_HORIZON};
use crate::steps::StepDistribution;

/// `δ` of the middle height window `[N^{1/2-δ}, N^{1/2}]`.
pub const DELTA: f64 = 0.01;
/// Fits with a lower coefficient of determination are flagged.
pub const MIN_R_SQUARED: f64 = 0.99;

/// Least-squares line through `(x, y)`: `(slope, intercept, R²)`. A constant
/// `y` has `R² = 1`.
pub fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    (slope, my - slope * mx, r2)
}

fn check_list(n_list: &[usize]) -> Result<()> {
    if n_list.len() < 4 || n_list.windows(2).any(|w| w[1] <= w[0]) || n_list[0] == 0 {
        return Err(Error::Parameter(format!("need at least 4 increasing sizes, got {n_list:?}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentFit {
    /// `(N, probability)`.
    pub points: Vec<(usize, f64)>,
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub flagged: bool,
}

/// Slope of `ln ballot(N, u, v)` against `ln N`.
pub fn fit_exponent(steps: &StepDistribution, u: i64, v: i64, n_list: &[usize]) -> Result<ExponentFit> {
    check_list(n_list)?;
    let mut points = Vec::new();
    let mut flagged = false;
    for &n in n_list {
        let r = ballot_dp(n, u, v, steps, min_height_cap(n))?;
        if !(r.probability > 0.0) {
            return Err(Error::Parameter(format!("ballot probability vanishes at N={n}, u={u}, v={v}")));
        }
        flagged |= r.flagged;
        points.push((n, r.probability));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(n, p)| ((n as f64).ln(), p.ln())).collect();
    let (exponent, intercept, r_squared) = linear_fit(&logs);
    Ok(ExponentFit { points, exponent, intercept, r_squared, flagged: flagged || r_squared < MIN_R_SQUARED })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiddleRow {
    pub n: usize,
    pub v: i64,
    pub probability: f64,
    /// `probability / (h⁺(1) v e^{-v²/2N} Var(ζ) N^{-3/2})`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiddleReport {
    pub rows: Vec<MiddleRow>,
    /// `max ratio / min ratio - 1`.
    pub spread: f64,
    pub flagged: bool,
}

/// Integers of the window `[⌊N^{1/2-δ}⌋, ⌈N^{1/2}⌉]` ordered by distance to
/// `√N`.
pub fn middle_window(n: usize) -> Vec<i64> {
    let nf = n as f64;
    let lo = nf.powf(0.5 - DELTA).floor() as i64;
    let hi = nf.sqrt().ceil() as i64;
    let mut vs: Vec<i64> = (lo.max(1)..=hi).collect();
    vs.sort_by(|a, b| ((*a as f64 - nf.sqrt()).abs()).total_cmp(&(*b as f64 - nf.sqrt()).abs()).then(a.cmp(b)));
    vs
}

/// Start at height 1, end in the middle window; the ratio to the predicted
/// shape should not depend on `N`.
pub fn middle_regime(steps: &StepDistribution, n_list: &[usize]) -> Result<MiddleReport> {
    check_list(n_list)?;
    let var = steps.var_zeta();
    if var == 0.0 {
        return Err(Error::Parameter("middle regime needs Var(ζ) > 0".into()));
    }
    let h1 = h_plus_table(steps, 1, DEFAULT_HORIZON)?;
    let mut rows = Vec::new();
    let mut flagged = h1.flagged;
    for &n in n_list {
        let window = middle_window(n);
        let v_max = *window.iter().max().unwrap() as usize;
        let (row, _, _, f) = certified_row(n, 1, v_max, steps, min_height_cap(n));
        flagged |= f;
        // Periodic laws reach only one parity; take the nearest reachable v.
        let Some(&v) = window.iter().find(|&&v| row[v as usize - 1] > 0.0) else {
            return Err(Error::Parameter(format!("no reachable height in the middle window at N={n}")));
        };
        let p = row[v as usize - 1];
        let nf = n as f64;
        let shape = h1.at(1) * v as f64 * (-(v * v) as f64 / (2.0 * nf)).exp() * var * nf.powf(-1.5);
        rows.push(MiddleRow { n, v, probability: p, ratio: p / shape });
    }
    let max = rows.iter().map(|r| r.ratio).fold(f64::MIN, f64::max);
    let min = rows.iter().map(|r| r.ratio).fold(f64::MAX, f64::min);
    Ok(MiddleReport { rows, spread: max / min - 1.0, flagged })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusiveReport {
    /// `(N, u = v, √N · probability)`.
    pub values: Vec<(usize, i64, f64)>,
    /// `|a_{k+1} - a_k|` of the scaled values.
    pub differences: Vec<f64>,
    pub converging: bool,
}

/// `√N · ballot(N, a, a)` with `a = ⌊√N / 2⌋`; converges when the Cauchy
/// differences shrink.
pub fn diffusive_regime(steps: &StepDistribution, n_list: &[usize]) -> Result<DiffusiveReport> {
    if n_list.len() < 3 {
        return Err(Error::Parameter("need at least 3 sizes".into()));
    }
    let mut values = Vec::new();
    for &n in n_list {
        let a = (((n as f64).sqrt() / 2.0).floor() as i64).max(1);
        let r = ballot_dp(n, a, a, steps, min_height_cap(n))?;
        values.push((n, a, (n as f64).sqrt() * r.probability));
    }
    let differences: Vec<f64> = values.windows(2).map(|w| (w[1].2 - w[0].2).abs()).collect();
    let converging = differences.windows(2).all(|w| w[1] < w[0]);
    Ok(DiffusiveReport { values, differences, converging })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformityReport {
    /// `(N, max over u, v in [1, ⌊√N⌋] of ballot(N,u,v+1) / ballot(N,u,v))`.
    pub max_ratios: Vec<(usize, f64)>,
    /// Slope of the maximum against `ln N`.
    pub slope: f64,
    /// Largest maximum relative to the one at the smallest `N`.
    pub growth: f64,
}

pub fn endpoint_uniformity(steps: &StepDistribution, n_list: &[usize]) -> Result<UniformityReport> {
    if n_list.len() < 2 {
        return Err(Error::Parameter("need at least 2 sizes".into()));
    }
    let mut max_ratios = Vec::new();
    for &n in n_list {
        let m = ((n as f64).sqrt().floor() as usize).max(1);
        let mut best = 0.0f64;
        for u in 1..=m {
            let (row, _, _, _) = certified_row(n, u, m + 1, steps, min_height_cap(n));
            for v in 1..=m {
                let (a, b) = (row[v - 1], row[v]);
                if a > 0.0 {
                    best = best.max(b / a);
                }
            }
        }
        max_ratios.push((n, best));
    }
    let pts: Vec<(f64, f64)> = max_ratios.iter().map(|&(n, r)| ((n as f64).ln(), r)).collect();
    let (slope, _, _) = linear_fit(&pts);
    let reference = max_ratios[0].1;
    let growth = max_ratios.iter().map(|r| r.1).fold(0.0, f64::max) / reference;
    Ok(UniformityReport { max_ratios, slope, growth })
}
