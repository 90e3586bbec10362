//! `h⁺(x) = x - E_x Z_τ` with `τ` the first time the height is `<= 0`, and
//! `h⁻` for the reflected walk.

use crate::error::{Error, Result};
use crate::steps::StepDistribution;

/// Tail bound above which a value is flagged.
pub const HORIZON_TOLERANCE: f64 = 1e-8;
/// Default height horizon of the linear solve.
pub const DEFAULT_HORIZON: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicTable {
    /// `h(x)` for `x = 1..=x_max`, entry `x - 1`.
    pub values: Vec<f64>,
    pub horizon: usize,
    /// `max_x |h_H(x) - h_{2H}(x)|`.
    pub tail_bound: f64,
    pub flagged: bool,
}

impl HarmonicTable {
    pub fn at(&self, x: usize) -> f64 {
        self.values[x - 1]
    }
}

/// `E_x Z_τ` for `x = 1..=horizon`, heights above the horizon treated as the
/// horizon itself.
///
/// The system `(I - P) g = b` is banded with half-width `zeta_max` and an
/// M-matrix whenever downward steps exist, so elimination needs no pivoting.
fn overshoot(zeta: &[f64], kmax: usize, horizon: usize) -> Vec<f64> {
    let h = horizon;
    let bw = 2 * kmax + 1;
    // a[i][j - i + kmax]
    let mut a = vec![0.0f64; h * bw];
    let mut b = vec![0.0f64; h];
    for i in 0..h {
        let x = i as i64 + 1;
        a[i * bw + kmax] += 1.0;
        for (idx, &p) in zeta.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let y = x + idx as i64 - kmax as i64;
            if y <= 0 {
                b[i] += p * y as f64;
            } else {
                let j = (y.min(h as i64) - 1) as usize;
                a[i * bw + (j + kmax - i)] -= p;
            }
        }
    }
    for i in 0..h {
        let piv = a[i * bw + kmax];
        for r in i + 1..(i + kmax + 1).min(h) {
            let f = a[r * bw + (i + kmax - r)] / piv;
            if f == 0.0 {
                continue;
            }
            for c in i..(i + kmax + 1).min(h) {
                a[r * bw + (c + kmax - r)] -= f * a[i * bw + (c + kmax - i)];
            }
            b[r] -= f * b[i];
        }
    }
    let mut g = vec![0.0f64; h];
    for i in (0..h).rev() {
        let mut s = b[i];
        for c in i + 1..(i + kmax + 1).min(h) {
            s -= a[i * bw + (c + kmax - i)] * g[c];
        }
        g[i] = s / a[i * bw + kmax];
    }
    g
}

/// `h⁺(x)` for `x = 1..=x_max`, with the tail bound from doubling the horizon.
pub fn h_plus_table(steps: &StepDistribution, x_max: usize, horizon: usize) -> Result<HarmonicTable> {
    let zeta = steps.zeta_marginal();
    let kmax = steps.zeta_max() as usize;
    if zeta[..kmax].iter().all(|&p| p == 0.0) {
        return Err(Error::Parameter("the walk never steps down, so it never stops".into()));
    }
    if x_max == 0 || horizon < x_max.max(kmax + 1) {
        return Err(Error::Parameter(format!("need 1 <= x_max <= horizon, got {x_max}, {horizon}")));
    }
    let g1 = overshoot(&zeta, kmax, horizon);
    let g2 = overshoot(&zeta, kmax, 2 * horizon);
    let values: Vec<f64> = (0..x_max).map(|i| (i + 1) as f64 - g1[i]).collect();
    let tail_bound = (0..x_max).map(|i| (g1[i] - g2[i]).abs()).fold(0.0, f64::max);
    Ok(HarmonicTable { values, horizon, tail_bound, flagged: tail_bound > HORIZON_TOLERANCE })
}

pub fn h_minus_table(steps: &StepDistribution, x_max: usize, horizon: usize) -> Result<HarmonicTable> {
    h_plus_table(&steps.reflected(), x_max, horizon)
}

pub fn h_plus(x: usize, steps: &StepDistribution, horizon: usize) -> Result<f64> {
    if x == 0 {
        return Err(Error::Parameter("h is defined for x >= 1".into()));
    }
    Ok(h_plus_table(steps, x, horizon)?.at(x))
}

pub fn h_minus(x: usize, steps: &StepDistribution, horizon: usize) -> Result<f64> {
    h_plus(x, &steps.reflected(), horizon)
}
