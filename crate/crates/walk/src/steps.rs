//! Step laws `X = (θ, ζ)` of the effective walk: horizontal advance `θ >= 1`
//! and vertical displacement `ζ`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{ClusterMode, WeightModel};

/// Normalization tolerance for every step law.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;
/// Truncation of parametric laws: `|ζ| <= 60`, `θ <= 60`.
pub const PARAMETRIC_ZETA_MAX: i32 = 60;
pub const PARAMETRIC_THETA_MAX: u32 = 60;
/// Largest animal size accepted by [`build_steps_from_animals`].
pub const MAX_ANIMAL_EDGES: usize = 14;
/// Cutoff-free mass estimate below which an animal law is flagged.
pub const MIN_ANIMAL_MASS: f64 = 0.999;

#[derive(Debug, Clone, PartialEq)]
pub struct StepDistribution {
    /// `rows[θ - 1][ζ + zeta_max]`.
    rows: Vec<Vec<f64>>,
    zeta_max: i32,
    /// `(P(θ), P(ζ))` when the law is a product.
    factors: Option<(Vec<f64>, Vec<f64>)>,
    /// Estimated share of the untruncated law captured by the table.
    pub captured_mass: f64,
    pub flagged: bool,
}

impl StepDistribution {
    /// Normalizes a table of non-negative weights keyed by `(θ, ζ)`.
    pub fn from_weights(weights: &BTreeMap<(u32, i32), f64>) -> Result<Self> {
        let theta_max = weights.keys().map(|k| k.0).max().unwrap_or(0);
        let zeta_max = weights.keys().map(|k| k.1.abs()).max().unwrap_or(0);
        if weights.keys().any(|k| k.0 == 0) {
            return Err(Error::Parameter("steps must advance by θ >= 1".into()));
        }
        if weights.values().any(|&w| !(w >= 0.0 && w.is_finite())) {
            return Err(Error::Parameter("step weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.values().sum();
        if !(total > 0.0) {
            return Err(Error::Parameter("step law has no mass".into()));
        }
        let width = (2 * zeta_max + 1) as usize;
        let mut rows = vec![vec![0.0; width]; theta_max as usize];
        for (&(t, k), &w) in weights {
            rows[t as usize - 1][(k + zeta_max) as usize] = w / total;
        }
        Ok(StepDistribution { rows, zeta_max, factors: None, captured_mass: 1.0, flagged: false })
    }

    /// Product law `P(θ) P(ζ)` with `p_zeta` indexed by `ζ + zeta_max`.
    pub fn from_factors(p_theta: Vec<f64>, p_zeta: Vec<f64>) -> Result<Self> {
        if p_zeta.len() % 2 == 0 || p_theta.is_empty() {
            return Err(Error::Parameter("factor tables need θ >= 1 entries and an odd ζ width".into()));
        }
        let st: f64 = p_theta.iter().sum();
        let sz: f64 = p_zeta.iter().sum();
        if !(st > 0.0 && sz > 0.0) || p_theta.iter().chain(&p_zeta).any(|&p| !(p >= 0.0)) {
            return Err(Error::Parameter("factor tables must be non-negative with positive mass".into()));
        }
        let p_theta: Vec<f64> = p_theta.iter().map(|p| p / st).collect();
        let p_zeta: Vec<f64> = p_zeta.iter().map(|p| p / sz).collect();
        let zeta_max = (p_zeta.len() / 2) as i32;
        let rows = p_theta.iter().map(|&a| p_zeta.iter().map(|&b| a * b).collect()).collect();
        Ok(StepDistribution { rows, zeta_max, factors: Some((p_theta, p_zeta)), captured_mass: 1.0, flagged: false })
    }

    /// `θ = 1`, `ζ = ±1` with probability 1/2 each.
    pub fn simple() -> Self {
        Self::from_factors(vec![1.0], vec![0.5, 0.0, 0.5]).expect("valid law")
    }

    /// `θ = 1`, `ζ = 0`.
    pub fn degenerate() -> Self {
        Self::from_factors(vec![1.0], vec![1.0]).expect("valid law")
    }

    pub fn theta_max(&self) -> u32 {
        self.rows.len() as u32
    }

    pub fn zeta_max(&self) -> i32 {
        self.zeta_max
    }

    pub fn factors(&self) -> Option<(&[f64], &[f64])> {
        self.factors.as_ref().map(|(a, b)| (a.as_slice(), b.as_slice()))
    }

    pub fn prob(&self, theta: u32, zeta: i32) -> f64 {
        if theta == 0 || theta > self.theta_max() || zeta.abs() > self.zeta_max {
            return 0.0;
        }
        self.rows[theta as usize - 1][(zeta + self.zeta_max) as usize]
    }

    /// Row `θ` indexed by `ζ + zeta_max`.
    pub fn row(&self, theta: u32) -> &[f64] {
        &self.rows[theta as usize - 1]
    }

    /// Non-zero entries `(θ, ζ, p)` in `(θ, ζ)` order.
    pub fn entries(&self) -> impl Iterator<Item = (u32, i32, f64)> + '_ {
        self.rows.iter().enumerate().flat_map(move |(t, row)| {
            row.iter().enumerate().filter(|(_, &p)| p > 0.0).map(move |(k, &p)| (t as u32 + 1, k as i32 - self.zeta_max, p))
        })
    }

    pub fn total_mass(&self) -> f64 {
        self.rows.iter().flatten().sum()
    }

    /// `P(ζ = k)` indexed by `k + zeta_max`.
    pub fn zeta_marginal(&self) -> Vec<f64> {
        let mut m = vec![0.0; (2 * self.zeta_max + 1) as usize];
        for row in &self.rows {
            for (a, b) in m.iter_mut().zip(row) {
                *a += b;
            }
        }
        m
    }

    pub fn theta_marginal(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn mean_theta(&self) -> f64 {
        self.theta_marginal().iter().enumerate().map(|(t, p)| (t + 1) as f64 * p).sum()
    }

    pub fn mean_zeta(&self) -> f64 {
        self.zeta_marginal().iter().enumerate().map(|(k, p)| (k as i32 - self.zeta_max) as f64 * p).sum()
    }

    pub fn var_zeta(&self) -> f64 {
        let mu = self.mean_zeta();
        self.zeta_marginal().iter().enumerate().map(|(k, p)| ((k as i32 - self.zeta_max) as f64 - mu).powi(2) * p).sum()
    }

    /// `P(θ, ζ) == P(θ, -ζ)` bit for bit.
    pub fn is_symmetric(&self) -> bool {
        self.rows.iter().all(|r| r.iter().eq(r.iter().rev()))
    }

    /// The law of `(θ, -ζ)`.
    pub fn reflected(&self) -> Self {
        let mut out = self.clone();
        for r in &mut out.rows {
            r.reverse();
        }
        if let Some((_, z)) = &mut out.factors {
            z.reverse();
        }
        out
    }

    /// Exponential envelope of the `ζ` marginal: `c` from a least-squares fit
    /// of `ln P(ζ = k)` over `1 <= |k| <= k_max` (both signs pooled), and the
    /// smallest `A` with `P(ζ = k) <= A e^{-c|k|}` for every `k`.
    pub fn fit_localization(&self, k_max: i32) -> Option<(f64, f64)> {
        let m = self.zeta_marginal();
        let pk = |k: i32| if k.abs() > self.zeta_max { 0.0 } else { m[(k + self.zeta_max) as usize] };
        let pts: Vec<(f64, f64)> = (1..=k_max.min(self.zeta_max))
            .map(|k| (k as f64, 0.5 * (pk(k) + pk(-k))))
            .filter(|&(_, p)| p > 0.0)
            .map(|(k, p)| (k, p.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let c = -ols_slope(&pts);
        let a = (-self.zeta_max..=self.zeta_max).map(|k| pk(k) * (c * k.abs() as f64).exp()).fold(0.0, f64::max);
        Some((a, c))
    }
}

fn ols_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// `P(θ = t, ζ = k) ∝ q^{t-1} e^{-c|k|}`, `|k| <= 60`, `t <= 60`. An infinite
/// `c` gives `ζ ≡ 0`.
pub fn parametric_steps(c: f64, q: f64) -> Result<StepDistribution> {
    if !(c > 0.0) || !(q > 0.0 && q < 1.0) {
        return Err(Error::Parameter(format!("parametric law needs c > 0 and 0 < q < 1, got c={c}, q={q}")));
    }
    let p_theta: Vec<f64> = (0..PARAMETRIC_THETA_MAX).map(|t| q.powi(t as i32)).collect();
    let p_zeta: Vec<f64> = if c.is_infinite() {
        vec![1.0]
    } else {
        (-PARAMETRIC_ZETA_MAX..=PARAMETRIC_ZETA_MAX).map(|k| (-c * k.abs() as f64).exp()).collect()
    };
    StepDistribution::from_factors(p_theta, p_zeta)
}

/// Counts of irreducible pieces by `(θ, ζ, length)`.
///
/// A piece starts at the origin with a step to `(1, 0)`, keeps every later
/// vertex in columns `1..=θ` and ends at `(θ, ζ)`, where the next piece
/// starts with its own step right. It is irreducible when each column
/// boundary `x = c + 1/2`, `1 <= c < θ`, is crossed at least three times,
/// so no edge inside it splits the path.
pub fn count_animals(max_edges: usize) -> BTreeMap<(u32, i32, usize), u64> {
    struct Search {
        max_edges: usize,
        path: Vec<(i32, i32)>,
        crossings: Vec<u32>,
        max_x: i32,
        out: BTreeMap<(u32, i32, usize), u64>,
    }
    impl Search {
        fn record(&mut self) {
            let &(x, y) = self.path.last().unwrap();
            if x == self.max_x && (1..x as usize).all(|c| self.crossings[c] >= 3) {
                *self.out.entry((x as u32, y, self.path.len() - 1)).or_default() += 1;
            }
        }

        fn go(&mut self) {
            self.record();
            if self.path.len() > self.max_edges {
                return;
            }
            let (x, y) = *self.path.last().unwrap();
            for (dx, dy) in crate::saw::STEPS {
                let nxt = (x + dx, y + dy);
                if nxt.0 < 1 || self.path.contains(&nxt) {
                    continue;
                }
                // Boundary between columns min(x, nx) and min(x, nx) + 1.
                let boundary = if dx != 0 { Some(x.min(nxt.0) as usize) } else { None };
                if let Some(b) = boundary {
                    if b >= self.crossings.len() {
                        self.crossings.resize(b + 1, 0);
                    }
                    self.crossings[b] += 1;
                }
                let old_max = self.max_x;
                self.max_x = self.max_x.max(nxt.0);
                self.path.push(nxt);
                self.go();
                self.path.pop();
                self.max_x = old_max;
                if let Some(b) = boundary {
                    self.crossings[b] -= 1;
                }
            }
        }
    }
    let mut s = Search { max_edges, path: vec![(0, 0), (1, 0)], crossings: vec![1, 0], max_x: 1, out: BTreeMap::new() };
    s.go();
    s.out
}

/// Step law induced by irreducible pieces with weight `e^{-β'|γ|}`.
///
/// The raw piece weights `s(θ, ζ)` are turned into probabilities by the
/// exponential tilt `P(θ, ζ) = s(θ, ζ) e^{τθ}` with `τ` chosen so the
/// truncated table has mass 1. The untruncated mass is estimated by
/// extending the last two length shells geometrically.
pub fn build_steps_from_animals(model: &WeightModel, size_cutoff: usize) -> Result<StepDistribution> {
    if model.cluster != ClusterMode::None {
        return Err(Error::ClusterModeUnsupported);
    }
    if !(1..=MAX_ANIMAL_EDGES).contains(&size_cutoff) {
        return Err(Error::TooLarge(format!("animal cutoff {size_cutoff} outside 1..={MAX_ANIMAL_EDGES}")));
    }
    let beta = model.beta_prime;
    let counts = count_animals(size_cutoff);
    let tilted = |tau: f64| -> f64 {
        counts.iter().map(|(&(t, _, l), &n)| n as f64 * (-beta * l as f64 + tau * t as f64).exp()).sum()
    };
    // The tilted mass increases in τ from below 1 (at τ very negative) to
    // above 1 somewhere under β' + ln(#pieces).
    let (mut lo, mut hi) = (-50.0f64, beta + 50.0);
    if !(tilted(lo) < 1.0 && tilted(hi) > 1.0) {
        return Err(Error::Parameter(format!("no normalizing tilt for beta' = {beta}")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tilted(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    let mut weights: BTreeMap<(u32, i32), f64> = BTreeMap::new();
    let mut shells = vec![0.0f64; size_cutoff + 1];
    for (&(t, k, l), &n) in &counts {
        let w = n as f64 * (-beta * l as f64 + tau * t as f64).exp();
        *weights.entry((t, k)).or_default() += w;
        shells[l] += w;
    }
    let mut law = StepDistribution::from_weights(&weights)?;
    let (last, prev) = (shells[size_cutoff], shells[size_cutoff - 1]);
    let tail = if size_cutoff >= 2 && prev > 0.0 && last < prev {
        let rho = last / prev;
        last * rho / (1.0 - rho)
    } else {
        f64::INFINITY
    };
    let total: f64 = shells.iter().sum();
    law.captured_mass = total / (total + tail);
    law.flagged = law.captured_mass < MIN_ANIMAL_MASS;
    Ok(law)
}
