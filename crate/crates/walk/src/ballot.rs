//! Probability that the walk started at `(-N, u)` stays positive and lands
//! exactly on `(0, v)`.

use std::io::{self, Write};

use num_bigint::BigUint;
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::steps::StepDistribution;

/// Relative change under cap doubling above which a result is flagged.
pub const CAP_SENSITIVITY_TOLERANCE: f64 = 1e-10;
/// Cap doublings tried before giving up and flagging.
const MAX_CAP_DOUBLINGS: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Dp,
    Mc,
    Exact,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Dp => "dp",
            Method::Mc => "mc",
            Method::Exact => "exact",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BallotResult {
    pub probability: f64,
    pub method: Method,
    pub stderr: Option<f64>,
    pub height_cap: usize,
    pub cap_sensitivity: f64,
    pub flagged: bool,
}

fn check_endpoints(n: usize, u: i64, v: i64) -> Result<()> {
    if n == 0 || u < 1 || v < 1 {
        return Err(Error::Parameter(format!("ballot needs N >= 1 and u, v >= 1, got N={n}, u={u}, v={v}")));
    }
    Ok(())
}

/// Smallest cap accepted for a given `N`.
pub fn min_height_cap(n: usize) -> usize {
    (4.0 * (n as f64).sqrt()).ceil() as usize
}

/// Arrival probabilities at `(0, v)` for `v = 1..=cap`, heights above `cap`
/// discarded. Entry `v - 1` of the result.
pub fn arrival_row(n: usize, u: usize, steps: &StepDistribution, cap: usize) -> Vec<f64> {
    let width = cap + 1; // heights 0..=cap, 0 unused
    let zmax = steps.zeta_max() as i64;
    let tmax = steps.theta_max() as usize;
    let mut f = vec![0.0f64; (n + 1) * width];
    if u <= cap {
        f[u] = 1.0;
    }
    let mut g = vec![0.0f64; width];
    for t in 0..n {
        let (head, tail) = f.split_at_mut((t + 1) * width);
        let cur = &head[t * width..];
        if cur.iter().all(|&p| p == 0.0) {
            continue;
        }
        let convolve = |row: &[f64], out: &mut [f64]| {
            for (z, &p) in cur.iter().enumerate().skip(1) {
                if p == 0.0 {
                    continue;
                }
                let lo = (1 - z as i64).max(-zmax);
                let hi = (cap as i64 - z as i64).min(zmax);
                for k in lo..=hi {
                    out[(z as i64 + k) as usize] += p * row[(k + zmax) as usize];
                }
            }
        };
        match steps.factors() {
            Some((p_theta, p_zeta)) => {
                g.iter_mut().for_each(|x| *x = 0.0);
                convolve(p_zeta, &mut g);
                for (th, &pt) in p_theta.iter().enumerate().take(tmax) {
                    let t2 = t + th + 1;
                    if t2 > n || pt == 0.0 {
                        continue;
                    }
                    let dst = &mut tail[(t2 - t - 1) * width..(t2 - t) * width];
                    for (d, &s) in dst.iter_mut().zip(&g) {
                        *d += pt * s;
                    }
                }
            }
            None => {
                for th in 1..=tmax {
                    let t2 = t + th;
                    if t2 > n {
                        break;
                    }
                    let dst = &mut tail[(t2 - t - 1) * width..(t2 - t) * width];
                    convolve(steps.row(th as u32), dst);
                }
            }
        }
    }
    f[n * width + 1..].to_vec()
}

/// Arrival row with the cap doubled until the probability at every height up
/// to `v_max` changes by at most [`CAP_SENSITIVITY_TOLERANCE`] relative. The
/// row and cap returned are the larger of the last pair compared.
pub fn certified_row(n: usize, u: usize, v_max: usize, steps: &StepDistribution, start_cap: usize) -> (Vec<f64>, usize, f64, bool) {
    let mut cap = start_cap.max(min_height_cap(n)).max(u).max(v_max + 1);
    let mut row = arrival_row(n, u, steps, cap);
    let mut sensitivity = f64::INFINITY;
    for _ in 0..MAX_CAP_DOUBLINGS {
        let next = arrival_row(n, u, steps, 2 * cap);
        sensitivity = (0..v_max)
            .map(|i| {
                let (a, b) = (row[i], next[i]);
                if b == 0.0 { if a == 0.0 { 0.0 } else { f64::INFINITY } } else { (a - b).abs() / b }
            })
            .fold(0.0, f64::max);
        cap *= 2;
        row = next;
        if sensitivity <= CAP_SENSITIVITY_TOLERANCE {
            return (row, cap, sensitivity, false);
        }
    }
    (row, cap, sensitivity, true)
}

/// Ballot probability by forward dynamic programming over (abscissa, height).
pub fn ballot_dp(n: usize, u: i64, v: i64, steps: &StepDistribution, height_cap: usize) -> Result<BallotResult> {
    check_endpoints(n, u, v)?;
    if height_cap < min_height_cap(n) {
        return Err(Error::Parameter(format!("height cap {height_cap} below 4 sqrt(N) = {}", min_height_cap(n))));
    }
    let (row, cap, sens, flagged) = certified_row(n, u as usize, v as usize, steps, height_cap);
    Ok(BallotResult {
        probability: row[v as usize - 1],
        method: Method::Dp,
        stderr: None,
        height_cap: cap,
        cap_sensitivity: sens,
        flagged,
    })
}

/// Number of `±1` paths of `n` steps from `u` to `v` staying at heights >= 1.
pub fn simple_ballot_count(n: usize, u: u64, v: u64) -> BigUint {
    let top = (u as usize) + n + 1;
    let mut cur = vec![BigUint::from(0u32); top + 1];
    if (u as usize) <= top && u >= 1 {
        cur[u as usize] = BigUint::from(1u32);
    }
    for _ in 0..n {
        let mut next = vec![BigUint::from(0u32); top + 1];
        for z in 1..top {
            if cur[z] == BigUint::from(0u32) {
                continue;
            }
            if z + 1 <= top {
                next[z + 1] += &cur[z];
            }
            if z > 1 {
                next[z - 1] += &cur[z];
            }
        }
        cur = next;
    }
    cur.get(v as usize).cloned().unwrap_or_default()
}

fn binomial(n: u64, k: i64) -> BigUint {
    if k < 0 || k as u64 > n {
        return BigUint::from(0u32);
    }
    let k = (k as u64).min(n - k as u64);
    let mut r = BigUint::from(1u32);
    for i in 0..k {
        r = r * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    r
}

/// Reflection count `C(n, (n+v-u)/2) - C(n, (n+v+u)/2)` of `±1` paths from
/// `u` to `v` avoiding 0.
pub fn reflection_count(n: u64, u: u64, v: u64) -> BigUint {
    let (n_i, u_i, v_i) = (n as i64, u as i64, v as i64);
    if (n_i + v_i - u_i).rem_euclid(2) != 0 {
        return BigUint::from(0u32);
    }
    let a = binomial(n, (n_i + v_i - u_i) / 2);
    let b = binomial(n, (n_i + v_i + u_i) / 2);
    a - b
}

/// Exact ballot probability of the simple walk, from the integer count.
pub fn simple_ballot_exact(n: usize, u: u64, v: u64) -> BallotResult {
    let count = simple_ballot_count(n, u, v);
    // count / 2^n without overflow: shift to keep 60 significant bits.
    let bits = count.bits();
    let shift = bits.saturating_sub(60);
    let mant = (&count >> shift).iter_u64_digits().next().unwrap_or(0) as f64;
    let probability = mant * 2f64.powi(shift as i32 - n as i32);
    BallotResult { probability, method: Method::Exact, stderr: None, height_cap: u as usize + n, cap_sensitivity: 0.0, flagged: false }
}

/// Per-walk stream: the walk index selects an independent ChaCha stream.
pub fn walk_rng(seed: u64, walk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(walk);
    rng
}

/// Ballot probability by direct simulation. A walk succeeds when some
/// `T_i = 0` with `Z_i = v` and all heights before were positive; a walk whose
/// abscissa jumps past 0 fails.
pub fn ballot_mc(n: usize, u: i64, v: i64, steps: &StepDistribution, n_walks: u64, seed: u64) -> Result<BallotResult> {
    check_endpoints(n, u, v)?;
    if n_walks == 0 {
        return Err(Error::Parameter("need at least one walk".into()));
    }
    let entries: Vec<(u32, i32, f64)> = steps.entries().collect();
    let dist = WeightedIndex::new(entries.iter().map(|e| e.2)).map_err(|e| Error::Parameter(e.to_string()))?;
    let target = n as i64;
    let hits: u64 = (0..n_walks)
        .into_par_iter()
        .map(|w| {
            let mut rng = walk_rng(seed, w);
            let (mut t, mut z) = (0i64, u);
            loop {
                let (th, k, _) = entries[dist.sample(&mut rng)];
                t += th as i64;
                z += k as i64;
                if z <= 0 || t > target {
                    return 0;
                }
                if t == target {
                    return u64::from(z == v);
                }
            }
        })
        .sum();
    let p = hits as f64 / n_walks as f64;
    Ok(BallotResult {
        probability: p,
        method: Method::Mc,
        stderr: Some((p * (1.0 - p) / n_walks as f64).sqrt()),
        height_cap: 0,
        cap_sensitivity: 0.0,
        flagged: false,
    })
}

/// `ballot(N, u, v + 1) / ballot(N, u, v)`; `None` when the denominator
/// vanishes.
pub fn endpoint_ratio_walk(n: usize, u: i64, v: i64, steps: &StepDistribution) -> Result<Option<f64>> {
    check_endpoints(n, u, v)?;
    let (row, _, _, _) = certified_row(n, u as usize, v as usize + 1, steps, min_height_cap(n));
    let (a, b) = (row[v as usize - 1], row[v as usize]);
    Ok(if a > 0.0 { Some(b / a) } else { None })
}

pub const BALLOT_CSV_HEADER: &str = "N,u,v,method,probability,stderr,height_cap,cap_sensitivity";

pub fn write_ballot_row<W: Write>(out: &mut W, n: usize, u: i64, v: i64, r: &BallotResult) -> io::Result<()> {
    let stderr = r.stderr.map_or(String::new(), |s| format!("{s:e}"));
    writeln!(out, "{n},{u},{v},{},{:e},{stderr},{},{:e}", r.method.name(), r.probability, r.height_cap, r.cap_sensitivity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steps::parametric_steps;

    #[test]
    fn single_step_is_the_step_law() {
        let law = parametric_steps(0.9, 0.3).unwrap();
        for (u, v) in [(1, 1), (2, 5), (4, 1)] {
            let r = ballot_dp(1, u, v, &law, 4).unwrap();
            assert!((r.probability - law.prob(1, (v - u) as i32)).abs() < 1e-15);
        }
    }

    #[test]
    fn reflection_formula_matches_the_count() {
        for n in 1..=40 {
            for u in 1..=6 {
                for v in 1..=6 {
                    assert_eq!(simple_ballot_count(n, u, v), reflection_count(n as u64, u, v), "{n} {u} {v}");
                }
            }
        }
    }

    #[test]
    fn simple_walk_dp_matches_exact() {
        let law = StepDistribution::simple();
        for n in [2, 10, 31, 64] {
            for (u, v) in [(1, 1), (1, 2), (3, 5), (2, 2)] {
                let dp = ballot_dp(n, u, v, &law, min_height_cap(n)).unwrap();
                let ex = simple_ballot_exact(n, u as u64, v as u64);
                assert!((dp.probability - ex.probability).abs() <= 1e-13 * ex.probability.max(1e-300), "{n} {u} {v}");
                assert!(!dp.flagged);
            }
        }
    }

    #[test]
    fn degenerate_walk() {
        let law = StepDistribution::degenerate();
        assert_eq!(ballot_dp(50, 3, 3, &law, 40).unwrap().probability, 1.0);
        assert_eq!(endpoint_ratio_walk(16, 1, 1, &law).unwrap(), Some(0.0));
    }

    #[test]
    fn mc_is_deterministic() {
        let law = parametric_steps(1.0, 0.2).unwrap();
        let a = ballot_mc(8, 1, 1, &law, 5000, 9).unwrap();
        let b = ballot_mc(8, 1, 1, &law, 5000, 9).unwrap();
        assert_eq!(a, b);
    }
}
