//! Truncated exact sums over contour arcs with weights `exp(-β|γ| + ΣΦ)`.

use std::collections::HashMap;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::model::{ClusterMode, WeightModel, MAX_CLUSTER_SIDE};
use crate::saw::{enumerate_paths, nonreversing_weight, Bounds, PathSpec, Pt};

/// Largest strip width accepted by [`enumerate_z`].
pub const MAX_WIDTH: i32 = 10;
/// Largest excess length `cutoff - (N + |u - v|)` accepted by [`enumerate_z`].
pub const MAX_EXCESS: usize = 8;
/// Tail bound above this fraction of `Z` marks a result unreliable.
pub const TAIL_TOLERANCE: f64 = 0.01;
/// Lengths past the cutoff summed exactly in the tail bound.
const TAIL_EXACT_LENGTHS: usize = 100;

/// Paths `(0, u) -> (N, v)` inside `0 <= x <= N`, `y >= 0`, of length at most
/// `cutoff`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SemistripEnsemble {
    pub n: i32,
    pub u: i32,
    pub v: i32,
    pub cutoff: usize,
}

impl SemistripEnsemble {
    pub fn new(n: i32, u: i32, v: i32, cutoff: usize) -> Self {
        SemistripEnsemble { n, u, v, cutoff }
    }

    /// Cutoff set `excess` edges above the shortest admissible length.
    pub fn with_excess(n: i32, u: i32, v: i32, excess: usize) -> Self {
        Self::new(n, u, v, Self::min_len_of(n, u, v) + excess)
    }

    fn min_len_of(n: i32, u: i32, v: i32) -> usize {
        (n.unsigned_abs() + u.abs_diff(v)) as usize
    }

    pub fn min_len(&self) -> usize {
        Self::min_len_of(self.n, self.u, self.v)
    }

    pub fn path_spec(&self) -> PathSpec {
        PathSpec::new((0, self.u), (self.n, self.v), self.cutoff, Bounds::semistrip(self.n))
    }

    fn diagnose(&self) -> Option<String> {
        if self.u < 0 || self.v < 0 {
            Some(format!("endpoint heights u={} v={} leave the semistrip", self.u, self.v))
        } else if self.cutoff < self.min_len() {
            Some(format!("cutoff {} is below the shortest path length {}", self.cutoff, self.min_len()))
        } else {
            None
        }
    }
}

/// A truncated partition function.
#[derive(Debug, Clone, PartialEq)]
pub struct ZResult {
    pub z: f64,
    pub path_count: u64,
    /// Upper bound on the weight of all omitted (longer) paths.
    pub truncation_bound: f64,
    /// Set when the endpoints are unreachable; `z` is then 0.
    pub diagnostic: Option<String>,
}

impl ZResult {
    pub fn relative_tail(&self) -> f64 {
        if self.z > 0.0 { self.truncation_bound / self.z } else { f64::INFINITY }
    }

    pub fn reliable(&self) -> bool {
        self.diagnostic.is_none() && self.relative_tail() <= TAIL_TOLERANCE
    }
}

/// Weighted sums over an enumerated path family.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PathSums {
    pub z: f64,
    /// Part of `z` whose first step goes down.
    pub z_down: f64,
    pub count: u64,
}

/// Integer path counts by length, split by whether the first step goes down.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LengthCounts {
    pub all: Vec<u64>,
    pub down: Vec<u64>,
}

impl LengthCounts {
    pub fn count(&self) -> u64 {
        self.all.iter().sum()
    }

    /// Sums `exp(-β L)` over the counted paths.
    pub fn sums(&self, beta: f64) -> PathSums {
        let w = |c: &[u64]| c.iter().enumerate().map(|(l, &n)| n as f64 * (-beta * l as f64).exp()).sum::<f64>();
        PathSums { z: w(&self.all), z_down: w(&self.down), count: self.count() }
    }
}

fn first_step_down(path: &[Pt]) -> bool {
    path.len() >= 2 && path[1].1 < path[0].1
}

pub fn length_counts(spec: &PathSpec) -> LengthCounts {
    let n = spec.max_len + 1;
    let parts = enumerate_paths(
        spec,
        || LengthCounts { all: vec![0; n], down: vec![0; n] },
        |acc, p| {
            acc.all[p.len() - 1] += 1;
            if first_step_down(p) {
                acc.down[p.len() - 1] += 1;
            }
        },
    );
    let mut out = LengthCounts { all: vec![0; n], down: vec![0; n] };
    for part in parts {
        for l in 0..n {
            out.all[l] += part.all[l];
            out.down[l] += part.down[l];
        }
    }
    out
}

/// Rectangles of at most `MAX_CLUSTER_SIDE` sites per side inside a finite
/// window, indexed by the cells they cover.
struct ClusterTable {
    x0: i32,
    y0: i32,
    w: usize,
    h: usize,
    phi: Vec<f64>,
    covering: Vec<Vec<u32>>,
}

impl ClusterTable {
    /// Window: `region` clipped to the reach of paths of `spec`, widened so it
    /// holds every rectangle touching such a path.
    fn new(spec: &PathSpec, region: Bounds, model: &WeightModel) -> Self {
        let slack = (spec.max_len.saturating_sub(spec.min_len()) / 2) as i32 + MAX_CLUSTER_SIDE - 1;
        let lo_x = spec.start.0.min(spec.end.0) - slack;
        let hi_x = spec.start.0.max(spec.end.0) + slack;
        let lo_y = spec.start.1.min(spec.end.1) - slack;
        let hi_y = spec.start.1.max(spec.end.1) + slack;
        let x0 = region.x_min.map_or(lo_x, |a| a.max(lo_x));
        let x1 = region.x_max.map_or(hi_x, |a| a.min(hi_x));
        let y0 = region.y_min.map_or(lo_y, |a| a.max(lo_y));
        let y1 = region.y_max.map_or(hi_y, |a| a.min(hi_y));
        let w = (x1 - x0 + 1).max(0) as usize;
        let h = (y1 - y0 + 1).max(0) as usize;
        let mut phi = Vec::new();
        let mut covering = vec![Vec::new(); w * h];
        for rw in 1..=MAX_CLUSTER_SIDE as usize {
            for rh in 1..=MAX_CLUSTER_SIDE as usize {
                let value = model.phi(rw as i32, rh as i32);
                if value == 0.0 || rw > w || rh > h {
                    continue;
                }
                for ry in 0..=h - rh {
                    for rx in 0..=w - rw {
                        let id = phi.len() as u32;
                        phi.push(value);
                        for cy in ry..ry + rh {
                            for cx in rx..rx + rw {
                                covering[cy * w + cx].push(id);
                            }
                        }
                    }
                }
            }
        }
        ClusterTable { x0, y0, w, h, phi, covering }
    }

    /// `ΣΦ(Λ)` over rectangles sharing a vertex with the path. `stamp` holds
    /// the last path id that counted each rectangle.
    fn path_phi(&self, path: &[Pt], stamp: &mut [u64], id: u64) -> f64 {
        let mut s = 0.0;
        for &(x, y) in path {
            let (dx, dy) = (x - self.x0, y - self.y0);
            if dx < 0 || dy < 0 || dx as usize >= self.w || dy as usize >= self.h {
                continue;
            }
            for &r in &self.covering[dy as usize * self.w + dx as usize] {
                if stamp[r as usize] != id {
                    stamp[r as usize] = id;
                    s += self.phi[r as usize];
                }
            }
        }
        s
    }
}

/// Weighted sums over the paths of `spec`; cluster rectangles must lie in
/// `region`.
pub fn path_sums(spec: &PathSpec, region: Bounds, model: &WeightModel) -> PathSums {
    if model.cluster == ClusterMode::None {
        return length_counts(spec).sums(model.beta);
    }
    let table = ClusterTable::new(spec, region, model);
    struct Acc {
        sums: PathSums,
        stamp: Vec<u64>,
        next_id: u64,
    }
    let parts = enumerate_paths(
        spec,
        || Acc { sums: PathSums::default(), stamp: vec![0; table.phi.len()], next_id: 1 },
        |acc, p| {
            let id = acc.next_id;
            acc.next_id += 1;
            let phi = table.path_phi(p, &mut acc.stamp, id);
            let w = (-model.beta * (p.len() - 1) as f64 + phi).exp();
            acc.sums.z += w;
            acc.sums.count += 1;
            if first_step_down(p) {
                acc.sums.z_down += w;
            }
        },
    );
    parts.into_iter().fold(PathSums::default(), |a, b| PathSums {
        z: a.z + b.sums.z,
        z_down: a.z_down + b.sums.z_down,
        count: a.count + b.sums.count,
    })
}

/// Upper bound on the weight of paths longer than `spec.max_len`.
///
/// Every self-avoiding path is a non-reversing walk, and its cluster factor is
/// at most `exp(φ (|γ| + 1))` with `φ` the per-vertex cluster mass. Lengths up
/// to `max_len + 100` are summed exactly over non-reversing walks; beyond that
/// the `4 · 3^(L-1)` count of all non-reversing walks is used.
pub fn tail_bound(spec: &PathSpec, region: Bounds, model: &WeightModel) -> f64 {
    let phi = model.phi_per_vertex();
    let x = (-model.beta + phi).exp();
    let last = spec.max_len + TAIL_EXACT_LENGTHS;
    let exact = nonreversing_weight(spec.start, spec.end, region, x, spec.max_len, last);
    let r = 3.0 * x;
    let rest = if r >= 1.0 { f64::INFINITY } else { 4.0 / 3.0 * r.powi(last as i32 + 1) / (1.0 - r) };
    phi.exp() * (exact + rest)
}

fn z_result(spec: &PathSpec, region: Bounds, model: &WeightModel) -> ZResult {
    let sums = path_sums(spec, region, model);
    ZResult {
        z: sums.z,
        path_count: sums.count,
        truncation_bound: tail_bound(spec, region, model),
        diagnostic: None,
    }
}

/// `Z(u -> v)` over the semistrip ensemble.
pub fn enumerate_z(ens: &SemistripEnsemble, model: &WeightModel) -> Result<ZResult> {
    if !(1..=MAX_WIDTH).contains(&ens.n) {
        return Err(Error::TooLarge(format!("strip width {} outside 1..={MAX_WIDTH}", ens.n)));
    }
    if let Some(d) = ens.diagnose() {
        return Ok(ZResult { z: 0.0, path_count: 0, truncation_bound: 0.0, diagnostic: Some(d) });
    }
    let excess = ens.cutoff - ens.min_len();
    if excess > MAX_EXCESS {
        return Err(Error::TooLarge(format!("excess length {excess} exceeds {MAX_EXCESS}")));
    }
    Ok(z_result(&ens.path_spec(), Bounds::semistrip(ens.n), model))
}

/// `Z(v1, v2)` over paths `(0, v1) -> (0, v2)` in the half-plane `x >= 0`.
pub fn vertical_z(v1: i32, v2: i32, model: &WeightModel, excess: usize) -> (ZResult, PathSums) {
    let region = Bounds::right_of(0);
    let spec = PathSpec::new((0, v1), (0, v2), v1.abs_diff(v2) as usize + excess, region);
    let sums = path_sums(&spec, region, model);
    let z = ZResult { z: sums.z, path_count: sums.count, truncation_bound: tail_bound(&spec, region, model), diagnostic: None };
    (z, sums)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerticalRatio {
    /// `Z(v1, v2) / Z(v1 - 1, v2)`.
    pub ratio: f64,
    /// Weight fraction of `Z(v1, v2)` whose first edge steps down.
    pub p_down: f64,
    pub numerator: ZResult,
    pub denominator: ZResult,
    pub flagged: bool,
}

impl VerticalRatio {
    /// `c` in `ratio = exp(-c β)`.
    pub fn rate(&self, beta: f64) -> f64 {
        -self.ratio.ln() / beta
    }
}

/// Ratio of vertical-arc partition functions when the upper end drops by one.
/// Both sums include paths up to `excess` edges above their shortest length.
pub fn vertical_ratio(v1: i32, v2: i32, model: &WeightModel, excess: usize) -> Result<VerticalRatio> {
    if v1 <= v2 + 1 {
        return Err(Error::Parameter(format!("vertical ratio needs v1 > v2 + 1, got {v1}, {v2}")));
    }
    let (num, sums) = vertical_z(v1, v2, model, excess);
    let (den, _) = vertical_z(v1 - 1, v2, model, excess);
    let flagged = !num.reliable() || !den.reliable();
    Ok(VerticalRatio { ratio: num.z / den.z, p_down: sums.z_down / sums.z, numerator: num, denominator: den, flagged })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EndpointRatio {
    /// `Z(u -> v + 1) / Z(u -> v)`.
    pub ratio: f64,
    pub lower: ZResult,
    pub upper: ZResult,
    pub flagged: bool,
}

/// `Z(u -> v + 1) / Z(u -> v)`, each truncated `excess` edges above its
/// shortest length.
pub fn endpoint_ratio(n: i32, u: i32, v: i32, model: &WeightModel, excess: usize) -> Result<EndpointRatio> {
    let lower = enumerate_z(&SemistripEnsemble::with_excess(n, u, v, excess), model)?;
    let upper = enumerate_z(&SemistripEnsemble::with_excess(n, u, v + 1, excess), model)?;
    let flagged = !lower.reliable() || !upper.reliable();
    Ok(EndpointRatio { ratio: upper.z / lower.z, lower, upper, flagged })
}

/// Full four-arc sum against its factorized approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct FourArcReport {
    pub full: f64,
    pub product: f64,
    /// `|ln(full / product)|`.
    pub epsilon: f64,
}

/// Vertices of `path` on the vertical line `x`, endpoints excluded.
fn footprint(path: &[Pt], x: i32) -> Vec<i32> {
    let mut ys: Vec<i32> = path[1..path.len() - 1].iter().filter(|p| p.0 == x).map(|p| p.1).collect();
    ys.sort_unstable();
    ys
}

/// Summed weight of each distinct pair of footprints on the lines `x = 0`
/// and `x = n`.
fn footprint_weights(spec: &PathSpec, beta: f64, n: i32) -> Vec<((Vec<i32>, Vec<i32>), f64)> {
    let parts = enumerate_paths(spec, HashMap::<(Vec<i32>, Vec<i32>), f64>::new, |acc, p| {
        *acc.entry((footprint(p, 0), footprint(p, n))).or_default() += (-beta * (p.len() - 1) as f64).exp();
    });
    let mut merged: HashMap<(Vec<i32>, Vec<i32>), f64> = HashMap::new();
    for part in parts {
        let mut entries: Vec<_> = part.into_iter().collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        for (k, w) in entries {
            *merged.entry(k).or_default() += w;
        }
    }
    let mut out: Vec<_> = merged.into_iter().collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

/// Checks the factorization of a contour around the segment `[0, n]` at
/// height 0 with cut points `u1, v1 >= 1` above and `u2, v2 <= -1` below.
///
/// The full sum runs over `γ1: (0,u1) -> (n,v1)` in `0 <= x <= n, y >= 1`,
/// `γ2: (0,u2) -> (n,v2)` in `0 <= x <= n, y <= -1`, and the end arcs
/// `γu: (0,u1) -> (0,u2)` in `x <= 0`, `γv: (n,v1) -> (n,v2)` in `x >= n`,
/// the end arcs avoiding every vertex of `γ1 ∪ γ2` except their endpoints.
/// The product replaces the end arcs by their straight segments.
pub fn four_arc_factorization(
    n: i32,
    (u1, u2, v1, v2): (i32, i32, i32, i32),
    model: &WeightModel,
    strip_excess: usize,
    end_excess: usize,
) -> Result<FourArcReport> {
    if model.cluster != ClusterMode::None {
        return Err(Error::ClusterModeUnsupported);
    }
    if n < 1 || u1 < 1 || v1 < 1 || u2 > -1 || v2 > -1 {
        return Err(Error::Parameter(format!("cut points ({u1},{u2},{v1},{v2}) must straddle the segment")));
    }
    let beta = model.beta;
    let strip = |lo: Option<i32>, hi: Option<i32>| Bounds { x_min: Some(0), x_max: Some(n), y_min: lo, y_max: hi };
    let upper_spec = PathSpec::new((0, u1), (n, v1), n as usize + u1.abs_diff(v1) as usize + strip_excess, strip(Some(1), None));
    let lower_spec = PathSpec::new((0, u2), (n, v2), n as usize + u2.abs_diff(v2) as usize + strip_excess, strip(None, Some(-1)));
    let upper = footprint_weights(&upper_spec, beta, n);
    let lower = footprint_weights(&lower_spec, beta, n);

    let end_sum = |x: i32, top: i32, bottom: i32, side: Bounds, blocked: Vec<Pt>| -> f64 {
        let mut spec = PathSpec::new((x, top), (x, bottom), top.abs_diff(bottom) as usize + end_excess, side);
        spec.blocked = blocked;
        length_counts(&spec).sums(beta).z
    };
    let mut left_memo: HashMap<Vec<i32>, f64> = HashMap::new();
    let mut right_memo: HashMap<Vec<i32>, f64> = HashMap::new();
    let mut full = 0.0;
    for ((ul, ur), wu) in &upper {
        for ((ll, lr), wl) in &lower {
            let mut left: Vec<i32> = ul.iter().chain(ll).copied().collect();
            left.sort_unstable();
            let mut right: Vec<i32> = ur.iter().chain(lr).copied().collect();
            right.sort_unstable();
            let vl = *left_memo.entry(left.clone()).or_insert_with(|| {
                end_sum(0, u1, u2, Bounds::left_of(0), left.iter().map(|&y| (0, y)).collect())
            });
            let vr = *right_memo.entry(right.clone()).or_insert_with(|| {
                end_sum(n, v1, v2, Bounds::right_of(n), right.iter().map(|&y| (n, y)).collect())
            });
            full += wu * wl * vl * vr;
        }
    }
    let z_upper: f64 = upper.iter().map(|(_, w)| w).sum();
    let z_lower: f64 = lower.iter().map(|(_, w)| w).sum();
    let product = (-beta * ((u1 - u2) + (v1 - v2)) as f64).exp() * z_upper * z_lower;
    Ok(FourArcReport { full, product, epsilon: (full / product).ln().abs() })
}

pub const Z_CSV_HEADER: &str = "N,u,v,beta,cutoff,Z,truncation_bound,path_count";

pub fn write_z_row<W: Write>(out: &mut W, ens: &SemistripEnsemble, beta: f64, z: &ZResult) -> io::Result<()> {
    writeln!(out, "{},{},{},{},{},{:e},{:e},{}", ens.n, ens.u, ens.v, beta, ens.cutoff, z.z, z.truncation_bound, z.path_count)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn width_two_bump_count() {
        let beta = 0.7;
        let z = enumerate_z(&SemistripEnsemble::new(2, 0, 0, 4), &WeightModel::new(beta).unwrap()).unwrap();
        assert_eq!(z.path_count, 4);
        let expected = (-2.0 * beta).exp() + 3.0 * (-4.0 * beta).exp();
        assert!((z.z - expected).abs() < 1e-15);
    }

    #[test]
    fn unreachable_endpoints_give_zero() {
        let m = WeightModel::new(1.0).unwrap();
        let z = enumerate_z(&SemistripEnsemble::new(3, 2, 0, 4), &m).unwrap();
        assert_eq!(z.z, 0.0);
        assert!(z.diagnostic.is_some());
        let z = enumerate_z(&SemistripEnsemble::new(3, -1, 0, 8), &m).unwrap();
        assert!(z.diagnostic.is_some());
        assert!(enumerate_z(&SemistripEnsemble::new(11, 0, 0, 11), &m).is_err());
        assert!(enumerate_z(&SemistripEnsemble::new(3, 0, 0, 12), &m).is_err());
    }

    #[test]
    fn zero_amplitude_matches_mode_none() {
        let ens = SemistripEnsemble::with_excess(4, 1, 2, 4);
        let a = enumerate_z(&ens, &WeightModel::new(1.5).unwrap()).unwrap();
        let b = enumerate_z(&ens, &WeightModel::synthetic(1.5, 3.0, 0.0).unwrap()).unwrap();
        assert_eq!(a.path_count, b.path_count);
        assert!((a.z - b.z).abs() <= 1e-14 * a.z);
    }

    #[test]
    fn cluster_factor_counts_each_rectangle_once() {
        // The single path (0,0) -> (1,0) in the strip 0 <= x <= 1, y >= 0
        // touches every rectangle in the window with a cell in row 0:
        // widths 1..2 and heights 1..4, one placement per height for the
        // full-width ones and two for the unit-width ones.
        let m = WeightModel::synthetic(1.0, 2.0, 0.5).unwrap();
        let spec = PathSpec::new((0, 0), (1, 0), 1, Bounds::semistrip(1));
        let s = path_sums(&spec, Bounds::semistrip(1), &m);
        let mut phi = 0.0;
        for h in 1..=4 {
            phi += 2.0 * m.phi(1, h) + m.phi(2, h);
        }
        assert!((s.z - (-1.0 + phi).exp()).abs() < 1e-14);
    }

    #[test]
    fn tail_bound_covers_the_next_lengths() {
        let m = WeightModel::new(1.5).unwrap();
        let short = SemistripEnsemble::with_excess(3, 0, 1, 2);
        let long = SemistripEnsemble::with_excess(3, 0, 1, 8);
        let zs = enumerate_z(&short, &m).unwrap();
        let zl = enumerate_z(&long, &m).unwrap();
        assert!(zl.z - zs.z <= zs.truncation_bound);
        assert!(zl.truncation_bound < zs.truncation_bound);
        // Past the non-reversing growth rate the bound is infinite.
        let z = enumerate_z(&short, &WeightModel::new(1.0).unwrap()).unwrap();
        assert!(z.truncation_bound.is_infinite() && !z.reliable());
    }

    #[test]
    fn vertical_ratio_at_large_beta() {
        let m = WeightModel::new(8.0).unwrap();
        let r = vertical_ratio(3, 0, &m, 4).unwrap();
        assert!((r.ratio / (-8.0f64).exp() - 1.0).abs() < 1e-5);
        assert!(r.p_down > 0.9999);
        assert!(!r.flagged);
        assert!(vertical_ratio(1, 0, &m, 4).is_err());
    }

    #[test]
    fn four_arc_product_at_large_beta() {
        let m = WeightModel::new(10.0).unwrap();
        let r = four_arc_factorization(2, (1, -1, 1, -1), &m, 2, 2).unwrap();
        assert!(r.epsilon < 1e-6, "{r:?}");
        assert!(r.full <= r.product * (1.0 + 1e-6));
    }
}
