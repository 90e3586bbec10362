//! Exact sampling of x-monotone semistrip paths.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ensemble::SemistripEnsemble;
use crate::error::{Error, Result};
use crate::model::{ClusterMode, WeightModel};
use crate::saw::Pt;

/// Backward weights for x-monotone paths: one vertical run per column, then a
/// step right. `b[x][y][r]` is the weight of finishing from height `y` at the
/// start of column `x` with `r` vertical steps left in the budget.
#[derive(Debug, Clone)]
pub struct DirectedSampler {
    ens: SemistripEnsemble,
    beta: f64,
    budget: usize,
    y_max: usize,
    b: Vec<f64>,
}

impl DirectedSampler {
    pub fn new(ens: SemistripEnsemble, model: &WeightModel) -> Result<Self> {
        if model.cluster != ClusterMode::None {
            return Err(Error::ClusterModeUnsupported);
        }
        if ens.n < 1 || ens.u < 0 || ens.v < 0 || ens.cutoff < ens.min_len() {
            return Err(Error::Parameter(format!("no admissible directed path for {ens:?}")));
        }
        let budget = ens.cutoff - ens.n as usize;
        let y_max = ens.u.max(ens.v) as usize + budget;
        let mut s = DirectedSampler { ens, beta: model.beta, budget, y_max, b: Vec::new() };
        s.fill();
        Ok(s)
    }

    fn idx(&self, x: usize, y: usize, r: usize) -> usize {
        (x * (self.y_max + 1) + y) * (self.budget + 1) + r
    }

    fn fill(&mut self) {
        let n = self.ens.n as usize;
        let ys = self.y_max + 1;
        let rs = self.budget + 1;
        self.b = vec![0.0; (n + 1) * ys * rs];
        let v = self.ens.v as usize;
        for y in 0..ys {
            for r in 0..rs {
                let d = y.abs_diff(v);
                if d <= r {
                    let i = self.idx(n, y, r);
                    self.b[i] = (-self.beta * d as f64).exp();
                }
            }
        }
        for x in (0..n).rev() {
            for y in 0..ys {
                for r in 0..rs {
                    let mut s = 0.0;
                    for y2 in y.saturating_sub(r)..=(y + r).min(self.y_max) {
                        let d = y.abs_diff(y2);
                        s += (-self.beta * (d + 1) as f64).exp() * self.b[self.idx(x + 1, y2, r - d)];
                    }
                    let i = self.idx(x, y, r);
                    self.b[i] = s;
                }
            }
        }
    }

    /// Total weight of the x-monotone paths in the ensemble.
    pub fn z(&self) -> f64 {
        self.b[self.idx(0, self.ens.u as usize, self.budget)]
    }

    /// Heights at which the path leaves columns `0..N`.
    pub fn sample_exits<R: Rng>(&self, rng: &mut R) -> Vec<i32> {
        let n = self.ens.n as usize;
        let mut y = self.ens.u as usize;
        let mut r = self.budget;
        let mut exits = Vec::with_capacity(n);
        for x in 0..n {
            let total = self.b[self.idx(x, y, r)];
            let mut t = rng.gen::<f64>() * total;
            let lo = y.saturating_sub(r);
            let hi = (y + r).min(self.y_max);
            let mut pick = hi;
            for y2 in lo..=hi {
                let d = y.abs_diff(y2);
                let w = (-self.beta * (d + 1) as f64).exp() * self.b[self.idx(x + 1, y2, r - d)];
                if w > 0.0 {
                    pick = y2;
                    if t < w {
                        break;
                    }
                    t -= w;
                }
            }
            r -= y.abs_diff(pick);
            y = pick;
            exits.push(y as i32);
        }
        exits
    }
}

/// Vertex list of the x-monotone path with the given column exit heights.
pub fn path_from_exits(ens: &SemistripEnsemble, exits: &[i32]) -> Vec<Pt> {
    let mut path = vec![(0, ens.u)];
    let mut y = ens.u;
    for (x, &e) in exits.iter().enumerate().map(|(x, e)| (x as i32, e)).chain(std::iter::once((ens.n, &ens.v))) {
        while y != e {
            y += (e - y).signum();
            path.push((x, y));
        }
        if x < ens.n {
            path.push((x + 1, y));
        }
    }
    path
}

/// One exact draw from the weight restricted to x-monotone paths.
pub fn sample_directed_path(ens: &SemistripEnsemble, model: &WeightModel, seed: u64) -> Result<Vec<Pt>> {
    let s = DirectedSampler::new(*ens, model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(path_from_exits(ens, &s.sample_exits(&mut rng)))
}

/// Whether x never decreases along the path.
pub fn is_x_monotone(path: &[Pt]) -> bool {
    path.windows(2).all(|w| w[1].0 >= w[0].0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paths_are_admissible_and_deterministic() {
        let ens = SemistripEnsemble::with_excess(5, 1, 3, 6);
        let m = WeightModel::new(0.5).unwrap();
        for seed in 0..200 {
            let p = sample_directed_path(&ens, &m, seed).unwrap();
            assert_eq!(p[0], (0, 1));
            assert_eq!(*p.last().unwrap(), (5, 3));
            assert!(p.len() - 1 <= ens.cutoff);
            assert!(is_x_monotone(&p));
            assert!(p.iter().all(|q| q.1 >= 0 && (0..=5).contains(&q.0)));
            assert!(p.windows(2).all(|w| (w[0].0 - w[1].0).abs() + (w[0].1 - w[1].1).abs() == 1));
            assert_eq!(p, sample_directed_path(&ens, &m, seed).unwrap());
        }
    }

    #[test]
    fn large_beta_gives_the_straight_line() {
        let ens = SemistripEnsemble::with_excess(6, 2, 2, 4);
        let m = WeightModel::new(20.0).unwrap();
        for seed in 0..50 {
            let p = sample_directed_path(&ens, &m, seed).unwrap();
            assert_eq!(p.len(), 7);
            assert!(p.iter().all(|q| q.1 == 2));
        }
    }

    #[test]
    fn monotone_count_in_small_case() {
        // N=2, u=v=0, cutoff 4: the straight path and the three one-bump
        // excursions, all x-monotone.
        let ens = SemistripEnsemble::new(2, 0, 0, 4);
        let s = DirectedSampler::new(ens, &WeightModel::new(0.0).unwrap()).unwrap();
        assert_eq!(s.z(), 4.0);
    }
}
