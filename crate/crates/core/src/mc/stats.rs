/// Default number of batches for batch-means error bars.
pub const DEFAULT_BATCHES: usize = 32;
/// Fewest samples (and batches) a chain must produce.
pub const MIN_SAMPLES: usize = 16;

/// Sample mean with a batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateWithError {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub batch_count: u64,
}

impl EstimateWithError {
    /// Sample-weighted merge of independent estimates.
    pub fn merge(parts: &[EstimateWithError]) -> EstimateWithError {
        let n: u64 = parts.iter().map(|p| p.n_samples).sum();
        if n == 0 {
            return EstimateWithError { mean: 0.0, stderr: 0.0, n_samples: 0, batch_count: 0 };
        }
        let nf = n as f64;
        let mut mean = 0.0;
        let mut var = 0.0;
        for p in parts {
            let w = p.n_samples as f64 / nf;
            mean += w * p.mean;
            var += w * w * p.stderr * p.stderr;
        }
        EstimateWithError {
            mean,
            stderr: var.sqrt(),
            n_samples: n,
            batch_count: parts.iter().map(|p| p.batch_count).sum(),
        }
    }

    /// `|mean - target| <= k * stderr`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr
    }
}

/// Online batch-means accumulator for a series of known length.
///
/// Sample `k` of `n` goes to batch `k * batches / n`, so batch sizes differ by
/// at most one.
#[derive(Debug, Clone)]
pub struct BatchMeans {
    expected: u64,
    seen: u64,
    sums: Vec<f64>,
    counts: Vec<u64>,
}

impl BatchMeans {
    pub fn new(expected: u64, batches: usize) -> Self {
        let b = batches.min(expected as usize).max(1);
        BatchMeans { expected, seen: 0, sums: vec![0.0; b], counts: vec![0; b] }
    }

    pub fn push(&mut self, x: f64) {
        let b = self.sums.len() as u64;
        let k = ((self.seen.min(self.expected - 1)) * b / self.expected) as usize;
        self.sums[k] += x;
        self.counts[k] += 1;
        self.seen += 1;
    }

    pub fn estimate(&self) -> EstimateWithError {
        let total: f64 = self.sums.iter().sum();
        let n = self.seen;
        let mean = if n > 0 { total / n as f64 } else { 0.0 };
        let means: Vec<f64> = self
            .sums
            .iter()
            .zip(&self.counts)
            .filter(|(_, &c)| c > 0)
            .map(|(s, &c)| s / c as f64)
            .collect();
        let b = means.len();
        let stderr = if b > 1 {
            let m = means.iter().sum::<f64>() / b as f64;
            let v = means.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (b - 1) as f64;
            (v / b as f64).sqrt()
        } else {
            0.0
        };
        EstimateWithError { mean, stderr, n_samples: n, batch_count: b as u64 }
    }
}

/// Batch-means estimate of a stored series.
pub fn batch_means(series: &[f64], batches: usize) -> EstimateWithError {
    let mut acc = BatchMeans::new(series.len() as u64, batches);
    for &x in series {
        acc.push(x);
    }
    acc.estimate()
}

/// Integrated autocorrelation time with Sokal's self-consistent window
/// (smallest `W >= c * tau(W)`, `c = 5`). Returns 0.5 for uncorrelated or
/// constant series.
pub fn integrated_autocorrelation(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 2 {
        return 0.5;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let c0 = series.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    if c0 <= 0.0 {
        return 0.5;
    }
    let mut tau = 0.5;
    for t in 1..n / 2 {
        let ct = series[..n - t]
            .iter()
            .zip(&series[t..])
            .map(|(a, b)| (a - mean) * (b - mean))
            .sum::<f64>()
            / n as f64;
        tau += ct / c0;
        if t as f64 >= 5.0 * tau {
            break;
        }
    }
    tau.max(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_series_has_zero_error() {
        let e = batch_means(&[1.0; 100], 32);
        assert_eq!(e.mean, 1.0);
        assert_eq!(e.stderr, 0.0);
        assert_eq!(e.batch_count, 32);
        assert_eq!(integrated_autocorrelation(&[2.0; 50]), 0.5);
    }

    #[test]
    fn batch_sizes_balance() {
        let mut acc = BatchMeans::new(100, 32);
        for _ in 0..100 {
            acc.push(1.0);
        }
        assert!(acc.counts.iter().all(|&c| c == 3 || c == 4));
        assert_eq!(acc.counts.iter().sum::<u64>(), 100);
    }

    #[test]
    fn iid_stderr_matches_sigma_over_root_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..64_000).map(|_| rng.gen::<f64>()).collect();
        let e = batch_means(&xs, 32);
        let expected = (1.0f64 / 12.0 / 64_000.0).sqrt();
        assert!((e.stderr / expected - 1.0).abs() < 0.4, "{} vs {}", e.stderr, expected);
        assert!(integrated_autocorrelation(&xs) < 0.7);
    }

    #[test]
    fn ar1_autocorrelation_time() {
        // tau_int = (1 + a) / (2 (1 - a)) for an AR(1) series.
        let a = 0.8;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut x = 0.0;
        let xs: Vec<f64> = (0..200_000)
            .map(|_| {
                x = a * x + rng.gen::<f64>() - 0.5;
                x
            })
            .collect();
        let tau = integrated_autocorrelation(&xs);
        assert!((tau - 4.5).abs() < 0.6, "{tau}");
    }

    #[test]
    fn merge_weights_by_samples() {
        let a = EstimateWithError { mean: 1.0, stderr: 0.2, n_samples: 100, batch_count: 32 };
        let b = EstimateWithError { mean: 4.0, stderr: 0.2, n_samples: 300, batch_count: 32 };
        let m = EstimateWithError::merge(&[a, b]);
        assert!((m.mean - 3.25).abs() < 1e-15);
        assert!((m.stderr - (0.0625f64 * 0.04 + 0.5625 * 0.04).sqrt()).abs() < 1e-15);
        assert_eq!(m.batch_count, 64);
    }
}
