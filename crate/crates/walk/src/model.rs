use crate::error::{Error, Result};

/// Correction terms attached to a path.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ClusterMode {
    /// No cluster terms: `w(γ) = exp(-β|γ|)`.
    #[default]
    None,
    /// `Φ(Λ) = amplitude · exp(-rate · diam Λ)` for every axis-aligned
    /// rectangle `Λ` of at most 4 × 4 sites inside the path's region that
    /// shares a vertex with the path. `diam` is the larger side minus one.
    Synthetic { rate: f64, amplitude: f64 },
}

/// Largest rectangle side in synthetic mode.
pub const MAX_CLUSTER_SIDE: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightModel {
    pub beta: f64,
    /// Inverse temperature used for animal weights; equals `beta` unless a
    /// robustness scan sets it.
    pub beta_prime: f64,
    pub cluster: ClusterMode,
}

impl WeightModel {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::Parameter(format!("beta must be finite and >= 0, got {beta}")));
        }
        Ok(WeightModel { beta, beta_prime: beta, cluster: ClusterMode::None })
    }

    /// Synthetic cluster terms; requires `rate >= 2β` and `0 <= amplitude <= 1`
    /// so that `|Φ(Λ)| <= exp(-2β diam Λ)`.
    pub fn synthetic(beta: f64, rate: f64, amplitude: f64) -> Result<Self> {
        let mut m = Self::new(beta)?;
        if !(rate >= 2.0 * beta) || !(0.0..=1.0).contains(&amplitude) {
            return Err(Error::Parameter(format!(
                "synthetic clusters need rate >= 2 beta and amplitude in [0, 1], got rate {rate}, amplitude {amplitude}"
            )));
        }
        m.cluster = ClusterMode::Synthetic { rate, amplitude };
        Ok(m)
    }

    pub fn with_beta_prime(mut self, beta_prime: f64) -> Result<Self> {
        if !(beta_prime >= 0.0 && beta_prime.is_finite()) {
            return Err(Error::Parameter(format!("beta' must be finite and >= 0, got {beta_prime}")));
        }
        self.beta_prime = beta_prime;
        Ok(self)
    }

    /// `Φ` of a rectangle with sides `w`, `h` (in sites).
    pub fn phi(&self, w: i32, h: i32) -> f64 {
        match self.cluster {
            ClusterMode::None => 0.0,
            ClusterMode::Synthetic { rate, amplitude } => amplitude * (-rate * (w.max(h) - 1) as f64).exp(),
        }
    }

    /// Upper bound on the summed `Φ` of rectangles containing one vertex.
    pub fn phi_per_vertex(&self) -> f64 {
        let mut s = 0.0;
        for w in 1..=MAX_CLUSTER_SIDE {
            for h in 1..=MAX_CLUSTER_SIDE {
                s += (w * h) as f64 * self.phi(w, h);
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_terms_obey_the_cluster_bound() {
        let m = WeightModel::synthetic(1.5, 3.0, 1.0).unwrap();
        for w in 1..=4 {
            for h in 1..=4 {
                let diam = (w.max(h) - 1) as f64;
                assert!(m.phi(w, h).abs() <= (-2.0 * 1.5 * diam).exp() + 1e-15);
            }
        }
        assert!(WeightModel::synthetic(1.5, 2.9, 1.0).is_err());
        assert!(WeightModel::synthetic(1.5, 3.0, 1.1).is_err());
        assert_eq!(WeightModel::new(2.0).unwrap().phi_per_vertex(), 0.0);
    }
}
