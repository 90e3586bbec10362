//! Verdicts, summary JSON and artifact files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use schn_core::mc::EstimateWithError;

use crate::config::ExperimentConfig;
use crate::error::Result;

/// Relative standard error above which a point is left out of fits.
pub const MAX_RELATIVE_STDERR: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub property: String,
    pub pass: bool,
    pub measured: f64,
    pub threshold: f64,
}

impl Verdict {
    /// Passes when `measured <= threshold`.
    pub fn at_most(property: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Verdict { property: property.into(), pass: measured <= threshold, measured, threshold }
    }

    /// Passes when `measured >= threshold`.
    pub fn at_least(property: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Verdict { property: property.into(), pass: measured >= threshold, measured, threshold }
    }

    /// Passes when `measured > threshold`.
    pub fn above(property: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Verdict { property: property.into(), pass: measured > threshold, measured, threshold }
    }

    /// Passes when `measured < threshold`.
    pub fn below(property: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Verdict { property: property.into(), pass: measured < threshold, measured, threshold }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub config_digest: String,
    pub verdicts: Vec<Verdict>,
    /// File names relative to the output directory.
    pub artifacts: Vec<String>,
    pub warnings: Vec<String>,
}

impl Summary {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn verdict(&self, property: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.property == property)
    }
}

/// Hex SHA-256 of the canonical config text. The output directory is not part
/// of the digest.
pub fn config_digest(config: &ExperimentConfig) -> String {
    let mut c = config.clone();
    c.out_dir = PathBuf::new();
    Sha256::digest(c.serialize().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects verdicts, warnings and artifact files of one run.
#[derive(Debug)]
pub struct Report {
    dir: PathBuf,
    summary: Summary,
}

impl Report {
    pub fn new(config: &ExperimentConfig, dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Report {
            dir: dir.to_path_buf(),
            summary: Summary {
                experiment: config.experiment.name().to_string(),
                config_digest: config_digest(config),
                verdicts: Vec::new(),
                artifacts: Vec::new(),
                warnings: Vec::new(),
            },
        })
    }

    pub fn verdict(&mut self, v: Verdict) {
        self.summary.verdicts.push(v);
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.summary.warnings.push(msg.into());
    }

    pub fn has_failures(&self) -> bool {
        !self.summary.all_pass()
    }

    pub fn artifact(&mut self, name: &str, content: &str) -> Result<()> {
        fs::write(self.dir.join(name), content)?;
        self.summary.artifacts.push(name.to_string());
        Ok(())
    }

    /// Writes `summary.json` and returns the summary.
    pub fn finish(mut self) -> Result<Summary> {
        self.summary.artifacts.push("summary.json".into());
        let mut json = serde_json::to_string_pretty(&self.summary)?;
        json.push('\n');
        fs::write(self.dir.join("summary.json"), json)?;
        Ok(self.summary)
    }
}

/// Standard error for comparisons against exact values: the batch-means
/// error, floored at the resolution `1/n` of a mean of indicators.
pub fn resolution(e: &EstimateWithError) -> f64 {
    e.stderr.max(1.0 / e.n_samples as f64)
}

/// `sqrt(a² + b²)` of two resolutions.
pub fn joint_resolution(a: &EstimateWithError, b: &EstimateWithError) -> f64 {
    resolution(a).hypot(resolution(b))
}

/// Seed of the `k`-th parameter point of a run.
pub fn point_seed(seed: u64, k: u64) -> u64 {
    seed.wrapping_add(k.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Inverse temperature of the 2D Ising critical point, `ln(1 + √2) / 2`.
pub fn critical_beta() -> f64 {
    (1.0 + 2f64.sqrt()).ln() / 2.0
}

/// Least-squares line through `(x, ln p)`; the slope error is propagated from
/// the per-point `stderr / p`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogFit {
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Fits `ln p` against `x` over points `(x, p, stderr)`. Fewer than two
/// points give NaN fields.
pub fn log_linear_fit(pts: &[(f64, f64, f64)]) -> LogFit {
    let n = pts.len();
    if n < 2 {
        return LogFit { slope: f64::NAN, slope_stderr: f64::NAN, intercept: f64::NAN, r_squared: f64::NAN, points: n };
    }
    let xy: Vec<(f64, f64)> = pts.iter().map(|&(x, p, _)| (x, p.ln())).collect();
    let (slope, intercept, r_squared) = schn_walk::scaling::linear_fit(&xy);
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let var: f64 = pts.iter().map(|&(x, p, s)| ((x - mx) / sxx).powi(2) * (s / p).powi(2)).sum();
    LogFit { slope, slope_stderr: var.sqrt(), intercept, r_squared, points: n }
}

/// Shortest round-trip text of a float.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}
