//! Config-driven experiments on the conditioned Ising model and its effective
//! interface walk.
//!
//! Each experiment writes CSV artifacts and a `summary.json` of verdicts into
//! the configured output directory. Parameter points run on the rayon pool
//! with seeds derived from the config seed and the point index, and results
//! are written in parameter order, so outputs are byte-identical across
//! reruns and thread counts.

pub mod config;
pub mod cut_height;
pub mod decay;
pub mod error;
pub mod report;
pub mod validation;
pub mod walk_suite;
pub mod wetting;

pub use config::{ExperimentConfig, ExperimentKind, LawSpec};
pub use error::{Error, Result};
pub use report::{Summary, Verdict};

use report::Report;

/// Runs the experiment named in `config` and writes its artifacts.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Summary> {
    config.validate()?;
    let mut report = Report::new(config, &config.out_dir)?;
    match config.experiment {
        ExperimentKind::OneSidedDecay => decay::run_one_sided_decay(config, &mut report)?,
        ExperimentKind::TwoSidedWetting => wetting::run_two_sided_wetting(config, &mut report)?,
        ExperimentKind::CutHeight => cut_height::run_cut_height(config, &mut report)?,
        ExperimentKind::WalkSuite => walk_suite::run_walk_suite(config, &mut report)?,
    }
    report.finish()
}
