//! Experiment commands behind the CLI.
//!
//! Every command resolves the scenario once, writes the resolved document
//! next to its outputs and stamps the config hash on every CSV row, so a run
//! can be repeated from its own snapshot.

mod calibrate;
mod eval;
mod oracle;
mod sweep;
mod train;

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::agents::PolicyKind;
use crate::config::Scenario;
use crate::error::Result;

pub use calibrate::{cmd_calibrate, CalibrationReport};
pub use eval::{cmd_eval, eval_seeds, evaluate_policy, make_policy, rollout, EpisodeTrace, EvalReport, PolicyStats};
pub use oracle::{cmd_oracle, run_suite, OracleCheck, OracleReport, Suite};
pub use sweep::{cmd_sweep, SweepEpisode, SweepReport, SweepRow};
pub use train::{cmd_train, TrainReport};

pub const RESOLVED_CONFIG: &str = "config.resolved.json";

pub fn checkpoint_path(dir: &Path, kind: PolicyKind) -> PathBuf {
    dir.join(format!("checkpoint_{}.json", kind.name()))
}

/// Creates `out` and writes the resolved configuration snapshot into it.
pub fn prepare_out(out: &Path, scenario: &Scenario) -> Result<()> {
    fs::create_dir_all(out)?;
    fs::write(out.join(RESOLVED_CONFIG), scenario.to_json_pretty() + "\n")?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

pub fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    Ok(csv::Writer::from_path(path)?)
}

/// Sample mean, standard deviation (n − 1) and standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    pub std: f64,
    pub stderr: f64,
    pub n: usize,
}

impl Moments {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { mean: f64::NAN, std: f64::NAN, stderr: f64::NAN, n };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std, stderr: std / (n as f64).sqrt(), n }
    }
}

/// Coefficient of determination of the least-squares line through
/// `(i, ys[i])`. A constant series counts as a perfect fit.
pub fn linear_fit_r2(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    if ys.len() < 3 {
        return 1.0;
    }
    let xm = (n - 1.0) / 2.0;
    let ym = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (i, &y) in ys.iter().enumerate() {
        let dx = i as f64 - xm;
        let dy = y - ym;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if syy == 0.0 {
        return 1.0;
    }
    sxy * sxy / (sxx * syy)
}
