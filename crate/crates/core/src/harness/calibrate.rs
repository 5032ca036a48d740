//! The `calibrate` command.

use std::path::Path;

use serde::Serialize;

use super::{prepare_out, write_json};
use crate::calibrate;
use crate::channel::{link_stats, RadioParams};
use crate::config::ScenarioConfig;
use crate::error::Result;

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationReport {
    pub beta0: f64,
    pub beta0_derived: bool,
    pub contact_time_s: f64,
    pub contact_time_derived: bool,
    pub target_stp: f64,
    /// Reference-transfer STP at the resolved contact time.
    pub achieved_stp: f64,
    pub reference_distance_m: f64,
    pub eligible_radius_m: f64,
    /// Mean SNR at `radio.beta0_ref_distance_m`.
    pub reference_mean_snr_db: f64,
    pub config_hash: String,
}

/// Fills in `β₀` and the contact time and writes the resolved document.
/// Running it again on its own output changes nothing.
pub fn cmd_calibrate(cfg: &ScenarioConfig, out: &Path) -> Result<CalibrationReport> {
    let scenario = cfg.resolve()?;
    prepare_out(out, &scenario)?;
    let resolved = &scenario.config;
    let radio = RadioParams::from_scenario(&scenario);
    let at_ref = link_stats([resolved.radio.beta0_ref_distance_m, 0.0, 0.0], [0.0; 3], &radio)?;
    let report = CalibrationReport {
        beta0: scenario.beta0,
        beta0_derived: cfg.radio.beta0.is_none(),
        contact_time_s: scenario.contact_time_s,
        contact_time_derived: cfg.radio.contact_time_s.is_none(),
        target_stp: resolved.calibration.target_stp,
        achieved_stp: calibrate::reference_stp(resolved, scenario.contact_time_s)?,
        reference_distance_m: calibrate::median_eligible_distance_m(resolved)?,
        eligible_radius_m: calibrate::eligible_radius_m(resolved),
        reference_mean_snr_db: 10.0 * at_ref.mean_snr.log10(),
        config_hash: scenario.hash(),
    };
    write_json(&out.join("calibration.json"), &report)?;
    Ok(report)
}
