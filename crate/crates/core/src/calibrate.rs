//! Closed-form and bisection calibration of `β₀` and the mean contact time.

use serde::Serialize;

use crate::channel::{link_stats, QuadratureSpec, RadioParams, StpEvaluator, Transfer};
use crate::config::{db_to_linear, dbm_to_watts, ScenarioConfig};
use crate::error::{Error, Result};

/// `β₀ = γ_cal · σ₀² · d_ref^α / p` with `γ_cal = γ₀ + margin` (dB), so a CU at
/// `d_ref` sees a mean SNR exactly `margin` dB above the threshold.
pub fn beta0(cfg: &ScenarioConfig) -> f64 {
    let r = &cfg.radio;
    let gamma_cal = db_to_linear(r.snr_threshold_db + r.beta0_margin_db);
    gamma_cal * dbm_to_watts(r.noise_power_dbm) * r.beta0_ref_distance_m.powf(r.pathloss_exponent)
        / r.transmit_power_w
}

fn radio_params(cfg: &ScenarioConfig) -> RadioParams {
    RadioParams {
        beta0: cfg.radio.beta0.unwrap_or_else(|| beta0(cfg)),
        pathloss_exponent: cfg.radio.pathloss_exponent,
        noise_power_w: dbm_to_watts(cfg.radio.noise_power_dbm),
        transmit_power_w: cfg.radio.transmit_power_w,
        rician_factor: cfg.radio.rician_factor,
    }
}

/// Largest 3-D CU-GV distance whose mean SNR still clears the threshold.
pub fn eligible_radius_m(cfg: &ScenarioConfig) -> f64 {
    let radio = radio_params(cfg);
    let gamma0 = db_to_linear(cfg.radio.snr_threshold_db);
    (radio.transmit_power_w * radio.beta0 / (radio.noise_power_w * gamma0)).powf(1.0 / radio.pathloss_exponent)
}

/// Distance of the median eligible link: a CU uniform over the eligible
/// disk at flight altitude has median horizontal offset `r_h/√2`.
pub fn median_eligible_distance_m(cfg: &ScenarioConfig) -> Result<f64> {
    let d_max = eligible_radius_m(cfg);
    let h = cfg.nodes.altitude_m;
    if d_max <= h {
        return Err(Error::Calibration(format!(
            "no CU at altitude {h} m can clear the SNR threshold (eligible radius {d_max:.2} m)"
        )));
    }
    let r_h2 = d_max * d_max - h * h;
    Ok((h * h + r_h2 / 2.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContactCalibration {
    pub contact_time_s: f64,
    pub achieved_stp: f64,
    pub reference_distance_m: f64,
    pub iterations: usize,
}

/// STP of the reference transfer over the median eligible link, as a
/// function of the mean contact time.
fn reference_stp_fn(cfg: &ScenarioConfig) -> Result<(f64, impl Fn(f64) -> Result<f64> + '_)> {
    let cal = &cfg.calibration;
    let d = median_eligible_distance_m(cfg)?;
    let radio = radio_params(cfg);
    let h = cfg.nodes.altitude_m;
    let horiz = (d * d - h * h).max(0.0).sqrt();
    let link = link_stats([horiz, 0.0, h], [0.0, 0.0, 0.0], &radio)?;
    let ev = StpEvaluator::new(QuadratureSpec {
        node_count: cfg.numerics.quadrature_nodes,
        series_tol: cfg.numerics.series_tol,
        series_max_terms: cfg.numerics.series_max_terms,
    })?;
    let file_bits = cal.reference_content_bits_per_cell * cal.reference_cells as f64;
    let eta = move |tau: f64| {
        ev.stp(
            &Transfer {
                file_bits,
                k: 1,
                bandwidth_hz: cal.reference_bandwidth_hz,
                contact_time_s: tau,
                power_w: radio.transmit_power_w,
            },
            &link,
        )
    };
    Ok((d, eta))
}

/// Reference-transfer STP at mean contact time `tau`.
pub fn reference_stp(cfg: &ScenarioConfig, tau: f64) -> Result<f64> {
    reference_stp_fn(cfg)?.1(tau)
}

/// Solves `η(τ) = target` on the reference transfer by bisection in `log τ`.
pub fn contact_time(cfg: &ScenarioConfig) -> Result<ContactCalibration> {
    let cal = &cfg.calibration;
    let (d, eta) = reference_stp_fn(cfg)?;

    let (mut lo, mut hi) = (1e-9_f64, 1e6_f64);
    let (eta_lo, eta_hi) = (eta(lo)?, eta(hi)?);
    if !(eta_lo < cal.target_stp && eta_hi > cal.target_stp) {
        return Err(Error::Calibration(format!(
            "target η = {} not bracketed: η(τ={lo:e}) = {eta_lo:.6}, η(τ={hi:e}) = {eta_hi:.6}",
            cal.target_stp
        )));
    }
    let mut iterations = 0;
    let mut mid_eta = f64::NAN;
    let mut mid = lo;
    while iterations < 200 {
        iterations += 1;
        mid = (lo * hi).sqrt();
        mid_eta = eta(mid)?;
        if (mid_eta - cal.target_stp).abs() < 1e-9 || hi / lo < 1.0 + 1e-13 {
            break;
        }
        if mid_eta < cal.target_stp {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ContactCalibration {
        contact_time_s: mid,
        achieved_stp: mid_eta,
        reference_distance_m: d,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta0_puts_reference_distance_at_margin() {
        let cfg = ScenarioConfig::default();
        let b = beta0(&cfg);
        let radio = RadioParams { beta0: b, ..radio_params(&cfg) };
        let l = link_stats([200.0, 0.0, 0.0], [0.0, 0.0, 0.0], &radio).unwrap();
        // γ₀ = 27 dB plus 3 dB margin.
        assert!((10.0 * l.mean_snr.log10() - 30.0).abs() < 1e-9, "{}", l.mean_snr);
    }

    #[test]
    fn eligible_radius_default() {
        let cfg = ScenarioConfig::default();
        let d = eligible_radius_m(&cfg);
        // 200 m · 10^(3/40)
        assert!((d - 200.0 * 10f64.powf(3.0 / 40.0)).abs() < 1e-9);
    }

    #[test]
    fn contact_time_hits_target() {
        let mut cfg = ScenarioConfig::default();
        for target in [0.6, 0.8] {
            cfg.calibration.target_stp = target;
            let c = contact_time(&cfg).unwrap();
            assert!((c.achieved_stp - target).abs() < 1e-6);
            assert!((0.595..=0.605).contains(&c.achieved_stp) || target != 0.6);
        }
        let c = contact_time(&cfg).unwrap();
        assert!(c.contact_time_s > 0.0);
    }

    #[test]
    fn unreachable_threshold_reports() {
        let mut cfg = ScenarioConfig::default();
        cfg.radio.beta0 = Some(1e-6);
        assert!(matches!(contact_time(&cfg), Err(Error::Calibration(_))));
    }
}
