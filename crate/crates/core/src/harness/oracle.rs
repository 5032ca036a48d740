//! Numerical oracle suites: analytic results against enumeration or
//! sampling, each reported with its measured deviation.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{csv_writer, prepare_out, write_json};
use crate::agents::derive_seed;
use crate::channel::{
    rician_power_cdf, stp_monte_carlo, LinkStats, QuadratureSpec, RicianPower, StpEvaluator, Transfer,
};
use crate::coding::{file_recovery_enumerated, file_recovery_probability};
use crate::config::{Scenario, ScenarioConfig};
use crate::error::{Error, Result};

pub const RECOVERY_INSTANCES: usize = 1000;
pub const RECOVERY_MAX_HOLDERS: usize = 12;
pub const RECOVERY_TOL: f64 = 1e-12;
pub const STP_DRAWS: usize = 100;
pub const MC_SAMPLES: usize = 1_000_000;
pub const STP_TOL: f64 = 3e-3;
pub const CDF_FACTORS: [f64; 3] = [1.0, 3.0, 10.0];
pub const CDF_TOL: f64 = 3e-3;
pub const K_INVARIANCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    /// Poisson-binomial recovery probability against subset enumeration.
    Recovery,
    /// STP quadrature against Monte-Carlo sampling.
    Stp,
    /// Rician power CDF series against the empirical CDF.
    Cdf,
    /// STP independence of `k` at fixed file size and bandwidth.
    KInvariance,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 5] = ["recovery", "stp", "cdf", "k-invariance", "all"];

    pub fn name(self) -> &'static str {
        match self {
            Self::Recovery => "recovery",
            Self::Stp => "stp",
            Self::Cdf => "cdf",
            Self::KInvariance => "k-invariance",
            Self::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Self::Recovery, Self::Stp, Self::Cdf, Self::KInvariance, Self::All]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Unknown { what: "oracle suite", name: s.into() })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleCheck {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl OracleCheck {
    fn new(name: impl Into<String>, measured: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            measured,
            tolerance,
            passed: measured <= tolerance,
            detail,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub suite: Suite,
    pub seed: u64,
    pub config_hash: String,
    pub passed: bool,
    pub checks: Vec<OracleCheck>,
}

fn recovery_suite(seed: u64) -> Vec<OracleCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 5, 0));
    let (mut worst, mut at) = (0.0f64, String::new());
    for i in 0..RECOVERY_INSTANCES {
        let n = rng.random_range(0..=RECOVERY_MAX_HOLDERS);
        let etas: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let k = rng.random_range(1..=n + 1);
        let d = (file_recovery_probability(&etas, k) - file_recovery_enumerated(&etas, k)).abs();
        if d > worst || i == 0 {
            worst = d;
            at = format!("instance {i}: |S| = {n}, k = {k}");
        }
    }
    vec![OracleCheck::new(
        format!("max |dp - enumeration| over {RECOVERY_INSTANCES} instances"),
        worst,
        RECOVERY_TOL,
        at,
    )]
}

/// A random link and transfer around the scenario's operating point.
fn random_case(sc: &Scenario, rng: &mut ChaCha8Rng) -> (Transfer, LinkStats) {
    let cfg = &sc.config;
    let snr_db = rng.random_range(cfg.radio.snr_threshold_db..cfg.radio.snr_threshold_db + 15.0);
    let chi = rng.random_range(1.0..10.0);
    let p = cfg.radio.transmit_power_w;
    let mean_gain = 10f64.powf(snr_db / 10.0) / p;
    let distance_m = (sc.beta0 / (sc.noise_power_w * mean_gain)).powf(1.0 / cfg.radio.pathloss_exponent);
    let link = LinkStats {
        distance_m,
        mean_gain,
        mean_snr: p * mean_gain,
        rician_factor: chi,
        zeta: (chi + 1.0) / mean_gain,
    };
    let [lo, hi] = cfg.coding.content_bits_per_cell;
    let cells = rng.random_range(1..=100) as f64;
    let per_cell = if hi > lo { rng.random_range(lo..=hi) } else { lo };
    let levels = &cfg.radio.bandwidth_levels_hz;
    let transfer = Transfer {
        file_bits: per_cell * cells,
        k: cfg.coding.k_levels[rng.random_range(0..cfg.coding.k_levels.len())],
        bandwidth_hz: levels[rng.random_range(0..levels.len())],
        contact_time_s: sc.contact_time_s * rng.random_range(0.25f64.ln()..4f64.ln()).exp(),
        power_w: p,
    };
    (transfer, link)
}

fn stp_suite(sc: &Scenario, ev: &StpEvaluator) -> Result<Vec<OracleCheck>> {
    let seed = sc.config.seed;
    let devs = (0..STP_DRAWS as u64)
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 6, j));
            let (tr, link) = random_case(sc, &mut rng);
            let q = ev.stp(&tr, &link)?;
            let mc = stp_monte_carlo(&tr, &link, MC_SAMPLES, &mut rng)?;
            Ok(((q - mc.mean).abs(), q, mc.mean))
        })
        .collect::<Result<Vec<_>>>()?;
    let (j, &(worst, q, mc)) = devs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
        .expect("draws");
    Ok(vec![OracleCheck::new(
        format!("max |quadrature - monte carlo| over {STP_DRAWS} draws"),
        worst,
        STP_TOL,
        format!("draw {j}: quadrature {q:.6}, monte carlo {mc:.6} ({MC_SAMPLES} samples)"),
    )])
}

/// Kolmogorov distance between the series CDF and `samples` sorted draws.
fn sup_distance(chi: f64, seed: u64, spec: &QuadratureSpec) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let power = RicianPower { mean_gain: 1.0, chi };
    let mut xs: Vec<f64> = (0..MC_SAMPLES).map(|_| rng.sample(power)).collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let zeta = chi + 1.0;
    let mut sup = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = rician_power_cdf(x, chi, zeta, spec)?;
        sup = sup.max((f - i as f64 / n).abs()).max((f - (i + 1) as f64 / n).abs());
    }
    Ok(sup)
}

fn cdf_suite(seed: u64, spec: &QuadratureSpec) -> Result<Vec<OracleCheck>> {
    CDF_FACTORS
        .par_iter()
        .enumerate()
        .map(|(i, &chi)| {
            let d = sup_distance(chi, derive_seed(seed, 7, i as u64), spec)?;
            Ok(OracleCheck::new(
                format!("sup |series - empirical| at chi = {chi}"),
                d,
                CDF_TOL,
                format!("{MC_SAMPLES} samples"),
            ))
        })
        .collect()
}

fn k_invariance_suite(sc: &Scenario, ev: &StpEvaluator) -> Result<Vec<OracleCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(sc.config.seed, 8, 0));
    let mut ks: Vec<usize> = sc.config.coding.k_levels.clone();
    ks.extend([1, 2, 3]);
    ks.sort_unstable();
    ks.dedup();
    let mut worst = 0.0f64;
    for _ in 0..STP_DRAWS {
        let (tr, link) = random_case(sc, &mut rng);
        let base = ev.stp(&Transfer { k: 1, ..tr }, &link)?;
        for &k in &ks {
            worst = worst.max((ev.stp(&Transfer { k, ..tr }, &link)? - base).abs());
        }
    }
    Ok(vec![OracleCheck::new(
        format!("max |stp(k) - stp(1)| over {STP_DRAWS} draws"),
        worst,
        K_INVARIANCE_TOL,
        format!("k in {ks:?}"),
    )])
}

pub fn run_suite(cfg: &ScenarioConfig, suite: Suite) -> Result<OracleReport> {
    let sc = cfg.resolve()?;
    let spec = QuadratureSpec::from_scenario(&sc);
    let ev = StpEvaluator::new(spec)?;
    let seed = sc.config.seed;
    let mut checks = Vec::new();
    if matches!(suite, Suite::Recovery | Suite::All) {
        checks.extend(recovery_suite(seed));
    }
    if matches!(suite, Suite::Stp | Suite::All) {
        checks.extend(stp_suite(&sc, &ev)?);
    }
    if matches!(suite, Suite::Cdf | Suite::All) {
        checks.extend(cdf_suite(seed, &spec)?);
    }
    if matches!(suite, Suite::KInvariance | Suite::All) {
        checks.extend(k_invariance_suite(&sc, &ev)?);
    }
    Ok(OracleReport {
        suite,
        seed,
        config_hash: sc.hash(),
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

/// Runs a suite and writes `oracle_<suite>.json` and `.csv`.
pub fn cmd_oracle(cfg: &ScenarioConfig, suite: Suite, out: &Path) -> Result<OracleReport> {
    let report = run_suite(cfg, suite)?;
    prepare_out(out, &cfg.resolve()?)?;
    let mut w = csv_writer(&out.join(format!("oracle_{suite}.csv")))?;
    w.write_record(["check", "measured", "tolerance", "passed", "config_hash"])?;
    for c in &report.checks {
        w.write_record([
            c.name.clone(),
            c.measured.to_string(),
            c.tolerance.to_string(),
            c.passed.to_string(),
            report.config_hash.clone(),
        ])?;
    }
    w.flush()?;
    write_json(&out.join(format!("oracle_{suite}.json")), &report)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_roundtrip() {
        for name in Suite::NAMES {
            assert_eq!(name.parse::<Suite>().unwrap().name(), name);
        }
        assert!(matches!("eq".parse::<Suite>(), Err(Error::Unknown { .. })));
    }

    #[test]
    fn recovery_suite_passes() {
        let r = run_suite(&ScenarioConfig::default(), Suite::Recovery).unwrap();
        assert!(r.passed, "{:?}", r.checks);
        assert_eq!(r.checks.len(), 1);
    }

    #[test]
    fn k_invariance_suite_passes() {
        let r = run_suite(&ScenarioConfig::default(), Suite::KInvariance).unwrap();
        assert!(r.passed, "{:?}", r.checks);
    }

    #[test]
    fn random_cases_sit_above_threshold() {
        let sc = ScenarioConfig::default().resolve().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            let (tr, link) = random_case(&sc, &mut rng);
            assert!(link.mean_snr >= sc.snr_threshold);
            assert!((link.zeta * link.mean_gain - link.rician_factor - 1.0).abs() < 1e-9);
            assert!(tr.file_bits > 0.0 && tr.contact_time_s > 0.0);
        }
    }
}
