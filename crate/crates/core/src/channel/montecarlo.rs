//! Sampling oracles for the analytic link formulas.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use super::{LinkStats, Transfer};
use crate::error::{Error, Result};

/// Draws `|g|²` for a unit-mean Rician coefficient
/// `g = √(χ/(χ+1)) + √(1/(2(χ+1)))·(z₁ + j z₂)`.
pub fn sample_rician_gain<R: Rng + ?Sized>(chi: f64, rng: &mut R) -> f64 {
    let los = (chi / (chi + 1.0)).sqrt();
    let s = (0.5 / (chi + 1.0)).sqrt();
    let z1: f64 = StandardNormal.sample(rng);
    let z2: f64 = StandardNormal.sample(rng);
    let re = los + s * z1;
    let im = s * z2;
    re * re + im * im
}

/// Rician channel power `μ = μ̄·|g|²`.
#[derive(Debug, Clone, Copy)]
pub struct RicianPower {
    pub mean_gain: f64,
    pub chi: f64,
}

impl Distribution<f64> for RicianPower {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.mean_gain * sample_rician_gain(self.chi, rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Monte-Carlo STP: sample `T ~ Exp(mean τ)` and `μ`, count
/// `T ≥ α / ((B/k)·log₂(1 + pμ))`.
pub fn stp_monte_carlo<R: Rng + ?Sized>(
    transfer: &Transfer,
    link: &LinkStats,
    samples: usize,
    rng: &mut R,
) -> Result<McEstimate> {
    if samples < 10_000 {
        return Err(Error::Domain(format!("need at least 10^4 samples (got {samples})")));
    }
    transfer.check()?;
    if transfer.file_bits == 0.0 {
        return Ok(McEstimate { mean: 1.0, stderr: 0.0, samples });
    }
    let power = RicianPower {
        mean_gain: link.mean_gain,
        chi: link.rician_factor,
    };
    let alpha = transfer.fragment_bits();
    let per_cu = transfer.per_cu_bandwidth_hz();
    let mut hits = 0usize;
    for _ in 0..samples {
        let mu = power.sample(rng);
        let t: f64 = Exp1.sample(rng);
        let rate = per_cu * (1.0 + transfer.power_w * mu).log2();
        if t * transfer.contact_time_s >= alpha / rate {
            hits += 1;
        }
    }
    let mean = hits as f64 / samples as f64;
    let stderr = (mean * (1.0 - mean) / samples as f64).sqrt();
    Ok(McEstimate { mean, stderr, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_mean_gain() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 200_000;
        let mean: f64 = (0..n).map(|_| sample_rician_gain(3.0, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "{mean}");
    }

    fn link() -> LinkStats {
        LinkStats {
            distance_m: 180.0,
            mean_gain: 1e4,
            mean_snr: 1.5e3,
            rician_factor: 3.0,
            zeta: 4e-4,
        }
    }

    #[test]
    fn zero_file_is_certain() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = Transfer { file_bits: 0.0, k: 2, bandwidth_hz: 2e6, contact_time_s: 0.1, power_w: 0.15 };
        let est = stp_monte_carlo(&t, &link(), 10_000, &mut rng).unwrap();
        assert_eq!(est.mean, 1.0);
    }

    #[test]
    fn too_few_samples_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = Transfer { file_bits: 1e5, k: 1, bandwidth_hz: 2e6, contact_time_s: 0.1, power_w: 0.15 };
        assert!(stp_monte_carlo(&t, &link(), 100, &mut rng).is_err());
    }

    #[test]
    fn stderr_scales_with_sample_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = Transfer { file_bits: 7e5, k: 1, bandwidth_hz: 2e6, contact_time_s: 0.07, power_w: 0.15 };
        let small = stp_monte_carlo(&t, &link(), 10_000, &mut rng).unwrap();
        let large = stp_monte_carlo(&t, &link(), 1_000_000, &mut rng).unwrap();
        let ratio = small.stderr / large.stderr;
        assert!((8.0..12.5).contains(&ratio), "{ratio}");
    }
}
