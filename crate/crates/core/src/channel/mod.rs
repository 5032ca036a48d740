//! Air-to-ground link model.
//!
//! Large-scale gain follows a power law in distance; small-scale fading is
//! Rician with factor `χ`, so the normalized channel power `μ = |h|²/σ₀²` has
//! a Marcum-Q type CDF expressed as a double series. A fragment of `α` bits
//! sent over bandwidth `B/k` succeeds when the exponential contact time
//! (mean `τ`) outlasts the transfer time `α / ((B/k)·log₂(1 + pμ))`.

mod montecarlo;
mod quadrature;

pub use montecarlo::{sample_rician_gain, stp_monte_carlo, McEstimate, RicianPower};
pub use quadrature::GaussLaguerre;

use std::f64::consts::LN_2;

use crate::config::Scenario;
use crate::error::{Error, Result};

/// Physical constants shared by every link in a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    pub beta0: f64,
    pub pathloss_exponent: f64,
    pub noise_power_w: f64,
    pub transmit_power_w: f64,
    pub rician_factor: f64,
}

impl RadioParams {
    pub fn from_scenario(sc: &Scenario) -> Self {
        Self {
            beta0: sc.beta0,
            pathloss_exponent: sc.config.radio.pathloss_exponent,
            noise_power_w: sc.noise_power_w,
            transmit_power_w: sc.config.radio.transmit_power_w,
            rician_factor: sc.config.radio.rician_factor,
        }
    }
}

/// Statistics of one CU→GV link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkStats {
    pub distance_m: f64,
    /// Mean of `μ = |h|²/σ₀²`.
    pub mean_gain: f64,
    /// `p · mean_gain`.
    pub mean_snr: f64,
    pub rician_factor: f64,
    /// `(χ + 1) / mean_gain`.
    pub zeta: f64,
}

/// Numerical controls for the CDF series and the STP integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub node_count: usize,
    pub series_tol: f64,
    pub series_max_terms: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            node_count: 64,
            series_tol: 1e-12,
            series_max_terms: 64,
        }
    }
}

impl QuadratureSpec {
    pub fn from_scenario(sc: &Scenario) -> Self {
        let n = &sc.config.numerics;
        Self {
            node_count: n.quadrature_nodes,
            series_tol: n.series_tol,
            series_max_terms: n.series_max_terms,
        }
    }
}

pub fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Link statistics between a CU and the ground vehicle.
pub fn link_stats(cu: [f64; 3], gv: [f64; 3], radio: &RadioParams) -> Result<LinkStats> {
    let d = distance(cu, gv);
    if d <= 0.0 {
        return Err(Error::Domain("co-located CU and ground vehicle".into()));
    }
    let mean_gain = radio.beta0 * d.powf(-radio.pathloss_exponent) / radio.noise_power_w;
    Ok(LinkStats {
        distance_m: d,
        mean_gain,
        mean_snr: radio.transmit_power_w * mean_gain,
        rician_factor: radio.rician_factor,
        zeta: (radio.rician_factor + 1.0) / mean_gain,
    })
}

/// CDF of the Rician channel power `μ` at `x`.
///
/// `F(x) = 1 − e^(−χ) Σ_m χ^m/m! · Σ_{l≤m} (ζx)^l/l! · e^(−ζx)`. The inner
/// sum is a Poisson CDF and is accumulated incrementally. Each outer term is
/// bounded by the Poisson(χ) mass `e^(−χ) χ^m/m!`; the series stops once past
/// the mode that bound drops below `series_tol`, or at `series_max_terms`.
pub fn rician_power_cdf(x: f64, chi: f64, zeta: f64, spec: &QuadratureSpec) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!("channel power must be non-negative (got {x})")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let y = zeta * x;
    if !y.is_finite() {
        return Ok(1.0);
    }
    let mut poisson_term = (-y).exp();
    let mut poisson_cdf = poisson_term;
    let mut chi_mass = (-chi).exp();
    let mut tail = chi_mass * poisson_cdf;
    for m in 1..spec.series_max_terms {
        let mf = m as f64;
        chi_mass *= chi / mf;
        poisson_term *= y / mf;
        poisson_cdf += poisson_term;
        tail += chi_mass * poisson_cdf.min(1.0);
        if mf > chi && chi_mass < spec.series_tol {
            break;
        }
    }
    Ok((1.0 - tail).clamp(0.0, 1.0))
}

/// CDF of the spectral efficiency `R = log₂(1 + pμ)`.
pub fn rate_cdf(r: f64, link: &LinkStats, power_w: f64, spec: &QuadratureSpec) -> Result<f64> {
    if r.is_nan() || r < 0.0 {
        return Err(Error::Domain(format!("rate must be non-negative (got {r})")));
    }
    let x = (r.exp2() - 1.0) / power_w;
    rician_power_cdf(x, link.rician_factor, link.zeta, spec)
}

/// Parameters of one fragment transfer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transfer {
    /// File size `Z` in bits; the fragment is `Z/k`.
    pub file_bits: f64,
    pub k: usize,
    /// Bandwidth allocated to the file; each CU gets `B/k`.
    pub bandwidth_hz: f64,
    pub contact_time_s: f64,
    pub power_w: f64,
}

impl Transfer {
    fn check(&self) -> Result<()> {
        if !(self.file_bits >= 0.0) {
            return Err(Error::Domain(format!("file size must be non-negative (got {})", self.file_bits)));
        }
        if self.k == 0 {
            return Err(Error::Domain("k must be at least 1".into()));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::Domain(format!("bandwidth must be positive (got {})", self.bandwidth_hz)));
        }
        if !(self.contact_time_s > 0.0) {
            return Err(Error::Domain(format!("contact time must be positive (got {})", self.contact_time_s)));
        }
        if !(self.power_w > 0.0) {
            return Err(Error::Domain(format!("transmit power must be positive (got {})", self.power_w)));
        }
        Ok(())
    }

    pub fn fragment_bits(&self) -> f64 {
        self.file_bits / self.k as f64
    }

    pub fn per_cu_bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz / self.k as f64
    }
}

/// Successful-transmission-probability evaluator with a cached quadrature rule.
#[derive(Debug, Clone)]
pub struct StpEvaluator {
    spec: QuadratureSpec,
    rule: GaussLaguerre,
}

impl StpEvaluator {
    pub fn new(spec: QuadratureSpec) -> Result<Self> {
        if spec.node_count < 8 {
            return Err(Error::Domain(format!("node_count must be at least 8 (got {})", spec.node_count)));
        }
        if !(spec.series_tol > 0.0) {
            return Err(Error::Domain("series_tol must be positive".into()));
        }
        Ok(Self {
            rule: GaussLaguerre::new(spec.node_count),
            spec,
        })
    }

    pub fn spec(&self) -> &QuadratureSpec {
        &self.spec
    }

    /// `η = ∫₀^∞ (1 − F_R(α / (τ·(B/k)·t))) e^(−t) dt`.
    ///
    /// In `t` the integrand is close to a step (the rate spread under Rician
    /// fading is narrow), which a fixed Laguerre rule resolves poorly. The
    /// same double integral is evaluated with the contact-time integral in
    /// closed form, `η = E_μ[exp(−s / log₂(1 + pμ))]` with `s = α/(τ·B/k)`,
    /// and the fading expectation over the Poisson(χ) mixture of
    /// Gamma(m + 1, ζ) laws that makes up the Rician power:
    /// `η = Σ_m e^(−χ) χ^m/m! · Σ_j w_j · u_j^m/m! · h(u_j/ζ)`.
    /// The outer series is truncated like the CDF series.
    pub fn stp(&self, transfer: &Transfer, link: &LinkStats) -> Result<f64> {
        transfer.check()?;
        if transfer.file_bits == 0.0 {
            return Ok(1.0);
        }
        let s = transfer.fragment_bits() / (transfer.contact_time_s * transfer.per_cu_bandwidth_hz());
        let p = transfer.power_w;
        let success = |mu: f64| {
            let rate = (p * mu).ln_1p() / LN_2;
            if rate > 0.0 {
                (-s / rate).exp()
            } else {
                0.0
            }
        };
        let nodes = self.rule.nodes();
        let weights = self.rule.weights();
        let h: Vec<f64> = nodes.iter().map(|&u| success(u / link.zeta)).collect();
        let ln_u: Vec<f64> = nodes.iter().map(|u| u.ln()).collect();
        let chi = link.rician_factor;
        let mut chi_mass = (-chi).exp();
        let mut ln_fact = 0.0;
        let mut acc = 0.0;
        for m in 0..self.spec.series_max_terms {
            let mf = m as f64;
            if m > 0 {
                chi_mass *= chi / mf;
                ln_fact += mf.ln();
            }
            let gamma_mean: f64 = weights
                .iter()
                .zip(&ln_u)
                .zip(&h)
                .map(|((&w, &lu), &hv)| w * (mf * lu - ln_fact).exp() * hv)
                .sum();
            acc += chi_mass * gamma_mean;
            if mf > chi && chi_mass < self.spec.series_tol {
                break;
            }
        }
        Ok(acc.clamp(0.0, 1.0))
    }

    /// Direct Laguerre rule over the normalized contact time `t`. Kept for
    /// comparison; it is inaccurate when the rate distribution is narrow.
    pub fn stp_contact_quadrature(&self, transfer: &Transfer, link: &LinkStats) -> Result<f64> {
        transfer.check()?;
        if transfer.file_bits == 0.0 {
            return Ok(1.0);
        }
        let scale = transfer.fragment_bits() / (transfer.contact_time_s * transfer.per_cu_bandwidth_hz());
        let mut acc = 0.0;
        for (&t, &w) in self.rule.nodes().iter().zip(self.rule.weights()) {
            let f = rate_cdf(scale / t, link, transfer.power_w, &self.spec)?;
            acc += w * (1.0 - f);
        }
        Ok(acc.clamp(0.0, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn radio() -> RadioParams {
        RadioParams {
            beta0: 1.6 / 0.15,
            pathloss_exponent: 4.0,
            noise_power_w: 1e-12,
            transmit_power_w: 0.15,
            rician_factor: 3.0,
        }
    }

    fn test_link(chi: f64, zeta: f64) -> LinkStats {
        let mean_gain = (chi + 1.0) / zeta;
        LinkStats {
            distance_m: 1.0,
            mean_gain,
            mean_snr: 0.15 * mean_gain,
            rician_factor: chi,
            zeta,
        }
    }

    #[test]
    fn overhead_link_at_altitude() {
        let r = radio();
        let l = link_stats([500.0, 500.0, 100.0], [500.0, 500.0, 0.0], &r).unwrap();
        assert_eq!(l.distance_m, 100.0);
        let expect = r.beta0 * 1e-8 / r.noise_power_w;
        assert!((l.mean_gain - expect).abs() <= 1e-12 * expect);
        assert_eq!(l.mean_snr, 0.15 * l.mean_gain);
        assert!((l.zeta - 4.0 / l.mean_gain).abs() < 1e-20);
    }

    #[test]
    fn doubling_distance_divides_gain_by_sixteen() {
        let r = radio();
        let a = link_stats([0.0, 0.0, 100.0], [0.0, 0.0, 0.0], &r).unwrap();
        let b = link_stats([0.0, 0.0, 200.0], [0.0, 0.0, 0.0], &r).unwrap();
        assert!((a.mean_gain / b.mean_gain - 16.0).abs() < 1e-9);
    }

    #[test]
    fn colocated_is_error() {
        assert!(link_stats([1.0, 2.0, 0.0], [1.0, 2.0, 0.0], &radio()).is_err());
    }

    #[test]
    fn cdf_endpoints() {
        let spec = QuadratureSpec::default();
        assert_eq!(rician_power_cdf(0.0, 3.0, 4.0, &spec).unwrap(), 0.0);
        let far = rician_power_cdf(50.0 / 4.0, 3.0, 4.0, &spec).unwrap();
        assert!((1.0 - far) <= spec.series_tol, "{far}");
        assert!(rician_power_cdf(-1.0, 3.0, 4.0, &spec).is_err());
        assert_eq!(rician_power_cdf(f64::INFINITY, 3.0, 4.0, &spec).unwrap(), 1.0);
    }

    #[test]
    fn cdf_rayleigh_limit() {
        // χ → 0 reduces to the exponential CDF 1 − e^(−ζx).
        let spec = QuadratureSpec::default();
        for x in [0.1, 0.5, 1.0, 3.0] {
            let f = rician_power_cdf(x, 1e-12, 2.0, &spec).unwrap();
            assert!((f - (1.0 - (-2.0 * x).exp())).abs() < 1e-10);
        }
    }

    #[test]
    fn cdf_monotone_on_grid() {
        let spec = QuadratureSpec::default();
        for chi in [0.5, 3.0, 10.0] {
            let mut prev = 0.0;
            for i in 0..400 {
                let x = i as f64 * 0.02;
                let f = rician_power_cdf(x, chi, 4.0, &spec).unwrap();
                assert!(f >= prev - 1e-14 && (0.0..=1.0).contains(&f));
                prev = f;
            }
        }
    }

    #[test]
    fn rate_cdf_zero_and_monotone() {
        use rand::Rng;
        let spec = QuadratureSpec::default();
        let link = test_link(3.0, 4.0);
        assert_eq!(rate_cdf(0.0, &link, 0.15, &spec).unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let a: f64 = rng.random_range(0.0..8.0);
            let b: f64 = rng.random_range(0.0..8.0);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            assert!(rate_cdf(lo, &link, 0.15, &spec).unwrap() <= rate_cdf(hi, &link, 0.15, &spec).unwrap() + 1e-15);
        }
    }

    #[test]
    fn rate_cdf_is_power_cdf_at_threshold() {
        let spec = QuadratureSpec::default();
        let link = test_link(3.0, 4.0);
        let via_rate = rate_cdf(1.0, &link, 0.15, &spec).unwrap();
        let direct = rician_power_cdf(1.0 / 0.15, 3.0, 4.0, &spec).unwrap();
        assert_eq!(via_rate, direct);
    }

    fn transfer(z: f64, k: usize, b: f64) -> Transfer {
        Transfer {
            file_bits: z,
            k,
            bandwidth_hz: b,
            contact_time_s: 0.07,
            power_w: 0.15,
        }
    }

    #[test]
    fn stp_edge_cases() {
        let ev = StpEvaluator::new(QuadratureSpec::default()).unwrap();
        let link = link_stats([600.0, 550.0, 100.0], [500.0, 500.0, 0.0], &radio()).unwrap();
        assert_eq!(ev.stp(&transfer(0.0, 2, 2e6), &link).unwrap(), 1.0);
        assert!(ev.stp(&transfer(702e3, 1, 1.0), &link).unwrap() < 1e-3);
        assert!(ev.stp(&transfer(-1.0, 1, 2e6), &link).is_err());
        assert!(ev.stp(&transfer(1.0, 0, 2e6), &link).is_err());
        assert!(ev.stp(&transfer(1.0, 1, 0.0), &link).is_err());
    }

    #[test]
    fn stp_invariant_to_k() {
        let ev = StpEvaluator::new(QuadratureSpec::default()).unwrap();
        let link = link_stats([620.0, 480.0, 100.0], [500.0, 500.0, 0.0], &radio()).unwrap();
        let base = ev.stp(&transfer(702e3, 1, 2e6), &link).unwrap();
        for k in 2..=3 {
            let eta = ev.stp(&transfer(702e3, k, 2e6), &link).unwrap();
            assert!((eta - base).abs() < 1e-9);
        }
    }

    #[test]
    fn stp_monotone_in_size_bandwidth_and_time() {
        let ev = StpEvaluator::new(QuadratureSpec::default()).unwrap();
        let link = link_stats([650.0, 520.0, 100.0], [500.0, 500.0, 0.0], &radio()).unwrap();
        let sizes = [1e5, 3e5, 7e5, 1.5e6, 4e6];
        let bands = [1e6, 2e6, 6e6, 10e6];
        let taus = [0.01, 0.05, 0.1, 0.5];
        for &b in &bands {
            for &tau in &taus {
                let mut prev = 1.0;
                for &z in &sizes {
                    let eta = ev.stp(&Transfer { contact_time_s: tau, ..transfer(z, 1, b) }, &link).unwrap();
                    assert!(eta <= prev + 1e-12);
                    prev = eta;
                }
            }
        }
        for &z in &sizes {
            let mut prev = 0.0;
            for &b in &bands {
                let eta = ev.stp(&transfer(z, 1, b), &link).unwrap();
                assert!(eta >= prev - 1e-12);
                prev = eta;
            }
            let mut prev = 0.0;
            for &tau in &taus {
                let eta = ev.stp(&Transfer { contact_time_s: tau, ..transfer(z, 1, 2e6) }, &link).unwrap();
                assert!(eta >= prev - 1e-12);
                prev = eta;
            }
        }
    }

    #[test]
    fn rejects_small_rule() {
        let spec = QuadratureSpec { node_count: 4, ..Default::default() };
        assert!(StpEvaluator::new(spec).is_err());
    }
}
