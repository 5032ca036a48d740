//! Scenario configuration.
//!
//! The on-disk document is JSON with every section optional; missing fields
//! take the default profile (the 16-CU, 2-SU, 10 MHz scenario plus the
//! engineering defaults for everything the physical model leaves open).
//! Unknown fields are rejected. Decibel quantities live in the document and
//! are converted to linear exactly once, in [`ScenarioConfig::resolve`].

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calibrate;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub area: AreaConfig,
    pub nodes: NodeConfig,
    pub radio: RadioConfig,
    pub coding: CodingConfig,
    pub calibration: CalibrationConfig,
    pub numerics: NumericsConfig,
    pub episode: EpisodeConfig,
    pub dqn: DqnConfig,
    pub pso: PsoConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AreaConfig {
    pub extent_x_m: f64,
    pub extent_y_m: f64,
    pub cell_side_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NodeConfig {
    pub sensing_uavs: usize,
    pub coop_uavs: usize,
    pub altitude_m: f64,
    /// Inradius of the regular-polygon sensing footprint.
    pub apothem_m: f64,
    pub polygon_sides: usize,
    pub speed_mps: f64,
    pub slot_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    pub total_bandwidth_hz: f64,
    pub bandwidth_levels_hz: Vec<f64>,
    pub transmit_power_w: f64,
    pub noise_power_dbm: f64,
    pub snr_threshold_db: f64,
    pub rician_factor: f64,
    pub pathloss_exponent: f64,
    /// Reference channel power gain at 1 m. `None` means derive it from
    /// `beta0_ref_distance_m` and `beta0_margin_db`.
    pub beta0: Option<f64>,
    pub beta0_ref_distance_m: f64,
    pub beta0_margin_db: f64,
    /// Mean CU-GV contact time. `None` means calibrate it against
    /// `calibration.target_stp`.
    pub contact_time_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecoveryMode {
    /// Every eligible holder transmits; recovery needs at least k successes.
    AllEligible,
    /// Only the k selected holders transmit; recovery needs all of them.
    SelectedK,
    /// Uncoded transfer: the single best eligible holder sends the whole file.
    NonCoded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellMode {
    /// A scheduled SU recovers its cells with its file recovery probability.
    Simplified,
    /// Additionally multiplies by the product of the selected links' STPs.
    LinkProduct,
}

impl fmt::Display for RecoveryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecoveryMode::AllEligible => "all-eligible",
            RecoveryMode::SelectedK => "selected-k",
            RecoveryMode::NonCoded => "non-coded",
        })
    }
}

impl fmt::Display for CellMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CellMode::Simplified => "simplified",
            CellMode::LinkProduct => "link-product",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodingConfig {
    pub k_levels: Vec<usize>,
    /// Fragment holders per file; capped by the CU count.
    pub holders: usize,
    pub recovery_mode: RecoveryMode,
    pub cell_mode: CellMode,
    /// Per-cell map content, bits, drawn uniformly from `[lo, hi]`.
    pub content_bits_per_cell: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    pub target_stp: f64,
    pub reference_content_bits_per_cell: f64,
    pub reference_cells: usize,
    pub reference_bandwidth_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsConfig {
    pub quadrature_nodes: usize,
    pub series_tol: f64,
    pub series_max_terms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodeConfig {
    pub horizon: usize,
    /// Every reset draws placement and mobility from the scenario seed, so
    /// episodes differ only in file sizes.
    pub fixed_placement: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DqnConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub grad_clip: f64,
    pub discount: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_fraction: f64,
    pub batch_size: usize,
    pub memory_size: usize,
    pub target_sync_steps: usize,
    pub episodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoConfig {
    pub particles: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            area: AreaConfig::default(),
            nodes: NodeConfig::default(),
            radio: RadioConfig::default(),
            coding: CodingConfig::default(),
            calibration: CalibrationConfig::default(),
            numerics: NumericsConfig::default(),
            episode: EpisodeConfig::default(),
            dqn: DqnConfig::default(),
            pso: PsoConfig::default(),
        }
    }
}

impl Default for AreaConfig {
    fn default() -> Self {
        Self {
            extent_x_m: 1000.0,
            extent_y_m: 1000.0,
            cell_side_m: 50.0,
        }
    }
}

impl Default for NodeConfig {
    fn default() -> Self {
        Self {
            sensing_uavs: 2,
            coop_uavs: 16,
            altitude_m: 100.0,
            apothem_m: 200.0,
            polygon_sides: 4,
            speed_mps: 10.0,
            slot_s: 1.0,
        }
    }
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            total_bandwidth_hz: 10e6,
            bandwidth_levels_hz: vec![2e6, 6e6],
            transmit_power_w: 0.15,
            noise_power_dbm: -90.0,
            snr_threshold_db: 27.0,
            rician_factor: 3.0,
            pathloss_exponent: 4.0,
            beta0: None,
            beta0_ref_distance_m: 200.0,
            beta0_margin_db: 3.0,
            contact_time_s: None,
        }
    }
}

impl Default for CodingConfig {
    fn default() -> Self {
        Self {
            k_levels: vec![1, 2, 3],
            holders: 8,
            recovery_mode: RecoveryMode::AllEligible,
            cell_mode: CellMode::Simplified,
            content_bits_per_cell: [73e3, 83e3],
        }
    }
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            target_stp: 0.8,
            reference_content_bits_per_cell: 78e3,
            reference_cells: 9,
            reference_bandwidth_hz: 2e6,
        }
    }
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            quadrature_nodes: 64,
            series_tol: 1e-12,
            series_max_terms: 64,
        }
    }
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            horizon: 60,
            fixed_placement: false,
        }
    }
}

impl Default for DqnConfig {
    fn default() -> Self {
        Self {
            hidden: vec![128, 128],
            learning_rate: 1e-3,
            optimizer: OptimizerKind::Sgd,
            grad_clip: 1.0,
            discount: 0.5,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_fraction: 0.8,
            batch_size: 32,
            memory_size: 2000,
            target_sync_steps: 100,
            episodes: 1000,
        }
    }
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            particles: 30,
            iterations: 50,
            inertia: 0.7,
            cognitive: 1.5,
            social: 1.5,
        }
    }
}

/// Converts a decibel ratio to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

/// A validated configuration with all derived quantities in linear units.
#[derive(Debug, Clone)]
pub struct Scenario {
    /// The resolved document: calibrated fields are filled in, so
    /// serializing it reproduces this scenario exactly.
    pub config: ScenarioConfig,
    pub noise_power_w: f64,
    pub snr_threshold: f64,
    pub beta0: f64,
    pub contact_time_s: f64,
}

impl ScenarioConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a configuration document.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_json_str(&text)
    }

    /// Checks every field and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let mut positive = |name: &str, v: f64| {
            if !(v.is_finite() && v > 0.0) {
                errs.push(format!("{name} must be positive (got {v})"));
            }
        };
        positive("area.extent_x_m", self.area.extent_x_m);
        positive("area.extent_y_m", self.area.extent_y_m);
        positive("area.cell_side_m", self.area.cell_side_m);
        positive("nodes.altitude_m", self.nodes.altitude_m);
        positive("nodes.apothem_m", self.nodes.apothem_m);
        positive("nodes.slot_s", self.nodes.slot_s);
        positive("radio.total_bandwidth_hz", self.radio.total_bandwidth_hz);
        positive("radio.transmit_power_w", self.radio.transmit_power_w);
        positive("radio.rician_factor", self.radio.rician_factor);
        positive("radio.pathloss_exponent", self.radio.pathloss_exponent);
        positive("radio.beta0_ref_distance_m", self.radio.beta0_ref_distance_m);
        if let Some(b) = self.radio.beta0 {
            positive("radio.beta0", b);
        }
        if let Some(t) = self.radio.contact_time_s {
            positive("radio.contact_time_s", t);
        }
        positive("calibration.reference_content_bits_per_cell", self.calibration.reference_content_bits_per_cell);
        positive("calibration.reference_bandwidth_hz", self.calibration.reference_bandwidth_hz);
        positive("numerics.series_tol", self.numerics.series_tol);
        positive("dqn.learning_rate", self.dqn.learning_rate);
        positive("dqn.grad_clip", self.dqn.grad_clip);
        for (i, &b) in self.radio.bandwidth_levels_hz.iter().enumerate() {
            positive(&format!("radio.bandwidth_levels_hz[{i}]"), b);
        }

        if !(self.nodes.speed_mps.is_finite() && self.nodes.speed_mps >= 0.0) {
            errs.push(format!("nodes.speed_mps must be non-negative (got {})", self.nodes.speed_mps));
        }
        if !self.radio.noise_power_dbm.is_finite() {
            errs.push("radio.noise_power_dbm must be finite".into());
        }
        if !self.radio.snr_threshold_db.is_finite() {
            errs.push("radio.snr_threshold_db must be finite".into());
        }
        if self.nodes.sensing_uavs == 0 {
            errs.push("nodes.sensing_uavs must be at least 1".into());
        }
        if self.nodes.coop_uavs == 0 {
            errs.push("nodes.coop_uavs must be at least 1".into());
        }
        if self.nodes.polygon_sides < 3 {
            errs.push(format!("nodes.polygon_sides must be at least 3 (got {})", self.nodes.polygon_sides));
        }
        if self.radio.bandwidth_levels_hz.is_empty() {
            errs.push("radio.bandwidth_levels_hz must be nonempty".into());
        }
        if self.coding.k_levels.is_empty() {
            errs.push("coding.k_levels must be nonempty".into());
        }
        if self.coding.k_levels.contains(&0) {
            errs.push("coding.k_levels entries must be at least 1".into());
        }
        if self.coding.holders == 0 {
            errs.push("coding.holders must be at least 1".into());
        }
        let max_k = self.coding.k_levels.iter().copied().max().unwrap_or(1);
        if max_k > self.coding.holders.min(self.nodes.coop_uavs) {
            errs.push(format!(
                "coding.k_levels maximum {max_k} exceeds the holder count {}",
                self.coding.holders.min(self.nodes.coop_uavs)
            ));
        }
        let [lo, hi] = self.coding.content_bits_per_cell;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
            errs.push(format!("coding.content_bits_per_cell must satisfy 0 < lo <= hi (got [{lo}, {hi}])"));
        }
        if !(self.calibration.target_stp > 0.0 && self.calibration.target_stp < 1.0) {
            errs.push(format!("calibration.target_stp must lie in (0, 1) (got {})", self.calibration.target_stp));
        }
        if self.calibration.reference_cells == 0 {
            errs.push("calibration.reference_cells must be at least 1".into());
        }
        if self.numerics.quadrature_nodes < 8 {
            errs.push(format!("numerics.quadrature_nodes must be at least 8 (got {})", self.numerics.quadrature_nodes));
        }
        if self.numerics.series_max_terms == 0 {
            errs.push("numerics.series_max_terms must be at least 1".into());
        }
        if self.episode.horizon == 0 {
            errs.push("episode.horizon must be at least 1".into());
        }
        let d = &self.dqn;
        if !(d.discount > 0.0 && d.discount < 1.0) {
            errs.push(format!("dqn.discount must lie in (0, 1) (got {})", d.discount));
        }
        for (name, v) in [("dqn.epsilon_start", d.epsilon_start), ("dqn.epsilon_end", d.epsilon_end), ("dqn.epsilon_decay_fraction", d.epsilon_decay_fraction)] {
            if !(0.0..=1.0).contains(&v) {
                errs.push(format!("{name} must lie in [0, 1] (got {v})"));
            }
        }
        if d.hidden.is_empty() || d.hidden.contains(&0) {
            errs.push("dqn.hidden must list at least one nonzero layer width".into());
        }
        if d.batch_size == 0 {
            errs.push("dqn.batch_size must be at least 1".into());
        }
        if d.memory_size < d.batch_size {
            errs.push(format!("dqn.memory_size {} is smaller than dqn.batch_size {}", d.memory_size, d.batch_size));
        }
        if d.target_sync_steps == 0 {
            errs.push("dqn.target_sync_steps must be at least 1".into());
        }
        if self.pso.particles == 0 {
            errs.push("pso.particles must be at least 1".into());
        }
        for (name, v) in [("pso.inertia", self.pso.inertia), ("pso.cognitive", self.pso.cognitive), ("pso.social", self.pso.social)] {
            if !(v.is_finite() && v >= 0.0) {
                errs.push(format!("{name} must be non-negative (got {v})"));
            }
        }
        for (axis, extent) in [("extent_x_m", self.area.extent_x_m), ("extent_y_m", self.area.extent_y_m)] {
            let ratio = extent / self.area.cell_side_m;
            if ratio.is_finite() && (ratio.round() - ratio).abs() > 1e-9 {
                errs.push(format!(
                    "area.{axis} {extent} is not divisible by area.cell_side_m {}",
                    self.area.cell_side_m
                ));
            }
        }

        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }

    /// Number of fragment holders actually used per file.
    pub fn effective_holders(&self) -> usize {
        self.coding.holders.min(self.nodes.coop_uavs)
    }

    /// Validates, converts units and fills in any missing calibrated field.
    pub fn resolve(&self) -> Result<Scenario> {
        self.validate()?;
        let mut cfg = self.clone();
        if cfg.radio.beta0.is_none() {
            cfg.radio.beta0 = Some(calibrate::beta0(&cfg));
        }
        if cfg.radio.contact_time_s.is_none() {
            cfg.radio.contact_time_s = Some(calibrate::contact_time(&cfg)?.contact_time_s);
        }
        Ok(Scenario::from_resolved(cfg))
    }

    /// Returns a copy with the numeric field at a dotted path replaced.
    pub fn with_override(&self, path: &str, value: f64) -> Result<Self> {
        let mut doc = serde_json::to_value(self)?;
        let mut slot = &mut doc;
        for part in path.split('.') {
            slot = match slot {
                serde_json::Value::Object(map) => map.get_mut(part).ok_or_else(|| Error::Unknown {
                    what: "config path",
                    name: path.to_string(),
                })?,
                _ => {
                    return Err(Error::Unknown {
                        what: "config path",
                        name: path.to_string(),
                    })
                }
            };
        }
        match slot {
            serde_json::Value::Number(_) | serde_json::Value::Null => {}
            serde_json::Value::Array(items) if items.iter().all(|v| v.is_number()) => {
                // Scalar over a numeric range pins both ends.
                for v in items.iter_mut() {
                    *v = json_number(value)?;
                }
                let cfg: ScenarioConfig = serde_json::from_value(doc)?;
                cfg.validate()?;
                return Ok(cfg);
            }
            _ => {
                return Err(Error::Config(format!("config path {path} is not numeric")));
            }
        }
        *slot = json_number(value)?;
        let cfg: ScenarioConfig = serde_json::from_value(doc)
            .map_err(|e| Error::Config(format!("override {path}={value}: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn json_number(value: f64) -> Result<serde_json::Value> {
    // Integral values are written as integers so integer fields accept them.
    if value.fract() == 0.0 && value.abs() < 9.0e15 {
        Ok(serde_json::Value::from(value as i64))
    } else {
        serde_json::Number::from_f64(value)
            .map(serde_json::Value::Number)
            .ok_or_else(|| Error::Config(format!("non-finite override value {value}")))
    }
}

impl Scenario {
    /// Builds a scenario from a document whose calibrated fields are set.
    ///
    /// Panics if `beta0` or `contact_time_s` is missing; use
    /// [`ScenarioConfig::resolve`] for untrusted input.
    pub fn from_resolved(config: ScenarioConfig) -> Self {
        let beta0 = config.radio.beta0.expect("beta0 resolved");
        let contact_time_s = config.radio.contact_time_s.expect("contact time resolved");
        Self {
            noise_power_w: dbm_to_watts(config.radio.noise_power_dbm),
            snr_threshold: db_to_linear(config.radio.snr_threshold_db),
            beta0,
            contact_time_s,
            config,
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.config).expect("config serializes")
    }

    /// Short content hash of the resolved document, stamped on every output.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(&self.config).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        hex::encode(&digest[..8])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = ScenarioConfig::from_json_str("{}").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        assert_eq!(cfg.nodes.coop_uavs, 16);
        assert_eq!(cfg.radio.total_bandwidth_hz, 10e6);
        assert_eq!(cfg.dqn.memory_size, 2000);
    }

    #[test]
    fn snr_threshold_converted_to_linear() {
        let cfg = ScenarioConfig::from_json_str(r#"{"radio": {"snr_threshold_db": 27}}"#).unwrap();
        let sc = cfg.resolve().unwrap();
        assert!((sc.snr_threshold - 10f64.powf(2.7)).abs() < 1e-9);
        assert!((sc.noise_power_w - 1e-12).abs() < 1e-24);
    }

    #[test]
    fn negative_contact_time_names_field() {
        let err = ScenarioConfig::from_json_str(r#"{"radio": {"contact_time_s": -1.0}}"#).unwrap_err();
        assert!(err.to_string().contains("radio.contact_time_s"), "{err}");
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(ScenarioConfig::from_json_str(r#"{"radio": {"bogus": 1}}"#).is_err());
        assert!(ScenarioConfig::from_json_str(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn errors_are_aggregated() {
        let err = ScenarioConfig::from_json_str(
            r#"{"nodes": {"polygon_sides": 2, "apothem_m": -3}, "dqn": {"discount": 1.5}}"#,
        )
        .unwrap_err();
        match err {
            Error::Validation(list) => assert_eq!(list.len(), 3, "{list:?}"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn missing_file_is_error() {
        assert!(ScenarioConfig::load(Path::new("/nonexistent/cfg.json")).is_err());
    }

    #[test]
    fn override_dotted_path() {
        let cfg = ScenarioConfig::default();
        let c2 = cfg.with_override("nodes.apothem_m", 150.0).unwrap();
        assert_eq!(c2.nodes.apothem_m, 150.0);
        let c3 = cfg.with_override("coding.content_bits_per_cell", 60e3).unwrap();
        assert_eq!(c3.coding.content_bits_per_cell, [60e3, 60e3]);
        let c4 = cfg.with_override("radio.beta0", 2.0).unwrap();
        assert_eq!(c4.radio.beta0, Some(2.0));
        assert!(cfg.with_override("nodes.nope", 1.0).is_err());
        assert!(cfg.with_override("coding.recovery_mode", 1.0).is_err());
    }

    #[test]
    fn resolve_is_stable() {
        let a = ScenarioConfig::default().resolve().unwrap();
        let b = ScenarioConfig::from_json_str(&a.to_json_pretty()).unwrap().resolve().unwrap();
        assert_eq!(a.config, b.config);
        assert_eq!(a.hash(), b.hash());
    }
}
