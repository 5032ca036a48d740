//! Flat joint action spaces.
//!
//! An action fixes, per SU, whether it is scheduled, its bandwidth and its
//! code dimension `k`. Unscheduled SUs are canonicalized to the lowest
//! bandwidth and `k` level so each SU has exactly one "off" choice. Actions
//! are enumerated lexicographically (SU 0 most significant, then
//! scheduling, bandwidth level, `k` level) and combinations violating the
//! total-bandwidth budget are dropped.

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};

/// Relative slack when comparing bandwidth sums against the budget.
const BUDGET_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuDecision {
    pub scheduled: bool,
    pub bandwidth_hz: f64,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointAction {
    pub index: usize,
    pub decisions: Vec<SuDecision>,
}

impl JointAction {
    pub fn scheduled_bandwidth(&self) -> f64 {
        self.decisions.iter().filter(|d| d.scheduled).map(|d| d.bandwidth_hz).sum()
    }

    pub fn scheduled_count(&self) -> usize {
        self.decisions.iter().filter(|d| d.scheduled).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandwidthRule {
    /// Bandwidth chosen per SU from the configured level set.
    Levels,
    /// Every scheduled SU gets `B_total / (number scheduled)`.
    EqualShare,
}

#[derive(Debug, Clone)]
pub struct ActionSpace {
    rule: BandwidthRule,
    total_bandwidth_hz: f64,
    bandwidth_levels: Vec<f64>,
    k_levels: Vec<usize>,
    actions: Vec<JointAction>,
}

/// Per-SU choice before bandwidth resolution.
#[derive(Debug, Clone, Copy)]
enum Choice {
    Off,
    On { band: Option<f64>, k: usize },
}

impl ActionSpace {
    /// Joint actions over bandwidth levels and `k` levels.
    pub fn leveled(cfg: &ScenarioConfig) -> Result<Self> {
        Self::build(cfg, BandwidthRule::Levels, &cfg.coding.k_levels)
    }

    /// Equal bandwidth split among scheduled SUs; only scheduling and `k` vary.
    pub fn equal_share(cfg: &ScenarioConfig) -> Result<Self> {
        Self::build(cfg, BandwidthRule::EqualShare, &cfg.coding.k_levels)
    }

    /// Leveled space restricted to `k = 1` (uncoded transfer).
    pub fn uncoded(cfg: &ScenarioConfig) -> Result<Self> {
        Self::build(cfg, BandwidthRule::Levels, &[1])
    }

    fn build(cfg: &ScenarioConfig, rule: BandwidthRule, k_levels: &[usize]) -> Result<Self> {
        let mut levels = cfg.radio.bandwidth_levels_hz.clone();
        if levels.is_empty() || k_levels.is_empty() {
            return Err(Error::Config("bandwidth and k level sets must be nonempty".into()));
        }
        let total = cfg.radio.total_bandwidth_hz;
        let low_band = levels.iter().copied().fold(f64::INFINITY, f64::min);
        let low_k = *k_levels.iter().min().expect("nonempty");
        let mut choices = vec![Choice::Off];
        match rule {
            BandwidthRule::Levels => {
                for &b in &levels {
                    for &k in k_levels {
                        choices.push(Choice::On { band: Some(b), k });
                    }
                }
            }
            BandwidthRule::EqualShare => {
                levels = Vec::new();
                for &k in k_levels {
                    choices.push(Choice::On { band: None, k });
                }
            }
        }

        let sus = cfg.nodes.sensing_uavs;
        let radix = choices.len();
        let combos = radix
            .checked_pow(sus as u32)
            .filter(|&c| c <= 1 << 22)
            .ok_or_else(|| Error::Config(format!("joint action space {radix}^{sus} is too large to enumerate")))?;

        let mut actions = Vec::new();
        let mut digits = vec![0usize; sus];
        for _ in 0..combos {
            let picks: Vec<Choice> = digits.iter().map(|&d| choices[d]).collect();
            let on = picks.iter().filter(|c| matches!(c, Choice::On { .. })).count();
            let decisions: Vec<SuDecision> = picks
                .iter()
                .map(|c| match *c {
                    Choice::Off => SuDecision { scheduled: false, bandwidth_hz: low_band, k: low_k },
                    Choice::On { band: Some(b), k } => SuDecision { scheduled: true, bandwidth_hz: b, k },
                    Choice::On { band: None, k } => SuDecision { scheduled: true, bandwidth_hz: total / on as f64, k },
                })
                .collect();
            let used: f64 = decisions.iter().filter(|d| d.scheduled).map(|d| d.bandwidth_hz).sum();
            if used <= total * (1.0 + BUDGET_SLACK) {
                actions.push(JointAction { index: actions.len(), decisions });
            }
            // Odometer increment, last SU fastest.
            for d in digits.iter_mut().rev() {
                *d += 1;
                if *d < radix {
                    break;
                }
                *d = 0;
            }
        }
        if actions.is_empty() {
            return Err(Error::Config("no feasible action under the bandwidth budget".into()));
        }
        Ok(Self {
            rule,
            total_bandwidth_hz: total,
            bandwidth_levels: levels,
            k_levels: k_levels.to_vec(),
            actions,
        })
    }

    pub fn rule(&self) -> BandwidthRule {
        self.rule
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn actions(&self) -> &[JointAction] {
        &self.actions
    }

    pub fn get(&self, index: usize) -> Result<&JointAction> {
        self.actions.get(index).ok_or(Error::InvalidAction {
            index,
            count: self.actions.len(),
        })
    }

    pub fn k_levels(&self) -> &[usize] {
        &self.k_levels
    }

    pub fn bandwidth_levels(&self) -> &[f64] {
        &self.bandwidth_levels
    }

    pub fn total_bandwidth_hz(&self) -> f64 {
        self.total_bandwidth_hz
    }

    /// Finds the index of an action with exactly these decisions.
    pub fn index_of(&self, decisions: &[SuDecision]) -> Option<usize> {
        self.actions.iter().position(|a| a.decisions == decisions)
    }

    /// Distinct bandwidths any scheduled SU may receive.
    pub fn distinct_bandwidths(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for a in &self.actions {
            for d in a.decisions.iter().filter(|d| d.scheduled) {
                if !out.contains(&d.bandwidth_hz) {
                    out.push(d.bandwidth_hz);
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }

    /// Re-checks scheduling, level membership and the bandwidth budget.
    pub fn validate(&self, action: &JointAction) -> Result<()> {
        let bad = |why: String| Err(Error::Infeasible(format!("action {}: {why}", action.index)));
        if action.scheduled_bandwidth() > self.total_bandwidth_hz * (1.0 + BUDGET_SLACK) {
            return bad(format!(
                "bandwidth {} exceeds budget {}",
                action.scheduled_bandwidth(),
                self.total_bandwidth_hz
            ));
        }
        let on = action.scheduled_count();
        for d in action.decisions.iter().filter(|d| d.scheduled) {
            if !self.k_levels.contains(&d.k) {
                return bad(format!("k = {} is not a configured level", d.k));
            }
            let band_ok = match self.rule {
                BandwidthRule::Levels => self.bandwidth_levels.contains(&d.bandwidth_hz),
                BandwidthRule::EqualShare => d.bandwidth_hz == self.total_bandwidth_hz / on as f64,
            };
            if !band_ok {
                return bad(format!("bandwidth {} is not allowed", d.bandwidth_hz));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_sus_forty_actions() {
        let space = ActionSpace::leveled(&ScenarioConfig::default()).unwrap();
        assert_eq!(space.len(), 40);
        assert!(space.actions().iter().all(|a| a.scheduled_bandwidth() <= 10e6));
        assert!(space.actions().iter().all(|a| space.validate(a).is_ok()));
        // Brute-force count of the unfiltered 7×7 product minus (6,6) pairs.
        let mut count = 0;
        for b0 in [None, Some(2e6), Some(6e6)] {
            for b1 in [None, Some(2e6), Some(6e6)] {
                let mult = |b: Option<f64>| if b.is_some() { 3 } else { 1 };
                if b0.unwrap_or(0.0) + b1.unwrap_or(0.0) <= 10e6 {
                    count += mult(b0) * mult(b1);
                }
            }
        }
        assert_eq!(count, 40);
    }

    #[test]
    fn ordering_is_lexicographic() {
        let space = ActionSpace::leveled(&ScenarioConfig::default()).unwrap();
        let first = &space.actions()[0];
        assert!(first.decisions.iter().all(|d| !d.scheduled));
        let second = &space.actions()[1].decisions;
        assert!(!second[0].scheduled);
        assert_eq!((second[1].scheduled, second[1].bandwidth_hz, second[1].k), (true, 2e6, 1));
        // SU 0 off, SU 1 on: 6 actions; then SU 0 at (2 MHz, k=1) with SU 1 off.
        let seventh = &space.actions()[7].decisions;
        assert_eq!((seventh[0].scheduled, seventh[0].bandwidth_hz, seventh[0].k), (true, 2e6, 1));
        assert!(!seventh[1].scheduled);
    }

    #[test]
    fn unconstrained_budget() {
        let mut cfg = ScenarioConfig::default();
        cfg.radio.total_bandwidth_hz = 12e6;
        assert_eq!(ActionSpace::leveled(&cfg).unwrap().len(), 49);
        cfg.nodes.sensing_uavs = 3;
        cfg.radio.total_bandwidth_hz = 18e6;
        assert_eq!(ActionSpace::leveled(&cfg).unwrap().len(), 343);
    }

    #[test]
    fn single_su_seven_actions() {
        let mut cfg = ScenarioConfig::default();
        cfg.nodes.sensing_uavs = 1;
        assert_eq!(ActionSpace::leveled(&cfg).unwrap().len(), 7);
    }

    #[test]
    fn empty_feasible_set_is_error() {
        let mut cfg = ScenarioConfig::default();
        cfg.radio.total_bandwidth_hz = 1e6;
        // Only the all-off action survives; still nonempty.
        assert_eq!(ActionSpace::leveled(&cfg).unwrap().len(), 1);
    }

    #[test]
    fn equal_share_space() {
        let space = ActionSpace::equal_share(&ScenarioConfig::default()).unwrap();
        assert_eq!(space.len(), 16);
        for a in space.actions() {
            space.validate(a).unwrap();
            match a.scheduled_count() {
                2 => assert!(a.decisions.iter().all(|d| d.bandwidth_hz == 5e6)),
                1 => assert_eq!(a.scheduled_bandwidth(), 10e6),
                _ => {}
            }
        }
        assert_eq!(space.distinct_bandwidths(), vec![5e6, 10e6]);
    }

    #[test]
    fn uncoded_space_has_k_one() {
        let space = ActionSpace::uncoded(&ScenarioConfig::default()).unwrap();
        assert_eq!(space.len(), 8);
        assert!(space.actions().iter().all(|a| a.decisions.iter().all(|d| d.k == 1)));
    }

    #[test]
    fn validator_rejects_over_budget() {
        let space = ActionSpace::leveled(&ScenarioConfig::default()).unwrap();
        let bad = JointAction {
            index: 99,
            decisions: vec![SuDecision { scheduled: true, bandwidth_hz: 6e6, k: 1 }; 2],
        };
        assert!(space.validate(&bad).is_err());
        assert!(space.get(40).is_err());
    }
}
