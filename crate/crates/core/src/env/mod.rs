//! Slotted MDP over the coded-caching network.
//!
//! Each step scores the chosen action on the current slot (links →
//! eligibility → selection → STP → file recovery → cell recovery → reward),
//! then advances mobility and captures fresh files. Node motion and file
//! sizes do not depend on the action, so the per-slot exhaustive search in
//! [`exhaustive_slot_oracle`] is an optimal policy.

mod actions;
mod slot;

pub use actions::{ActionSpace, BandwidthRule, JointAction, SuDecision};
pub use slot::{SlotContext, SlotOutcome, SuSlot};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{QuadratureSpec, StpEvaluator};
use crate::config::{RecoveryMode, Scenario};
use crate::error::Result;
use crate::world::{SensorShape, World};

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent seed for item `index` of stream `stream` under `base`.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    mix(mix(base ^ mix(stream)).wrapping_add(index))
}

/// Learner-facing state: previous-slot recovery probabilities and the
/// current file sizes scaled by the largest possible file.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpState {
    pub recovery: Vec<f64>,
    pub file: Vec<f64>,
}

impl MdpState {
    pub fn to_vec(&self) -> Vec<f64> {
        self.recovery.iter().chain(&self.file).copied().collect()
    }

    pub fn dim(&self) -> usize {
        self.recovery.len() + self.file.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotMetrics {
    pub slot: usize,
    pub action_index: usize,
    pub reward: f64,
    pub area_m2: f64,
    pub recovery: Vec<f64>,
    pub cell_probability: Vec<f64>,
    pub eligible_counts: Vec<usize>,
    pub selected_counts: Vec<usize>,
    /// Per SU: scheduled but fewer than `k` eligible holders.
    pub infeasible: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct Step {
    pub state: MdpState,
    pub reward: f64,
    pub metrics: SlotMetrics,
    pub done: bool,
}

pub struct Env {
    scenario: Scenario,
    space: ActionSpace,
    evaluator: StpEvaluator,
    recovery_mode: RecoveryMode,
    /// Placement and mobility.
    motion_rng: ChaCha8Rng,
    /// File sizes.
    content_rng: ChaCha8Rng,
    world: World,
    context: SlotContext,
    slot: usize,
    prev_recovery: Vec<f64>,
    max_file_bits: f64,
}

/// Upper bound on footprint cells: lattice points inside the polygon's
/// circumscribed square.
fn max_footprint_cells(scenario: &Scenario) -> usize {
    let cfg = &scenario.config;
    let shape = SensorShape {
        apothem: cfg.nodes.apothem_m,
        sides: cfg.nodes.polygon_sides,
    };
    let span = (2.0 * shape.circumradius() / cfg.area.cell_side_m).floor() as usize + 1;
    let cols = (cfg.area.extent_x_m / cfg.area.cell_side_m).round() as usize;
    let rows = (cfg.area.extent_y_m / cfg.area.cell_side_m).round() as usize;
    span.min(cols) * span.min(rows)
}

impl Env {
    /// Environment over the given action space, reset with the scenario seed.
    pub fn new(scenario: Scenario, space: ActionSpace) -> Result<Self> {
        let mode = scenario.config.coding.recovery_mode;
        Self::with_mode(scenario, space, mode)
    }

    pub fn with_mode(scenario: Scenario, space: ActionSpace, recovery_mode: RecoveryMode) -> Result<Self> {
        let evaluator = StpEvaluator::new(QuadratureSpec::from_scenario(&scenario))?;
        let seed = scenario.config.seed;
        let mut motion_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0, 0));
        let mut content_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1, 0));
        let world = World::generate(&scenario.config, &mut motion_rng)?;
        let files = world.capture_files(scenario.config.coding.content_bits_per_cell, 0, &mut content_rng);
        let context = SlotContext::build(&world, files, &scenario, &evaluator, recovery_mode, 0)?;
        let max_file_bits = scenario.config.coding.content_bits_per_cell[1] * max_footprint_cells(&scenario) as f64;
        let sus = scenario.config.nodes.sensing_uavs;
        Ok(Self {
            scenario,
            space,
            evaluator,
            recovery_mode,
            motion_rng,
            content_rng,
            world,
            context,
            slot: 0,
            prev_recovery: vec![0.0; sus],
            max_file_bits,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn space(&self) -> &ActionSpace {
        &self.space
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    /// Snapshot of the current slot for one-step planners.
    pub fn context(&self) -> &SlotContext {
        &self.context
    }

    pub fn slot(&self) -> usize {
        self.slot
    }

    pub fn horizon(&self) -> usize {
        self.scenario.config.episode.horizon
    }

    pub fn recovery_mode(&self) -> RecoveryMode {
        self.recovery_mode
    }

    pub fn state_dim(&self) -> usize {
        2 * self.scenario.config.nodes.sensing_uavs
    }

    /// Regenerates the world from `seed` (or from the scenario seed under
    /// fixed placement); the recovery part of the state is zero.
    pub fn reset(&mut self, seed: u64) -> Result<MdpState> {
        let cfg = &self.scenario.config;
        let placement = if cfg.episode.fixed_placement { cfg.seed } else { seed };
        self.motion_rng = ChaCha8Rng::seed_from_u64(derive_seed(placement, 0, 0));
        self.content_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1, 0));
        self.world = World::generate(cfg, &mut self.motion_rng)?;
        self.slot = 0;
        self.prev_recovery.iter_mut().for_each(|p| *p = 0.0);
        self.capture()?;
        Ok(self.state())
    }

    fn capture(&mut self) -> Result<()> {
        let files = self
            .world
            .capture_files(self.scenario.config.coding.content_bits_per_cell, self.slot, &mut self.content_rng);
        self.context = SlotContext::build(&self.world, files, &self.scenario, &self.evaluator, self.recovery_mode, self.slot)?;
        Ok(())
    }

    pub fn state(&self) -> MdpState {
        MdpState {
            recovery: self.prev_recovery.clone(),
            file: self
                .context
                .sus
                .iter()
                .map(|s| (s.file.size_bits / self.max_file_bits).min(1.0))
                .collect(),
        }
    }

    pub fn step(&mut self, action_index: usize) -> Result<Step> {
        let action = self.space.get(action_index)?.clone();
        self.space.validate(&action)?;
        let outcome = self.context.evaluate(&action)?;
        let metrics = SlotMetrics {
            slot: self.slot,
            action_index,
            reward: outcome.reward,
            area_m2: outcome.area.area_m2,
            recovery: outcome.recovery(),
            eligible_counts: outcome.plans.iter().map(|p| p.eligible.len()).collect(),
            selected_counts: outcome.plans.iter().map(|p| p.selected.len()).collect(),
            infeasible: outcome.plans.iter().map(|p| p.scheduled && !p.feasible).collect(),
            cell_probability: outcome.cell_probability,
        };
        self.prev_recovery.clone_from(&metrics.recovery);
        self.world.step(&mut self.motion_rng, self.scenario.config.nodes.slot_s);
        self.slot += 1;
        self.capture()?;
        Ok(Step {
            state: self.state(),
            reward: metrics.reward,
            done: self.slot >= self.horizon(),
            metrics,
        })
    }
}

/// Scores every action on the frozen slot; returns the best index and its
/// reward, ties to the smaller index.
pub fn exhaustive_slot_oracle(context: &SlotContext, space: &ActionSpace) -> Result<(usize, f64)> {
    let mut best = (0usize, f64::NEG_INFINITY);
    for a in space.actions() {
        let r = context.evaluate(a)?.reward;
        if r > best.1 {
            best = (a.index, r);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::{effective_recovery_area, grid_recovery_probability, CellContribution};
    use crate::config::ScenarioConfig;
    use rand::Rng;

    fn scenario() -> Scenario {
        ScenarioConfig::default().resolve().unwrap()
    }

    fn env() -> Env {
        let sc = scenario();
        let space = ActionSpace::leveled(&sc.config).unwrap();
        Env::new(sc, space).unwrap()
    }

    #[test]
    fn reset_is_deterministic_and_starts_at_zero() {
        let mut e = env();
        let a = e.reset(3).unwrap();
        let b = e.reset(3).unwrap();
        assert_eq!(a, b);
        assert!(a.recovery.iter().all(|&p| p == 0.0));
        assert!(a.file.iter().all(|&f| (0.0..=1.0).contains(&f)));
    }

    #[test]
    fn different_seeds_move_uavs() {
        let mut e = env();
        let mut differ = 0;
        for s in 0..100u64 {
            e.reset(2 * s).unwrap();
            let a = e.world().sensing[0].position;
            e.reset(2 * s + 1).unwrap();
            if e.world().sensing[0].position != a {
                differ += 1;
            }
        }
        assert_eq!(differ, 100);
    }

    #[test]
    fn fixed_placement_keeps_geometry() {
        let mut cfg = ScenarioConfig::default();
        cfg.episode.fixed_placement = true;
        let sc = cfg.resolve().unwrap();
        let space = ActionSpace::leveled(&sc.config).unwrap();
        let mut e = Env::new(sc, space).unwrap();
        let a = e.reset(1).unwrap();
        let pos = e.world().coop[3].position;
        let b = e.reset(2).unwrap();
        assert_eq!(e.world().coop[3].position, pos);
        assert_ne!(a.file, b.file);
    }

    #[test]
    fn derived_seeds_differ() {
        let mut seen: Vec<u64> = (0..3).flat_map(|s| (0..100).map(move |i| derive_seed(7, s, i))).collect();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 300);
    }

    #[test]
    fn all_off_earns_nothing() {
        let mut e = env();
        e.reset(1).unwrap();
        let step = e.step(0).unwrap();
        assert_eq!(step.reward, 0.0);
        assert_eq!(step.metrics.area_m2, 0.0);
    }

    #[test]
    fn invalid_index_rejected() {
        let mut e = env();
        e.reset(1).unwrap();
        assert!(e.step(40).is_err());
    }

    #[test]
    fn frozen_world_repeats_rewards() {
        let mut cfg = ScenarioConfig::default();
        cfg.nodes.speed_mps = 0.0;
        cfg.coding.content_bits_per_cell = [78e3, 78e3];
        let sc = cfg.resolve().unwrap();
        let space = ActionSpace::leveled(&sc.config).unwrap();
        let mut e = Env::new(sc, space).unwrap();
        e.reset(8).unwrap();
        let r0 = e.step(39).unwrap().reward;
        for _ in 0..5 {
            assert_eq!(e.step(39).unwrap().reward, r0);
        }
    }

    #[test]
    fn reward_matches_independent_recomputation() {
        let mut e = env();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for seed in 0..10 {
            e.reset(seed).unwrap();
            for _ in 0..5 {
                let idx = rng.random_range(0..e.space().len());
                let ctx = e.context();
                let action = e.space().get(idx).unwrap().clone();
                let plans: Vec<_> = action.decisions.iter().enumerate().map(|(i, d)| ctx.plan(i, d).unwrap()).collect();
                let mut pr = vec![0.0; ctx.cell_count];
                for (c, p) in pr.iter_mut().enumerate() {
                    let covering: Vec<CellContribution> = plans
                        .iter()
                        .zip(&ctx.sus)
                        .filter(|(_, s)| s.file.coverage.contains(&c))
                        .map(|(pl, _)| CellContribution::from(pl))
                        .collect();
                    *p = grid_recovery_probability(&covering, ctx.cell_mode);
                }
                let area = effective_recovery_area(&pr, ctx.cell_area).area_m2;
                let lambda = 1.0 / (ctx.cell_count as f64 * ctx.cell_area);
                let step = e.step(idx).unwrap();
                assert!((step.reward - lambda * area).abs() < 1e-12);
                assert!((0.0..=1.0).contains(&step.reward));
                assert_eq!(step.state.recovery, step.metrics.recovery);
            }
        }
    }

    #[test]
    fn episode_ends_at_horizon() {
        let mut cfg = ScenarioConfig::default();
        cfg.episode.horizon = 3;
        let sc = cfg.resolve().unwrap();
        let space = ActionSpace::leveled(&sc.config).unwrap();
        let mut e = Env::new(sc, space).unwrap();
        e.reset(0).unwrap();
        assert!(!e.step(5).unwrap().done);
        assert!(!e.step(5).unwrap().done);
        assert!(e.step(5).unwrap().done);
    }

    #[test]
    fn oracle_beats_random_actions() {
        let mut e = env();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for seed in 0..5 {
            e.reset(seed).unwrap();
            let (best, r) = exhaustive_slot_oracle(e.context(), e.space()).unwrap();
            assert_eq!(e.context().evaluate(e.space().get(best).unwrap()).unwrap().reward, r);
            for _ in 0..100 {
                let a = e.space().get(rng.random_range(0..40)).unwrap();
                assert!(e.context().evaluate(a).unwrap().reward <= r);
            }
        }
    }

    #[test]
    fn oracle_single_action() {
        let mut cfg = ScenarioConfig::default();
        cfg.radio.total_bandwidth_hz = 1e6;
        let sc = cfg.resolve().unwrap();
        let space = ActionSpace::leveled(&sc.config).unwrap();
        let e = Env::new(sc, space).unwrap();
        assert_eq!(exhaustive_slot_oracle(e.context(), e.space()).unwrap(), (0, 0.0));
    }
}
