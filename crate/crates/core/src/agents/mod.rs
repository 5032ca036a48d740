//! Schedulers: the DQN learner (over leveled or equal-share bandwidth) and
//! the swarm, non-coded, random and exhaustive baselines.

pub mod checkpoint;
pub mod dqn;
pub mod pso;
pub mod qnet;
pub mod replay;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{PsoConfig, RecoveryMode, Scenario, ScenarioConfig};
pub use crate::env::derive_seed;
use crate::env::{exhaustive_slot_oracle, ActionSpace, Env, MdpState};
use crate::error::{Error, Result};

pub use checkpoint::Checkpoint;
pub use dqn::{train, DqnAgent, EpisodeLog, TrainOutcome};
pub use pso::{pso_search, PsoResult};
pub use qnet::QNetwork;
pub use replay::{ReplayMemory, Transition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Sacrl,
    Scrl,
    Pso,
    Nct,
    Random,
    Oracle,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 6] = [Self::Sacrl, Self::Scrl, Self::Pso, Self::Nct, Self::Random, Self::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Self::Sacrl => "sacrl",
            Self::Scrl => "scrl",
            Self::Pso => "pso",
            Self::Nct => "nct",
            Self::Random => "random",
            Self::Oracle => "oracle",
        }
    }

    pub fn is_learned(self) -> bool {
        matches!(self, Self::Sacrl | Self::Scrl)
    }

    pub fn space(self, cfg: &ScenarioConfig) -> Result<ActionSpace> {
        match self {
            Self::Scrl => ActionSpace::equal_share(cfg),
            Self::Nct => ActionSpace::uncoded(cfg),
            _ => ActionSpace::leveled(cfg),
        }
    }

    pub fn recovery_mode(self, cfg: &ScenarioConfig) -> RecoveryMode {
        match self {
            Self::Nct => RecoveryMode::NonCoded,
            _ => cfg.coding.recovery_mode,
        }
    }

    /// Environment with this policy's action space and recovery semantics.
    pub fn make_env(self, scenario: &Scenario) -> Result<Env> {
        let space = self.space(&scenario.config)?;
        Env::with_mode(scenario.clone(), space, self.recovery_mode(&scenario.config))
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Unknown { what: "policy", name: s.into() })
    }
}

/// A scheduler choosing one flat action index per slot.
pub trait Policy: Send {
    fn kind(&self) -> PolicyKind;
    fn act(&mut self, env: &Env, state: &MdpState) -> Result<usize>;
}

/// Greedy rollout of a trained Q-network.
pub struct GreedyQ {
    kind: PolicyKind,
    net: QNetwork,
    mask: Vec<bool>,
}

impl GreedyQ {
    pub fn new(kind: PolicyKind, net: QNetwork) -> Self {
        let mask = vec![true; net.output_dim()];
        Self { kind, net, mask }
    }
}

impl Policy for GreedyQ {
    fn kind(&self) -> PolicyKind {
        self.kind
    }

    fn act(&mut self, env: &Env, state: &MdpState) -> Result<usize> {
        if self.net.output_dim() != env.space().len() || self.net.input_dim() != state.dim() {
            return Err(Error::Checkpoint(format!(
                "network {}→{} does not fit state {} / {} actions",
                self.net.input_dim(),
                self.net.output_dim(),
                state.dim(),
                env.space().len()
            )));
        }
        let q = self.net.forward(&state.to_vec());
        Ok(dqn::greedy_action(q.as_slice().expect("contiguous"), &self.mask))
    }
}

/// Uniform over the feasible action list.
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Policy for RandomPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Random
    }

    fn act(&mut self, env: &Env, _: &MdpState) -> Result<usize> {
        Ok(self.rng.random_range(0..env.space().len()))
    }
}

/// Per-slot exhaustive search. Over the uncoded space with non-coded
/// recovery it is the NCT baseline.
pub struct ExhaustivePolicy {
    kind: PolicyKind,
}

impl ExhaustivePolicy {
    pub fn oracle() -> Self {
        Self { kind: PolicyKind::Oracle }
    }

    pub fn nct() -> Self {
        Self { kind: PolicyKind::Nct }
    }
}

impl Policy for ExhaustivePolicy {
    fn kind(&self) -> PolicyKind {
        self.kind
    }

    fn act(&mut self, env: &Env, _: &MdpState) -> Result<usize> {
        if self.kind == PolicyKind::Nct && env.recovery_mode() != RecoveryMode::NonCoded {
            return Err(Error::Config("nct needs an environment in non-coded mode".into()));
        }
        Ok(exhaustive_slot_oracle(env.context(), env.space())?.0)
    }
}

pub struct PsoPolicy {
    params: PsoConfig,
    rng: ChaCha8Rng,
}

impl PsoPolicy {
    pub fn new(params: PsoConfig, seed: u64) -> Self {
        Self {
            params,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Policy for PsoPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Pso
    }

    fn act(&mut self, env: &Env, _: &MdpState) -> Result<usize> {
        Ok(pso_search(env.context(), env.space(), &self.params, &mut self.rng)?.action)
    }
}
