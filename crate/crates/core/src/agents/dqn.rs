//! DQN with experience replay and a periodically synced target network.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::qnet::{Optimizer, QNetwork};
use super::replay::{ReplayMemory, Transition};
use crate::config::DqnConfig;
use crate::env::{derive_seed, Env};
use crate::error::{Error, Result};

/// Loss above which training is aborted.
pub const DIVERGENCE_LOSS: f64 = 1e6;

/// Linear decay from `epsilon_start` to `epsilon_end` over the first
/// `epsilon_decay_fraction · episodes` episodes, then flat.
pub fn epsilon_at(cfg: &DqnConfig, episode: usize) -> f64 {
    let span = cfg.epsilon_decay_fraction * cfg.episodes as f64;
    let frac = if span > 0.0 { (episode as f64 / span).min(1.0) } else { 1.0 };
    cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * frac
}

/// Feasible argmax; ties go to the smallest index.
pub fn greedy_action(q: &[f64], mask: &[bool]) -> usize {
    let mut best: Option<usize> = None;
    for (i, (&v, &ok)) in q.iter().zip(mask).enumerate() {
        if ok && best.is_none_or(|b| v > q[b]) {
            best = Some(i);
        }
    }
    best.expect("mask has at least one feasible action")
}

/// ε-greedy selection over the feasible mask.
pub fn epsilon_greedy<R: Rng + ?Sized>(q: &[f64], epsilon: f64, mask: &[bool], rng: &mut R) -> usize {
    assert!(mask.iter().any(|&m| m), "mask must be nonempty");
    if rng.random_bool(epsilon.clamp(0.0, 1.0)) {
        let feasible: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
        feasible[rng.random_range(0..feasible.len())]
    } else {
        greedy_action(q, mask)
    }
}

/// `y = r` for terminal transitions, else `r + γ·max_{a'} Q'(s', a')`.
pub fn td_targets(batch: &[&Transition], target: &QNetwork, discount: f64, mask: &[bool]) -> Vec<f64> {
    let dim = target.input_dim();
    let mut next = Array2::zeros((batch.len(), dim));
    for (j, t) in batch.iter().enumerate() {
        if !t.done {
            next.row_mut(j).assign(&ndarray::ArrayView1::from(&t.next_state[..]));
        }
    }
    let q = target.forward_batch(next.view());
    batch
        .iter()
        .enumerate()
        .map(|(j, t)| {
            if t.done {
                t.reward
            } else {
                let row = q.row(j);
                let best = greedy_action(row.as_slice().expect("contiguous"), mask);
                t.reward + discount * row[best]
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct DqnAgent {
    pub online: QNetwork,
    pub target: QNetwork,
    optimizer: Optimizer,
    cfg: DqnConfig,
    mask: Vec<bool>,
    env_steps: usize,
    updates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub episode: usize,
    pub mean_reward: f64,
    pub epsilon: f64,
    /// Mean TD loss over the episode's updates; `None` during warm-up.
    pub mean_loss: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub agent: DqnAgent,
    pub curve: Vec<EpisodeLog>,
    pub transitions: usize,
    pub updates: usize,
}

impl DqnAgent {
    pub fn new<R: Rng + ?Sized>(state_dim: usize, action_count: usize, cfg: &DqnConfig, rng: &mut R) -> Self {
        let online = QNetwork::new(state_dim, &cfg.hidden, action_count, rng);
        Self {
            target: online.clone(),
            online,
            optimizer: Optimizer::new(cfg.optimizer, cfg.learning_rate, cfg.grad_clip),
            cfg: cfg.clone(),
            mask: vec![true; action_count],
            env_steps: 0,
            updates: 0,
        }
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn updates(&self) -> usize {
        self.updates
    }

    pub fn act<R: Rng + ?Sized>(&self, state: &[f64], epsilon: f64, rng: &mut R) -> usize {
        let q = self.online.forward(state);
        epsilon_greedy(q.as_slice().expect("contiguous"), epsilon, &self.mask, rng)
    }

    pub fn greedy(&self, state: &[f64]) -> usize {
        greedy_action(self.online.forward(state).as_slice().expect("contiguous"), &self.mask)
    }

    pub fn sync_target(&mut self) {
        self.target = self.online.clone();
    }

    /// One gradient step on a sampled mini-batch; `None` during warm-up.
    pub fn learn<R: Rng + ?Sized>(&mut self, memory: &ReplayMemory, rng: &mut R) -> Option<f64> {
        let batch = memory.sample(self.cfg.batch_size, rng)?;
        let targets = td_targets(&batch, &self.target, self.cfg.discount, &self.mask);
        let dim = self.online.input_dim();
        let mut states = Array2::zeros((batch.len(), dim));
        for (j, t) in batch.iter().enumerate() {
            states.row_mut(j).assign(&ndarray::ArrayView1::from(&t.state[..]));
        }
        let actions: Vec<usize> = batch.iter().map(|t| t.action).collect();
        let (loss, grad) = self.online.loss_and_gradient(states.view(), &actions, &targets);
        self.optimizer.step(&mut self.online, grad);
        self.updates += 1;
        Some(loss)
    }

    /// Counts an environment step and syncs the target every `target_sync_steps`.
    fn tick(&mut self) {
        self.env_steps += 1;
        if self.cfg.target_sync_steps > 0 && self.env_steps.is_multiple_of(self.cfg.target_sync_steps) {
            self.sync_target();
        }
    }
}

/// Runs the full ε-greedy / replay / target-sync loop for `cfg.episodes`
/// episodes of the environment's horizon. Episode `e` resets the world from a
/// seed derived from `seed`.
pub fn train(env: &mut Env, cfg: &DqnConfig, seed: u64) -> Result<TrainOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1, 0));
    let mut agent = DqnAgent::new(env.state_dim(), env.space().len(), cfg, &mut rng);
    let mut memory = ReplayMemory::new(cfg.memory_size);
    let mut curve = Vec::with_capacity(cfg.episodes);
    let mut transitions = 0;
    for episode in 0..cfg.episodes {
        let epsilon = epsilon_at(cfg, episode);
        let mut state = env.reset(derive_seed(seed, 2, episode as u64))?.to_vec();
        let (mut reward_sum, mut loss_sum, mut loss_n, mut steps) = (0.0, 0.0, 0usize, 0usize);
        loop {
            let action = agent.act(&state, epsilon, &mut rng);
            let step = env.step(action)?;
            let next = step.state.to_vec();
            memory.push(Transition {
                state: std::mem::take(&mut state),
                action,
                reward: step.reward,
                next_state: next.clone(),
                done: step.done,
            });
            transitions += 1;
            reward_sum += step.reward;
            steps += 1;
            if let Some(loss) = agent.learn(&memory, &mut rng) {
                if !loss.is_finite() || loss > DIVERGENCE_LOSS || !agent.online.is_finite() {
                    return Err(Error::Diverged {
                        episode,
                        step: steps - 1,
                        reason: format!("loss {loss:e}, finite parameters: {}", agent.online.is_finite()),
                    });
                }
                loss_sum += loss;
                loss_n += 1;
            }
            agent.tick();
            state = next;
            if step.done {
                break;
            }
        }
        curve.push(EpisodeLog {
            episode,
            mean_reward: reward_sum / steps as f64,
            epsilon,
            mean_loss: (loss_n > 0).then(|| loss_sum / loss_n as f64),
        });
    }
    let updates = agent.updates;
    Ok(TrainOutcome {
        agent,
        curve,
        transitions,
        updates,
    })
}
