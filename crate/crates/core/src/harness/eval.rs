//! Policy rollouts under common random numbers and the `eval` command.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::{checkpoint_path, csv_writer, linear_fit_r2, prepare_out, write_json, Moments};
use crate::agents::{
    derive_seed, Checkpoint, ExhaustivePolicy, GreedyQ, Policy, PolicyKind, PsoPolicy, QNetwork, RandomPolicy,
};
use crate::config::{PsoConfig, Scenario, ScenarioConfig};
use crate::env::{Env, SlotMetrics};
use crate::error::{Error, Result};

/// Evaluation episode seeds. Every policy in a run, and every point of a
/// sweep, sees the same list.
pub fn eval_seeds(base: u64, episodes: usize) -> Vec<u64> {
    (0..episodes as u64).map(|e| derive_seed(base, 3, e)).collect()
}

pub fn make_policy(kind: PolicyKind, net: Option<&QNetwork>, pso: &PsoConfig, seed: u64) -> Result<Box<dyn Policy>> {
    Ok(match kind {
        PolicyKind::Sacrl | PolicyKind::Scrl => {
            let net = net.ok_or_else(|| Error::Checkpoint(format!("{kind} needs a trained network")))?;
            Box::new(GreedyQ::new(kind, net.clone()))
        }
        PolicyKind::Pso => Box::new(PsoPolicy::new(pso.clone(), seed)),
        PolicyKind::Nct => Box::new(ExhaustivePolicy::nct()),
        PolicyKind::Random => Box::new(RandomPolicy::new(seed)),
        PolicyKind::Oracle => Box::new(ExhaustivePolicy::oracle()),
    })
}

#[derive(Debug, Clone)]
pub struct EpisodeTrace {
    pub seed: u64,
    pub slots: Vec<SlotMetrics>,
}

impl EpisodeTrace {
    pub fn mean_reward(&self) -> f64 {
        self.slots.iter().map(|m| m.reward).sum::<f64>() / self.slots.len() as f64
    }

    pub fn cumulative_area_m2(&self) -> Vec<f64> {
        self.slots
            .iter()
            .scan(0.0, |acc, m| {
                *acc += m.area_m2;
                Some(*acc)
            })
            .collect()
    }
}

/// Runs one full episode from `reset(seed)`.
pub fn rollout(env: &mut Env, policy: &mut dyn Policy, seed: u64) -> Result<EpisodeTrace> {
    let mut state = env.reset(seed)?;
    let mut slots = Vec::with_capacity(env.horizon());
    loop {
        let a = policy.act(env, &state)?;
        let step = env.step(a)?;
        slots.push(step.metrics);
        state = step.state;
        if step.done {
            break;
        }
    }
    Ok(EpisodeTrace { seed, slots })
}

/// Evaluates one policy on every seed, in parallel, each episode on its own
/// environment. Stochastic policies draw from `derive_seed(policy_seed, 0, e)`.
pub fn evaluate_policy(
    scenario: &Scenario,
    kind: PolicyKind,
    net: Option<&QNetwork>,
    seeds: &[u64],
    policy_seed: u64,
) -> Result<Vec<EpisodeTrace>> {
    seeds
        .par_iter()
        .enumerate()
        .map(|(e, &seed)| {
            let mut env = kind.make_env(scenario)?;
            let mut policy = make_policy(kind, net, &scenario.config.pso, derive_seed(policy_seed, 0, e as u64))?;
            rollout(&mut env, policy.as_mut(), seed)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct PolicyStats {
    pub label: String,
    pub policy: PolicyKind,
    pub action_count: usize,
    /// Per-episode mean normalized reward, summarized over episodes.
    pub reward: Moments,
    pub mean_area_m2: f64,
    pub final_cumulative_area_m2: f64,
    pub cumulative_r2: f64,
    pub checkpoint_config_hash: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub config_hash: String,
    pub seed: u64,
    pub episodes: usize,
    pub episode_seeds: Vec<u64>,
    pub policies: Vec<PolicyStats>,
    /// `"a/b"` → mean reward of `a` over mean reward of `b`.
    pub ratios: BTreeMap<String, f64>,
    pub sacrl_vs_nct: Option<f64>,
}

impl EvalReport {
    pub fn stats(&self, label: &str) -> Option<&PolicyStats> {
        self.policies.iter().find(|p| p.label == label)
    }
}

fn labels(policies: &[PolicyKind]) -> Vec<String> {
    policies
        .iter()
        .enumerate()
        .map(|(i, k)| {
            let seen = policies[..i].iter().filter(|&&p| p == *k).count();
            if seen == 0 {
                k.name().to_string()
            } else {
                format!("{}-{}", k.name(), seen + 1)
            }
        })
        .collect()
}

/// Evaluates `policies` for `episodes` common-random-number episodes.
/// Learned policies load `checkpoint_<name>.json` from `checkpoint_dir`.
pub fn cmd_eval(
    cfg: &ScenarioConfig,
    policies: &[PolicyKind],
    checkpoint_dir: &Path,
    episodes: usize,
    out: &Path,
) -> Result<EvalReport> {
    if policies.is_empty() || episodes == 0 {
        return Err(Error::Config("eval needs at least one policy and one episode".into()));
    }
    let scenario = cfg.resolve()?;
    let hash = scenario.hash();
    let mut nets = Vec::with_capacity(policies.len());
    for &kind in policies {
        nets.push(if kind.is_learned() {
            let ck = Checkpoint::load(&checkpoint_path(checkpoint_dir, kind))?;
            Some((ck.to_network()?, ck.config_hash))
        } else {
            None
        });
    }
    prepare_out(out, &scenario)?;
    let seeds = eval_seeds(scenario.config.seed, episodes);
    let labels = labels(policies);
    let mut traces = Vec::with_capacity(policies.len());
    for (i, &kind) in policies.iter().enumerate() {
        let net = nets[i].as_ref().map(|n| &n.0);
        let policy_seed = derive_seed(scenario.config.seed, 4, i as u64);
        traces.push(evaluate_policy(&scenario, kind, net, &seeds, policy_seed)?);
    }

    let su_count = scenario.config.nodes.sensing_uavs;
    let mut slots_csv = csv_writer(&out.join("eval_slots.csv"))?;
    let mut header: Vec<String> = ["policy", "episode", "episode_seed", "slot", "action", "reward", "area_m2"]
        .map(String::from)
        .to_vec();
    for field in ["recovery", "eligible", "selected", "infeasible"] {
        header.extend((0..su_count).map(|i| format!("{field}_su{i}")));
    }
    header.push("config_hash".into());
    slots_csv.write_record(&header)?;
    let mut episodes_csv = csv_writer(&out.join("eval_episodes.csv"))?;
    episodes_csv.write_record(["policy", "episode", "episode_seed", "mean_reward", "total_area_m2", "config_hash"])?;
    let mut cumulative_csv = csv_writer(&out.join("eval_cumulative.csv"))?;
    cumulative_csv.write_record(["policy", "slot", "mean_cumulative_area_m2", "config_hash"])?;

    let mut stats = Vec::with_capacity(policies.len());
    for (i, &kind) in policies.iter().enumerate() {
        let label = &labels[i];
        for (e, tr) in traces[i].iter().enumerate() {
            for m in &tr.slots {
                let mut row = vec![
                    label.clone(),
                    e.to_string(),
                    tr.seed.to_string(),
                    m.slot.to_string(),
                    m.action_index.to_string(),
                    m.reward.to_string(),
                    m.area_m2.to_string(),
                ];
                row.extend(m.recovery.iter().map(f64::to_string));
                row.extend(m.eligible_counts.iter().map(usize::to_string));
                row.extend(m.selected_counts.iter().map(usize::to_string));
                row.extend(m.infeasible.iter().map(|&b| u8::from(b).to_string()));
                row.push(hash.clone());
                slots_csv.write_record(&row)?;
            }
            let total: f64 = tr.slots.iter().map(|m| m.area_m2).sum();
            episodes_csv.write_record([
                label.clone(),
                e.to_string(),
                tr.seed.to_string(),
                tr.mean_reward().to_string(),
                total.to_string(),
                hash.clone(),
            ])?;
        }
        let horizon = traces[i][0].slots.len();
        let mut mean_cum = vec![0.0; horizon];
        for tr in &traces[i] {
            for (acc, c) in mean_cum.iter_mut().zip(tr.cumulative_area_m2()) {
                *acc += c / episodes as f64;
            }
        }
        for (t, c) in mean_cum.iter().enumerate() {
            cumulative_csv.write_record([label.clone(), t.to_string(), c.to_string(), hash.clone()])?;
        }
        let rewards: Vec<f64> = traces[i].iter().map(EpisodeTrace::mean_reward).collect();
        let slot_count = (episodes * horizon) as f64;
        stats.push(PolicyStats {
            label: label.clone(),
            policy: kind,
            action_count: kind.space(&scenario.config)?.len(),
            reward: Moments::of(&rewards),
            mean_area_m2: traces[i].iter().flat_map(|t| &t.slots).map(|m| m.area_m2).sum::<f64>() / slot_count,
            final_cumulative_area_m2: *mean_cum.last().expect("nonempty horizon"),
            cumulative_r2: linear_fit_r2(&mean_cum),
            checkpoint_config_hash: nets[i].as_ref().map(|n| n.1.clone()),
        });
    }
    slots_csv.flush()?;
    episodes_csv.flush()?;
    cumulative_csv.flush()?;

    let mut ratios = BTreeMap::new();
    for a in &stats {
        for b in &stats {
            if a.label != b.label {
                ratios.insert(format!("{}/{}", a.label, b.label), a.reward.mean / b.reward.mean);
            }
        }
    }
    let sacrl_vs_nct = ratios.get("sacrl/nct").copied();
    let report = EvalReport {
        config_hash: hash,
        seed: scenario.config.seed,
        episodes,
        episode_seeds: seeds,
        policies: stats,
        ratios,
        sacrl_vs_nct,
    };
    write_json(&out.join("eval_summary.json"), &report)?;
    Ok(report)
}
