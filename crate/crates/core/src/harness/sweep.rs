//! The `sweep` command: one numeric config field over a list of values.
//!
//! Calibration runs once on the base document and stays frozen, so a point
//! differs from the base only in the swept field. Every point and policy is
//! evaluated on the same episode seeds.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::{csv_writer, eval_seeds, evaluate_policy, prepare_out, write_json, EpisodeTrace, Moments};
use crate::agents::{derive_seed, train, PolicyKind};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub parameter: String,
    pub value: f64,
    pub policy: String,
    pub mean_reward: f64,
    pub std: f64,
    pub stderr: f64,
    pub episodes: usize,
    pub config_hash: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepEpisode {
    pub parameter: String,
    pub value: f64,
    pub policy: String,
    pub episode: usize,
    pub episode_seed: u64,
    pub mean_reward: f64,
    pub config_hash: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub parameter: String,
    pub values: Vec<f64>,
    pub base_config_hash: String,
    pub rows: Vec<SweepRow>,
    #[serde(skip)]
    pub episodes: Vec<SweepEpisode>,
}

impl SweepReport {
    pub fn row(&self, policy: &str, value: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.policy == policy && r.value == value)
    }

    /// Per-episode mean rewards of `policy` at `value`, in seed order.
    pub fn episode_rewards(&self, policy: &str, value: f64) -> Vec<f64> {
        self.episodes
            .iter()
            .filter(|e| e.policy == policy && e.value == value)
            .map(|e| e.mean_reward)
            .collect()
    }

    /// Moments of the per-episode difference `b − a` (common seeds).
    pub fn paired_difference(&self, policy: &str, a: f64, b: f64) -> Moments {
        let (xa, xb) = (self.episode_rewards(policy, a), self.episode_rewards(policy, b));
        let d: Vec<f64> = xa.iter().zip(&xb).map(|(x, y)| y - x).collect();
        Moments::of(&d)
    }
}

pub fn cmd_sweep(
    cfg: &ScenarioConfig,
    parameter: &str,
    values: &[f64],
    policies: &[PolicyKind],
    episodes: usize,
    out: &Path,
) -> Result<SweepReport> {
    if values.is_empty() || policies.is_empty() || episodes == 0 {
        return Err(Error::Config("sweep needs values, policies and at least one episode".into()));
    }
    let base = cfg.resolve()?;
    let points = values
        .iter()
        .map(|&v| base.config.with_override(parameter, v).and_then(|c| c.resolve()))
        .collect::<Result<Vec<_>>>()?;
    prepare_out(out, &base)?;
    let seed = base.config.seed;
    let seeds = eval_seeds(seed, episodes);

    let results: Vec<Vec<(PolicyKind, Vec<EpisodeTrace>)>> = points
        .par_iter()
        .map(|sc| {
            policies
                .iter()
                .enumerate()
                .map(|(i, &kind)| {
                    let net = if kind.is_learned() {
                        let mut env = kind.make_env(sc)?;
                        Some(train(&mut env, &sc.config.dqn, seed)?.agent.online)
                    } else {
                        None
                    };
                    let traces = evaluate_policy(sc, kind, net.as_ref(), &seeds, derive_seed(seed, 4, i as u64))?;
                    Ok((kind, traces))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut per_episode = Vec::new();
    for ((&value, sc), point) in values.iter().zip(&points).zip(&results) {
        let hash = sc.hash();
        for (kind, traces) in point {
            let rewards: Vec<f64> = traces.iter().map(EpisodeTrace::mean_reward).collect();
            let m = Moments::of(&rewards);
            rows.push(SweepRow {
                parameter: parameter.into(),
                value,
                policy: kind.name().into(),
                mean_reward: m.mean,
                std: m.std,
                stderr: m.stderr,
                episodes,
                config_hash: hash.clone(),
            });
            for (e, (tr, &r)) in traces.iter().zip(&rewards).enumerate() {
                per_episode.push(SweepEpisode {
                    parameter: parameter.into(),
                    value,
                    policy: kind.name().into(),
                    episode: e,
                    episode_seed: tr.seed,
                    mean_reward: r,
                    config_hash: hash.clone(),
                });
            }
        }
    }

    let mut w = csv_writer(&out.join("sweep.csv"))?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    let mut w = csv_writer(&out.join("sweep_episodes.csv"))?;
    for r in &per_episode {
        w.serialize(r)?;
    }
    w.flush()?;
    let report = SweepReport {
        parameter: parameter.into(),
        values: values.to_vec(),
        base_config_hash: base.hash(),
        rows,
        episodes: per_episode,
    };
    write_json(&out.join("sweep_summary.json"), &report)?;
    Ok(report)
}
