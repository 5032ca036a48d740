//! The `train` command: DQN training with checkpoint and learning curve.

use std::path::Path;

use serde::Serialize;

use super::{checkpoint_path, csv_writer, prepare_out, write_json};
use crate::agents::{train, Checkpoint, PolicyKind, QNetwork};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct TrainReport {
    pub agent: PolicyKind,
    pub action_count: usize,
    pub state_dim: usize,
    pub episodes: usize,
    pub transitions: usize,
    pub updates: usize,
    /// Mean training reward over the last tenth of the episodes.
    pub final_mean_reward: f64,
    pub seed: u64,
    pub config_hash: String,
    pub contact_time_s: f64,
    pub beta0: f64,
    pub checkpoint: String,
    #[serde(skip)]
    pub network: Option<QNetwork>,
}

/// Trains `agent` (`sacrl` or `scrl`) with `cfg.dqn` and seed `cfg.seed`.
pub fn cmd_train(cfg: &ScenarioConfig, agent: PolicyKind, out: &Path) -> Result<TrainReport> {
    if !agent.is_learned() {
        return Err(Error::Config(format!("{agent} is not a trainable agent (use sacrl or scrl)")));
    }
    let scenario = cfg.resolve()?;
    let hash = scenario.hash();
    prepare_out(out, &scenario)?;
    let mut env = agent.make_env(&scenario)?;
    let outcome = train(&mut env, &scenario.config.dqn, scenario.config.seed)?;

    let mut curve = csv_writer(&out.join(format!("learning_curve_{}.csv", agent.name())))?;
    curve.write_record(["episode", "mean_reward", "epsilon", "loss", "config_hash"])?;
    for log in &outcome.curve {
        curve.write_record([
            log.episode.to_string(),
            log.mean_reward.to_string(),
            log.epsilon.to_string(),
            log.mean_loss.map_or_else(String::new, |l| l.to_string()),
            hash.clone(),
        ])?;
    }
    curve.flush()?;

    let ck_path = checkpoint_path(out, agent);
    Checkpoint::from_network(&outcome.agent.online, agent.name(), &hash).save(&ck_path)?;

    let tail = (outcome.curve.len() / 10).max(1);
    let final_mean_reward =
        outcome.curve.iter().rev().take(tail).map(|l| l.mean_reward).sum::<f64>() / tail as f64;
    let report = TrainReport {
        agent,
        action_count: env.space().len(),
        state_dim: env.state_dim(),
        episodes: outcome.curve.len(),
        transitions: outcome.transitions,
        updates: outcome.updates,
        final_mean_reward,
        seed: scenario.config.seed,
        config_hash: hash,
        contact_time_s: scenario.contact_time_s,
        beta0: scenario.beta0,
        checkpoint: ck_path.file_name().expect("file name").to_string_lossy().into_owned(),
        network: Some(outcome.agent.online),
    };
    write_json(&out.join(format!("train_summary_{}.json", agent.name())), &report)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::default();
        cfg.episode.horizon = 5;
        cfg.dqn.episodes = 4;
        cfg.dqn.hidden = vec![8];
        cfg.dqn.batch_size = 4;
        cfg.dqn.memory_size = 50;
        cfg
    }

    #[test]
    fn writes_one_curve_row_per_episode() {
        let dir = tempfile::tempdir().unwrap();
        let r = cmd_train(&tiny(), PolicyKind::Sacrl, dir.path()).unwrap();
        assert_eq!(r.action_count, 40);
        let text = std::fs::read_to_string(dir.path().join("learning_curve_sacrl.csv")).unwrap();
        assert_eq!(text.lines().count(), 1 + 4);
        assert!(text.lines().skip(1).all(|l| l.ends_with(&r.config_hash)));
        let ck = Checkpoint::load(&dir.path().join("checkpoint_sacrl.json")).unwrap();
        assert_eq!(&ck.to_network().unwrap(), r.network.as_ref().unwrap());
    }

    #[test]
    fn scrl_records_equal_share_space() {
        let dir = tempfile::tempdir().unwrap();
        let r = cmd_train(&tiny(), PolicyKind::Scrl, dir.path()).unwrap();
        assert_eq!(r.action_count, 16);
        let summary = std::fs::read_to_string(dir.path().join("train_summary_scrl.json")).unwrap();
        assert!(summary.contains("\"action_count\": 16"));
    }

    #[test]
    fn baselines_are_not_trainable() {
        let dir = tempfile::tempdir().unwrap();
        assert!(cmd_train(&tiny(), PolicyKind::Nct, dir.path()).is_err());
    }
}
