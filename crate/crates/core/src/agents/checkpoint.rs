//! Versioned JSON dump of a Q-network.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::qnet::{Dense, QNetwork};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "emcache-qnet";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDump {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `rows × cols`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub agent: String,
    pub activation: String,
    pub state_dim: usize,
    pub action_count: usize,
    pub hidden: Vec<usize>,
    pub config_hash: String,
    pub layers: Vec<LayerDump>,
}

impl Checkpoint {
    pub fn from_network(net: &QNetwork, agent: &str, config_hash: &str) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            agent: agent.into(),
            activation: "relu".into(),
            state_dim: net.input_dim(),
            action_count: net.output_dim(),
            hidden: net.hidden_sizes(),
            config_hash: config_hash.into(),
            layers: net
                .layers()
                .iter()
                .map(|l| LayerDump {
                    rows: l.weights.nrows(),
                    cols: l.weights.ncols(),
                    weights: l.weights.iter().copied().collect(),
                    bias: l.bias.to_vec(),
                })
                .collect(),
        }
    }

    pub fn to_network(&self) -> Result<QNetwork> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint {} v{} (expected {CHECKPOINT_FORMAT} v{CHECKPOINT_VERSION})",
                self.format, self.version
            )));
        }
        let layers = self
            .layers
            .iter()
            .map(|l| {
                Ok(Dense {
                    weights: Array2::from_shape_vec((l.rows, l.cols), l.weights.clone())
                        .map_err(|e| Error::Checkpoint(e.to_string()))?,
                    bias: Array1::from_vec(l.bias.clone()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let net = QNetwork::from_layers(layers)?;
        if net.input_dim() != self.state_dim || net.output_dim() != self.action_count || net.hidden_sizes() != self.hidden {
            return Err(Error::Checkpoint("layer shapes disagree with the header".into()));
        }
        Ok(net)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Checkpoint(format!("cannot read {}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn roundtrip_through_file() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = QNetwork::new(4, &[6, 5], 40, &mut rng);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.json");
        Checkpoint::from_network(&net, "sacrl", "abc").save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(back.agent, "sacrl");
        assert_eq!(back.to_network().unwrap(), net);
    }

    #[test]
    fn rejects_wrong_version_and_missing_file() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut ck = Checkpoint::from_network(&QNetwork::new(2, &[2], 2, &mut rng), "sacrl", "");
        ck.version = 99;
        assert!(matches!(ck.to_network(), Err(Error::Checkpoint(_))));
        assert!(Checkpoint::load(Path::new("/nonexistent/q.json")).is_err());
    }
}
