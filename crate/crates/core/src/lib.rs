//! Coded-caching disaster-map transmission in a UAV emergency network.
//!
//! Sensing UAVs (SUs) map parts of a rasterized target area each slot. Every
//! map file is MDS-coded into fragments cached on nearby cooperative UAVs
//! (CUs), which upload them to a ground vehicle (GV) over Rician
//! air-to-ground links with random contact time. The crate computes link,
//! file and cell recovery probabilities, wraps them in a slotted MDP, and
//! trains a DQN scheduler that chooses which SUs to serve, how much
//! bandwidth each gets and the code dimension `k`, alongside four baselines.
//!
//! Modules, bottom-up:
//! - [`world`]: grid, mobility, sensing footprints, file sizes
//! - [`channel`]: Rician CDF, rate CDF, STP quadrature and sampling oracles
//! - [`coding`]: holders, eligibility, selection, recovery probabilities
//! - [`env`]: action space, slot evaluation, environment dynamics
//! - [`agents`]: Q-network, replay, DQN training, baselines
//! - [`harness`]: train / eval / sweep / calibrate / oracle commands

pub mod agents;
pub mod calibrate;
pub mod channel;
pub mod coding;
pub mod config;
pub mod env;
pub mod error;
pub mod harness;
pub mod world;

pub use config::{CellMode, RecoveryMode, Scenario, ScenarioConfig};
pub use error::{Error, Result};
