//! Experiment description, stored as TOML.
//!
//! Every field has a default, so a config file only needs to name what it
//! changes. A complete file looks like:
//!
//! ```toml
//! seed = 1
//! max_rounds = 2000
//! parallel = true
//!
//! [topology]
//! kind = "random"       # line | ring | star | grid | random
//! sensors = 20          # random only
//! area = { x = [100.0, 1000.0], y = [100.0, 1000.0] }
//! comm_range = 400.0    # random only; fixed layouts use 400
//! # import = "topology.json"
//!
//! [channel]
//! transmitter_position = [0.0, 0.0]
//! path_loss_exponent = 2.0
//! reference_snr_db = 20.0
//! reference_distance = 100.0
//! phase_offset_range = 0.7853981633974483
//!
//! [data]
//! samples_per_sensor = 1000
//! target_fraction = 0.5
//! train_fraction = 0.8
//!
//! [train]
//! learning_rate = 0.001
//! rmsprop_decay = 0.9
//! rmsprop_epsilon = 1e-7
//! dropout_rate = 0.2
//! batch_size = 32
//! local_epochs = 1
//!
//! [link]
//! packet_loss_prob = 0.0
//! broadcast_prob = 1.0
//!
//! [convergence]
//! epsilon = 0.01
//! window = 100
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::ConvergenceConfig;
use crate::nn::TrainConfig;
use crate::protocol::LinkModel;
use crate::rng::{stream, Domain};
use crate::signal::ChannelParams;
use crate::topology::{
    build_grid, build_line, build_random, build_ring, build_star, Area, Topology, TopologyJson, TopologyKind,
    DEFAULT_COMM_RANGE,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologySpec {
    pub kind: TopologyKind,
    pub sensors: usize,
    pub area: Area,
    pub comm_range: f64,
    /// Replay a layout exported by an earlier run; overrides `kind`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub import: Option<PathBuf>,
}

impl Default for TopologySpec {
    fn default() -> Self {
        Self {
            kind: TopologyKind::Random,
            sensors: 20,
            area: Area::default(),
            comm_range: DEFAULT_COMM_RANGE,
            import: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub samples_per_sensor: usize,
    pub target_fraction: f64,
    pub train_fraction: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            samples_per_sensor: 1000,
            target_fraction: 0.5,
            train_fraction: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub max_rounds: usize,
    /// Train and evaluate sensors on the rayon pool. Results do not depend on it.
    pub parallel: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub topology: TopologySpec,
    pub channel: ChannelParams,
    pub data: DataConfig,
    pub train: TrainConfig,
    pub link: LinkModel,
    pub convergence: ConvergenceConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            max_rounds: 2000,
            parallel: true,
            output_dir: None,
            topology: TopologySpec::default(),
            channel: ChannelParams::default(),
            data: DataConfig::default(),
            train: TrainConfig::default(),
            link: LinkModel::default(),
            convergence: ConvergenceConfig::default(),
        }
    }
}

impl SimConfig {
    pub fn with_topology(mut self, kind: TopologyKind) -> Self {
        self.topology.kind = kind;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Config(e.to_string());
        if self.max_rounds == 0 {
            return Err(Error::Config("max_rounds must be at least 1".into()));
        }
        self.channel.validate().map_err(wrap)?;
        self.train.validate().map_err(wrap)?;
        self.link.validate().map_err(wrap)?;
        self.convergence.validate().map_err(wrap)?;
        let d = &self.data;
        if d.samples_per_sensor == 0 {
            return Err(Error::Config("data.samples_per_sensor must be positive".into()));
        }
        if !(d.target_fraction > 0.0 && d.target_fraction < 1.0) {
            return Err(Error::Config("data.target_fraction must lie in (0, 1)".into()));
        }
        if !(d.train_fraction > 0.0 && d.train_fraction < 1.0) {
            return Err(Error::Config("data.train_fraction must lie in (0, 1)".into()));
        }
        if self.topology.kind == TopologyKind::Random && self.topology.import.is_none() {
            if self.topology.sensors < 2 {
                return Err(Error::Config("topology.sensors must be at least 2".into()));
            }
            if !(self.topology.comm_range > 0.0) {
                return Err(Error::Config("topology.comm_range must be positive".into()));
            }
        }
        Ok(())
    }

    /// The layout for this config. Random layouts come from the master seed.
    pub fn build_topology(&self) -> Result<Topology> {
        if let Some(path) = &self.topology.import {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let json: TopologyJson = serde_json::from_str(&text)?;
            return Topology::from_json(&json);
        }
        Ok(match self.topology.kind {
            TopologyKind::Line => build_line(),
            TopologyKind::Ring => build_ring(),
            TopologyKind::Star => build_star(),
            TopologyKind::Grid => build_grid(),
            TopologyKind::Random => build_random(
                self.topology.sensors,
                self.topology.area,
                self.topology.comm_range,
                &mut stream(self.seed, Domain::Layout, 0),
            )?,
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }
}
