//! JSON checkpoints: architecture, training configuration, parameters with
//! their shape table and the optimizer state, guarded by a configuration hash.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adam::AdamState;
use crate::conv::{ConvSpec, UNet};
use crate::error::{NnError, Result};
use crate::mlp::{Mlp, MlpSpec};
use crate::model::Model;
use crate::params::Params;
use crate::train::{EpochStats, TrainConfig};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Architecture {
    Mlp(MlpSpec),
    Conv(ConvSpec),
}

impl Architecture {
    pub fn build(&self) -> Result<Box<dyn Model + Send + Sync>> {
        Ok(match self {
            Architecture::Mlp(s) => Box::new(Mlp::new(s.clone())?),
            Architecture::Conv(s) => Box::new(UNet::new(s.clone())?),
        })
    }
}

/// SHA-256 over the canonical JSON of the architecture and training config.
pub fn config_hash(arch: &Architecture, train: &TrainConfig) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(arch).expect("serializable"));
    h.update(b"\n");
    h.update(serde_json::to_vec(train).expect("serializable"));
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config_hash: String,
    pub architecture: Architecture,
    pub train: TrainConfig,
    pub params: Params,
    pub adam: AdamState,
    /// Hash of the experiment that produced the training data; empty when
    /// the checkpoint was made outside the harness.
    #[serde(default)]
    pub experiment_hash: String,
    #[serde(default)]
    pub history: Vec<EpochStats>,
    #[serde(default)]
    pub best_epoch: usize,
}

impl Checkpoint {
    pub fn new(
        architecture: Architecture,
        train: TrainConfig,
        params: Params,
        adam: AdamState,
    ) -> Self {
        let config_hash = config_hash(&architecture, &train);
        Self {
            version: CHECKPOINT_VERSION,
            config_hash,
            architecture,
            train,
            params,
            adam,
            experiment_hash: String::new(),
            history: Vec::new(),
            best_epoch: 0,
        }
    }

    pub fn with_experiment(
        mut self,
        hash: &str,
        history: Vec<EpochStats>,
        best_epoch: usize,
    ) -> Self {
        self.experiment_hash = hash.to_string();
        self.history = history;
        self.best_epoch = best_epoch;
        self
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_vec(self)?)?;
        Ok(())
    }

    /// Loads and checks version, hash and parameter layout.
    pub fn load(path: &Path) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_slice(&std::fs::read(path)?)?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(NnError::Checkpoint(format!(
                "unsupported version {}",
                ck.version
            )));
        }
        let want = config_hash(&ck.architecture, &ck.train);
        if want != ck.config_hash {
            return Err(NnError::Checkpoint(format!(
                "config hash mismatch: stored {}, computed {want}",
                ck.config_hash
            )));
        }
        let model = ck.architecture.build()?;
        ck.params.check_layout(model.layout())?;
        if ck.adam.m.len() != ck.params.len() || ck.adam.v.len() != ck.params.len() {
            return Err(NnError::Checkpoint(
                "optimizer moments do not match the parameter count".into(),
            ));
        }
        Ok(ck)
    }

    /// Fails unless the checkpoint was trained on data from experiment `expected`.
    pub fn require_experiment(&self, expected: &str) -> Result<()> {
        if self.experiment_hash != expected {
            return Err(NnError::Checkpoint(format!(
                "checkpoint was trained under configuration {:?}, not {expected}",
                self.experiment_hash
            )));
        }
        Ok(())
    }

    /// Fails unless the checkpoint was produced under `expected`.
    pub fn require_hash(&self, expected: &str) -> Result<()> {
        if self.config_hash != expected {
            return Err(NnError::Checkpoint(format!(
                "checkpoint hash {} does not match the requested configuration {expected}",
                self.config_hash
            )));
        }
        Ok(())
    }
}
