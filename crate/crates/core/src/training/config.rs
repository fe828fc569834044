use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::BlockKind;
use crate::gnn::{SmallDegree, Variant};
use crate::graph::Direction;

pub const MAX_EPOCHS: usize = 100;

fn default_true() -> bool {
    true
}

/// Hyperparameters and data choices for one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub variant: Variant,
    pub hidden: usize,
    pub lr: f64,
    pub gamma: f64,
    pub weight_decay: f64,
    pub dropout: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Per-depth neighbor caps; its length is the model depth.
    pub fanouts: Vec<usize>,
    pub seed: u64,
    /// Feature blocks fed to the model; `None` uses every block present.
    pub blocks: Option<Vec<BlockKind>>,
    pub direction: Direction,
    pub small_degree: SmallDegree,
    /// Standardize continuous blocks over the training rows before training.
    #[serde(default = "default_true")]
    pub standardize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Sage,
            hidden: 128,
            lr: 0.05,
            gamma: 0.5,
            weight_decay: 0.0004,
            dropout: 0.15,
            momentum: 0.9,
            epochs: MAX_EPOCHS,
            batch_size: 64,
            fanouts: vec![25, 10],
            seed: 0,
            blocks: None,
            direction: Direction::Both,
            small_degree: SmallDegree::TakeAll,
            standardize: true,
        }
    }
}

impl TrainConfig {
    /// Checks every field against its allowed range, naming the offending
    /// field in the error.
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: String| Err(Error::InvalidInput(format!("{field}: {why}")));
        if self.hidden == 0 {
            return bad("hidden", "must be >= 1".into());
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return bad("lr", format!("{} must be a finite value >= 0", self.lr));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad("gamma", format!("{} must be > 0", self.gamma));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad("weight_decay", format!("{} must be >= 0", self.weight_decay));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout", format!("{} outside [0, 1)", self.dropout));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum", format!("{} outside [0, 1)", self.momentum));
        }
        if self.epochs == 0 || self.epochs > MAX_EPOCHS {
            return bad("epochs", format!("{} outside [1, {MAX_EPOCHS}]", self.epochs));
        }
        if self.batch_size == 0 {
            return bad("batch_size", "must be >= 1".into());
        }
        if self.fanouts.is_empty() || self.fanouts.contains(&0) {
            return bad("fanouts", format!("{:?} must be non-empty and positive", self.fanouts));
        }
        if let Some(blocks) = &self.blocks {
            if blocks.is_empty() {
                return bad("blocks", "at least one feature block is required".into());
            }
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.fanouts.len()
    }
}
