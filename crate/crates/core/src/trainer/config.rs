use serde::{Deserialize, Serialize};

use crate::losses::LambdaSchedule;
use crate::model::ModelConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: u32,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Monte-Carlo latent samples per input (`L`).
    pub mc_samples: usize,
    pub model: ModelConfig,
    pub sched: LambdaSchedule,
    /// Write a checkpoint every this many epochs (0 disables periodic saves).
    pub checkpoint_every: u32,
    /// Cap on within-class pairs per class and batch for the alignment term.
    pub max_pairs_per_class: usize,
    /// Stratify batches so each one holds a same-class pair.
    pub class_min_pairs: bool,
    /// Record wall-clock seconds in the log. Off by default because it makes
    /// logs differ between otherwise identical runs.
    pub record_wall_time: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 128,
            learning_rate: 1e-3,
            seed: 0,
            mc_samples: 1,
            model: ModelConfig::default(),
            sched: LambdaSchedule::default(),
            checkpoint_every: 10,
            max_pairs_per_class: 64,
            class_min_pairs: true,
            record_wall_time: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.epochs < 1 {
            return Err("epochs must be at least 1".into());
        }
        if self.mc_samples < 1 {
            return Err("mc_samples must be at least 1".into());
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err("learning_rate must be finite and non-negative".into());
        }
        if self.batch_size < 4 {
            return Err("batch_size must be at least 4".into());
        }
        self.sched.validate()?;
        self.model.validate().map_err(|e| e.to_string())
    }

    /// Seed of the batch shuffle for a 1-based epoch.
    pub fn shuffle_seed(&self, epoch: u32) -> u64 {
        self.seed ^ u64::from(epoch).wrapping_mul(0x9E37_79B9_7F4A_7C15)
    }
}
