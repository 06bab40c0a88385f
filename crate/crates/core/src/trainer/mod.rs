//! Two-step training, the single-step ablation variants, resumable state and
//! translation inference.

mod data;
mod log;
mod optim;
mod run;
mod state;
mod variant;

use serde::{Deserialize, Serialize};

pub use data::TrainingData;
pub use log::{read_loss_log, window_mean, write_loss_log, LossRecord};
pub use optim::{clip_gradients, global_norm, AdamConfig, AdamState};
pub use run::{
    advance, init_step_one, init_step_two, init_variant, run_variant, train_step_one,
    train_step_two, translate, TrainOutcome,
};
pub use state::{CheckpointState, Phase};
pub use variant::{Case, VariantSpec};

use crate::error::{Error, Result};
use crate::networks::NetworkConfig;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchSizes {
    pub unpaired_x: usize,
    pub unpaired_y: usize,
    pub pairs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    /// Iterations of each training step (or of a single-step variant).
    pub iterations: usize,
    pub batch: BatchSizes,
    pub lr0: f64,
    /// The learning rate is divided by this factor every `lr_decay_every`
    /// iterations.
    pub lr_decay_factor: f64,
    pub lr_decay_every: usize,
    #[serde(default)]
    pub adam: AdamConfig,
    pub clip_norm: f64,
    /// Weight of content losses in the single-step variants.
    pub content_weight: f64,
    /// Discriminator and noise-emulator updates per iteration.
    pub discriminator_steps: usize,
    pub noise_steps: usize,
    pub augment: bool,
    pub seed: u64,
    pub network: NetworkConfig,
}

impl TrainConfig {
    /// Hyper-parameters of the full-scale runs.
    pub fn full_scale() -> Self {
        Self {
            iterations: 60_000,
            batch: BatchSizes {
                unpaired_x: 24,
                unpaired_y: 24,
                pairs: 24,
            },
            lr0: 1e-4,
            lr_decay_factor: 5.0,
            lr_decay_every: 20_000,
            adam: AdamConfig::default(),
            clip_norm: 5.0,
            content_weight: 1000.0,
            discriminator_steps: 1,
            noise_steps: 1,
            augment: true,
            seed: 0,
            network: NetworkConfig::full_width(),
        }
    }

    /// Scaled-down schedule for a single CPU core: the same three-stage decay
    /// over 2,000 iterations, smaller batches, a larger initial rate and two
    /// discriminator updates per iteration.
    pub fn desk() -> Self {
        Self {
            iterations: 2_000,
            batch: BatchSizes {
                unpaired_x: 8,
                unpaired_y: 8,
                pairs: 8,
            },
            lr0: 1e-3,
            lr_decay_every: 700,
            discriminator_steps: 2,
            network: NetworkConfig::desk(),
            ..Self::full_scale()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.batch;
        if b.unpaired_x == 0 || b.unpaired_y == 0 || b.pairs == 0 {
            return Err(Error::Config("batch sizes must be positive".into()));
        }
        if !(self.lr0 > 0.0) || !(self.lr_decay_factor >= 1.0) || self.lr_decay_every == 0 {
            return Err(Error::Config("learning-rate schedule needs lr0 > 0, factor >= 1".into()));
        }
        if !(self.clip_norm > 0.0) || !(self.content_weight >= 0.0) {
            return Err(Error::Config("clip_norm must be positive".into()));
        }
        if self.discriminator_steps == 0 || self.noise_steps == 0 {
            return Err(Error::Config("update ratios must be positive".into()));
        }
        let a = &self.adam;
        if !(0.0..1.0).contains(&a.beta1) || !(0.0..1.0).contains(&a.beta2) || !(a.epsilon > 0.0) {
            return Err(Error::Config("adam moments must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Piecewise-constant schedule `lr0 * factor^(-floor(iteration / every))`.
pub fn lr_at(iteration: usize, config: &TrainConfig) -> f64 {
    let k = (iteration / config.lr_decay_every) as i32;
    config.lr0 * config.lr_decay_factor.powi(-k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_scale_schedule() {
        let c = TrainConfig::full_scale();
        assert_eq!(lr_at(0, &c), 1e-4);
        assert!((lr_at(20_000, &c) - 2e-5).abs() < 1e-18);
        assert!((lr_at(59_999, &c) - 4e-6).abs() < 1e-18);
        assert_eq!(lr_at(19_999, &c), 1e-4);
    }
}
