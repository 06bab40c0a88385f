use std::path::{Path, PathBuf};

use galtrans::image_core::HighPassKernel;
use galtrans::synthetic::DatasetConfig;
use galtrans::trainer::{Case, TrainConfig};
use galtrans::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationOptions {
    /// Emulator draws behind each reference level.
    pub noise_samples: usize,
    /// Add emulated noise to translations when the checkpoint has emulators.
    pub with_noise: bool,
    #[serde(default = "HighPassKernel::laplacian")]
    pub high_pass: HighPassKernel,
}

impl Default for EvaluationOptions {
    fn default() -> Self {
        Self {
            noise_samples: 1000,
            with_noise: true,
            high_pass: HighPassKernel::laplacian(),
        }
    }
}

/// Everything a subcommand needs, as read from the JSON config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run_dir: PathBuf,
    pub dataset: DatasetConfig,
    pub train: TrainConfig,
    /// Case run by `train-variant` when `--case` is not given.
    #[serde(default)]
    pub variant: Option<Case>,
    #[serde(default)]
    pub evaluation: EvaluationOptions,
}

impl RunConfig {
    pub fn desk() -> Self {
        Self {
            run_dir: PathBuf::from("runs/desk"),
            dataset: DatasetConfig::desk(),
            train: TrainConfig::desk(),
            variant: None,
            evaluation: EvaluationOptions::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        self.dataset.validate()?;
        self.train.validate()?;
        if self.evaluation.noise_samples == 0 {
            return Err(Error::Config("evaluation.noise_samples must be positive".into()));
        }
        Ok(())
    }

    /// Master seed: drives data generation and training alike.
    pub fn set_seed(&mut self, seed: u64) {
        self.dataset.seed = seed;
        self.train.seed = seed;
    }
}
