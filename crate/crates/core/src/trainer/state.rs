use std::path::Path;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::optim::AdamState;
use super::variant::VariantSpec;
use crate::error::{Error, Result};
use crate::networks::{read_checkpoint, write_checkpoint, CheckpointExtras, Dtype, ModelBundle, Role};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    StepOne,
    StepTwo,
    Variant(VariantSpec),
}

/// Everything needed to continue a run exactly where it stopped.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointState {
    pub phase: Phase,
    pub bundle: ModelBundle,
    pub optimizers: Vec<(Role, AdamState)>,
    pub iteration: usize,
    pub rng: ChaCha8Rng,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateHeader {
    phase: Phase,
    iteration: usize,
    rng: ChaCha8Rng,
    adam_steps: Vec<(Role, u64)>,
}

impl CheckpointState {
    pub fn optimizer_mut(&mut self, role: Role) -> &mut AdamState {
        &mut self
            .optimizers
            .iter_mut()
            .find(|(r, _)| *r == role)
            .unwrap_or_else(|| panic!("no optimizer for {role:?}"))
            .1
    }

    /// Save networks, moments, counter and RNG position in double precision.
    pub fn save(&self, path: &Path) -> Result<()> {
        let header = StateHeader {
            phase: self.phase,
            iteration: self.iteration,
            rng: self.rng.clone(),
            adam_steps: self.optimizers.iter().map(|(r, s)| (*r, s.steps)).collect(),
        };
        let mut tensors = Vec::new();
        for (role, s) in &self.optimizers {
            for (i, (m, v)) in s.first.iter().zip(&s.second).enumerate() {
                tensors.push((format!("adam/{role:?}/{i}/m"), m.clone()));
                tensors.push((format!("adam/{role:?}/{i}/v"), v.clone()));
            }
        }
        let extras = CheckpointExtras {
            tensors,
            state: Some(serde_json::to_value(header)?),
        };
        write_checkpoint(path, &self.bundle, Dtype::F64, &extras)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (bundle, extras, dtype) = read_checkpoint(path)?;
        if dtype != Dtype::F64 {
            return Err(Error::Format(format!(
                "{} is a model checkpoint, not a resumable training state",
                path.display()
            )));
        }
        let header: StateHeader = serde_json::from_value(
            extras
                .state
                .ok_or_else(|| Error::Format(format!("{}: no training state", path.display())))?,
        )?;
        let mut moments = extras.tensors.into_iter().map(|(_, t)| t);
        let mut optimizers = Vec::new();
        for (role, steps) in header.adam_steps {
            let params = bundle.require(role)?.params();
            let mut first: Vec<Tensor> = Vec::with_capacity(params.len());
            let mut second: Vec<Tensor> = Vec::with_capacity(params.len());
            for t in params.tensors() {
                let (m, v) = match (moments.next(), moments.next()) {
                    (Some(m), Some(v)) => (m, v),
                    _ => return Err(Error::Format("missing optimizer moments".into())),
                };
                if m.shape() != t.shape() || v.shape() != t.shape() {
                    return Err(Error::Format(format!("optimizer moments for {role:?} misshapen")));
                }
                first.push(m);
                second.push(v);
            }
            optimizers.push((role, AdamState { steps, first, second }));
        }
        if moments.next().is_some() {
            return Err(Error::Format("unexpected extra tensors".into()));
        }
        Ok(Self {
            phase: header.phase,
            bundle,
            optimizers,
            iteration: header.iteration,
            rng: header.rng,
        })
    }
}
