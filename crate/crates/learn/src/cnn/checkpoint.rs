use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::arch::CnnArchitecture;
use super::network::Network;
use super::train::Precision;
use super::Scalar;
use crate::dataset::Standardization;
use crate::error::{LearnError, Result};

pub const CHECKPOINT_FORMAT: &str = "topoeeg-cnn-checkpoint";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub trainable: bool,
    pub values: Vec<f64>,
}

/// Self-describing snapshot of a trained network: architecture, every
/// tensor in declared order as 64-bit values, the feature standardization
/// the network expects, and the fingerprint of the producing configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub architecture: CnnArchitecture,
    pub precision: Precision,
    pub tensors: Vec<StoredTensor>,
    pub standardization: Option<Standardization>,
    pub fingerprint: String,
}

impl Checkpoint {
    pub fn capture<F: Scalar>(
        net: &Network<F>,
        precision: Precision,
        standardization: Option<Standardization>,
        fingerprint: impl Into<String>,
    ) -> Self {
        let tensors = net
            .tensors()
            .into_iter()
            .map(|t| StoredTensor {
                name: t.name,
                shape: t.shape,
                trainable: t.trainable,
                values: t.values.iter().map(|v| v.to_f64().unwrap()).collect(),
            })
            .collect();
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            architecture: *net.architecture(),
            precision,
            tensors,
            standardization,
            fingerprint: fingerprint.into(),
        }
    }

    /// Rebuilds the network; tensor names and shapes must match the
    /// architecture exactly.
    pub fn restore<F: Scalar>(&self) -> Result<Network<F>> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(LearnError::Checkpoint(format!(
                "unsupported container {} v{}",
                self.format, self.version
            )));
        }
        let mut net = Network::<F>::init(self.architecture, 0)?;
        let slots = net.tensors().len();
        if slots != self.tensors.len() {
            return Err(LearnError::Checkpoint(format!(
                "expected {slots} tensors, found {}",
                self.tensors.len()
            )));
        }
        for (expected, stored) in net.tensors().iter().zip(&self.tensors) {
            if expected.name != stored.name || expected.shape != stored.shape {
                return Err(LearnError::Checkpoint(format!(
                    "tensor {} {:?} does not match architecture slot {} {:?}",
                    stored.name, stored.shape, expected.name, expected.shape
                )));
            }
        }
        net.load_tensors(self.tensors.iter().map(|t| t.values.clone()))?;
        Ok(net)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_slice(&fs::read(path)?)?)
    }
}
