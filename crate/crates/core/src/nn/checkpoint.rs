use serde::{Deserialize, Serialize};

use super::dense::{Activation, DenseLayer};
use super::optim::AdamConfig;
use super::tensor::Tensor2;
use crate::error::{Error, Result};

pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;

/// One parameterized layer in flat form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub name: String,
    /// "dense", "lstm" or "conv".
    pub kind: String,
    /// Weight shape, [rows, cols].
    pub shape: [usize; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activation: Option<Activation>,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LayerRecord {
    pub fn dense(name: impl Into<String>, layer: &DenseLayer) -> Self {
        LayerRecord {
            name: name.into(),
            kind: "dense".into(),
            shape: [layer.weights.rows, layer.weights.cols],
            activation: Some(layer.activation),
            weights: layer.weights.data.clone(),
            bias: layer.bias.clone(),
        }
    }

    pub fn to_dense(&self) -> Result<DenseLayer> {
        let activation = self
            .activation
            .ok_or_else(|| Error::Model(format!("layer {} has no activation", self.name)))?;
        DenseLayer::new(
            Tensor2::from_vec(self.shape[0], self.shape[1], self.weights.clone())?,
            self.bias.clone(),
            activation,
        )
    }

    pub fn weight_tensor(&self) -> Result<Tensor2> {
        Tensor2::from_vec(self.shape[0], self.shape[1], self.weights.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema_version: u32,
    pub seed: u64,
    pub layers: Vec<LayerRecord>,
    pub optimizer: AdamConfig,
    pub epoch: usize,
    pub loss: f64,
}

impl Checkpoint {
    pub fn check_version(&self) -> Result<()> {
        if self.schema_version != CHECKPOINT_SCHEMA_VERSION {
            return Err(Error::Model(format!(
                "checkpoint schema {} unsupported (expected {CHECKPOINT_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        Ok(())
    }

    pub fn layer(&self, name: &str) -> Result<&LayerRecord> {
        self.layers
            .iter()
            .find(|l| l.name == name)
            .ok_or_else(|| Error::Model(format!("checkpoint has no layer {name}")))
    }
}
