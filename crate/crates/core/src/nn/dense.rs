use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::Tensor2;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[serde(rename = "relu")]
    ReLU,
    Tanh,
    Sigmoid,
    Identity,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::ReLU => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
            Activation::Identity => x,
        }
    }

    /// Derivative given the pre-activation `x` and output `y = apply(x)`.
    #[inline]
    pub fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::ReLU => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Identity => 1.0,
        }
    }
}

/// y = f(W x + b); W is out x in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weights: Tensor2,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

/// Inputs and intermediates of one forward pass, needed by `backward`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseRecord {
    pub input: Tensor2,
    pub pre: Tensor2,
    pub output: Tensor2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    pub weights: Tensor2,
    pub bias: Vec<f64>,
    pub input: Tensor2,
}

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
pub fn glorot_uniform(rng: &mut impl Rng, fan_out: usize, fan_in: usize) -> Tensor2 {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Tensor2::from_fn(fan_out, fan_in, |_, _| rng.random_range(-limit..limit))
}

impl DenseLayer {
    pub fn new(weights: Tensor2, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if bias.len() != weights.rows {
            return Err(Error::shape(format!(
                "bias {} for {} outputs",
                bias.len(),
                weights.rows
            )));
        }
        Ok(DenseLayer {
            weights,
            bias,
            activation,
        })
    }

    /// Glorot-initialized weights, zero bias.
    pub fn init(rng: &mut impl Rng, inputs: usize, outputs: usize, activation: Activation) -> Self {
        DenseLayer {
            weights: glorot_uniform(rng, outputs, inputs),
            bias: vec![0.0; outputs],
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.cols
    }

    pub fn outputs(&self) -> usize {
        self.weights.rows
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.data.len() + self.bias.len()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_matrix(&Tensor2::column_vector(x))?.output.data)
    }

    /// Applies the layer to every column of `x` (in x cols).
    pub fn forward_matrix(&self, x: &Tensor2) -> Result<DenseRecord> {
        if x.rows != self.inputs() {
            return Err(Error::shape(format!(
                "dense layer expects {} inputs, got {}",
                self.inputs(),
                x.rows
            )));
        }
        let mut pre = self.weights.matmul(x)?;
        for r in 0..pre.rows {
            let b = self.bias[r];
            for v in &mut pre.data[r * pre.cols..(r + 1) * pre.cols] {
                *v += b;
            }
        }
        let output = pre.map(|v| self.activation.apply(v));
        Ok(DenseRecord {
            input: x.clone(),
            pre,
            output,
        })
    }

    /// Gradient of the pre-activation from the upstream output gradient.
    pub fn pre_gradient(&self, record: &DenseRecord, upstream: &Tensor2) -> Result<Tensor2> {
        if upstream.shape() != record.output.shape() {
            return Err(Error::shape(format!(
                "upstream {:?} for output {:?}",
                upstream.shape(),
                record.output.shape()
            )));
        }
        let mut g = upstream.clone();
        for ((gv, &x), &y) in g
            .data
            .iter_mut()
            .zip(&record.pre.data)
            .zip(&record.output.data)
        {
            *gv *= self.activation.derivative(x, y);
        }
        Ok(g)
    }

    pub fn backward(&self, record: &DenseRecord, upstream: &Tensor2) -> Result<DenseGrads> {
        if record.input.rows != self.inputs() || record.pre.rows != self.outputs() {
            return Err(Error::shape("record does not belong to this layer"));
        }
        let g = self.pre_gradient(record, upstream)?;
        Ok(DenseGrads {
            weights: g.matmul_t(&record.input)?,
            bias: g.row_sums(),
            input: self.weights.t_matmul(&g)?,
        })
    }

    /// Weights then bias, flattened.
    pub fn flat_parameters(&self) -> Vec<f64> {
        let mut v = self.weights.data.clone();
        v.extend_from_slice(&self.bias);
        v
    }
}

impl DenseGrads {
    pub fn zeros_like(layer: &DenseLayer, cols: usize) -> Self {
        DenseGrads {
            weights: Tensor2::zeros(layer.outputs(), layer.inputs()),
            bias: vec![0.0; layer.outputs()],
            input: Tensor2::zeros(layer.inputs(), cols),
        }
    }

    pub fn accumulate(&mut self, other: &DenseGrads) -> Result<()> {
        self.weights.add_assign(&other.weights)?;
        for (a, b) in self.bias.iter_mut().zip(&other.bias) {
            *a += b;
        }
        Ok(())
    }
}
