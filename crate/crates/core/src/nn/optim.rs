use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One trainable buffer and its gradient, tagged with a path for error reports.
pub struct ParamSlot<'a> {
    pub path: String,
    pub value: &'a mut [f64],
    pub grad: &'a [f64],
}

impl<'a> ParamSlot<'a> {
    pub fn new(path: impl Into<String>, value: &'a mut [f64], grad: &'a [f64]) -> Self {
        ParamSlot {
            path: path.into(),
            value,
            grad,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        AdamConfig {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adaptive-moment optimizer with bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    pub steps: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Result<Self> {
        if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
            return Err(Error::domain(format!(
                "learning rate must be > 0, got {}",
                config.learning_rate
            )));
        }
        Ok(Adam {
            config,
            steps: 0,
            first: Vec::new(),
            second: Vec::new(),
        })
    }

    pub fn set_learning_rate(&mut self, lr: f64) {
        self.config.learning_rate = lr;
    }

    /// Updates every slot in place. Nothing is modified if any gradient is non-finite.
    pub fn step(&mut self, slots: &mut [ParamSlot<'_>]) -> Result<()> {
        for s in slots.iter() {
            if s.value.len() != s.grad.len() {
                return Err(Error::shape(format!(
                    "{}: {} parameters, {} gradients",
                    s.path,
                    s.value.len(),
                    s.grad.len()
                )));
            }
            if let Some(i) = s.grad.iter().position(|g| !g.is_finite()) {
                return Err(Error::Training {
                    epoch: self.steps as usize,
                    detail: format!("non-finite gradient at {}[{i}]", s.path),
                });
            }
        }
        if self.first.is_empty() {
            self.first = slots.iter().map(|s| vec![0.0; s.value.len()]).collect();
            self.second = self.first.clone();
        }
        if self.first.len() != slots.len()
            || self
                .first
                .iter()
                .zip(slots.iter())
                .any(|(m, s)| m.len() != s.value.len())
        {
            return Err(Error::shape("optimizer slots changed between steps"));
        }
        self.steps += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let c1 = 1.0 - beta1.powi(self.steps as i32);
        let c2 = 1.0 - beta2.powi(self.steps as i32);
        for ((s, m), v) in slots.iter_mut().zip(&mut self.first).zip(&mut self.second) {
            for i in 0..s.value.len() {
                let g = s.grad[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * g;
                v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                s.value[i] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}

/// Cosine decay from `base` to `base * floor` over `total` epochs.
pub fn cosine_learning_rate(base: f64, floor: f64, epoch: usize, total: usize) -> f64 {
    if total <= 1 {
        return base;
    }
    let t = epoch.min(total - 1) as f64 / (total - 1) as f64;
    base * (floor + (1.0 - floor) * 0.5 * (1.0 + (std::f64::consts::PI * t).cos()))
}
