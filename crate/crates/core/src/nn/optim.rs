use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    /// SGD only.
    pub momentum: f64,
    /// SGD only.
    pub nesterov: bool,
    /// Coupled (L2) for SGD, decoupled for Adam.
    pub weight_decay: f64,
    /// Halve the learning rate every 25 epochs.
    pub time_decay: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            kind: OptimizerKind::Adam,
            learning_rate: 1e-3,
            momentum: 0.9,
            nesterov: false,
            weight_decay: 0.0,
            time_decay: false,
        }
    }
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;
const DECAY_EVERY: usize = 25;

impl OptimizerConfig {
    pub fn sgd(learning_rate: f64) -> Self {
        Self {
            kind: OptimizerKind::Sgd,
            learning_rate,
            momentum: 0.0,
            ..Self::default()
        }
    }

    pub fn adam(learning_rate: f64) -> Self {
        Self {
            kind: OptimizerKind::Adam,
            learning_rate,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        // zero is allowed: it freezes the parameters
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidHyperparameter("learning rate must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidHyperparameter("momentum must lie in [0, 1)".into()));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::InvalidHyperparameter("weight decay must be >= 0".into()));
        }
        Ok(())
    }

    /// Learning rate in effect during `epoch` (0-based).
    pub fn lr_at(&self, epoch: usize) -> f64 {
        if self.time_decay {
            self.learning_rate * 0.5f64.powi((epoch / DECAY_EVERY) as i32)
        } else {
            self.learning_rate
        }
    }
}

/// Optimizer state over a flat parameter vector.
#[derive(Debug, Clone)]
pub struct Optimizer {
    config: OptimizerConfig,
    first: Vec<f64>,
    second: Vec<f64>,
    steps: i32,
}

impl Optimizer {
    pub fn new(config: OptimizerConfig, num_params: usize) -> Self {
        let second = match config.kind {
            OptimizerKind::Adam => vec![0.0; num_params],
            OptimizerKind::Sgd => Vec::new(),
        };
        Self {
            config,
            first: vec![0.0; num_params],
            second,
            steps: 0,
        }
    }

    /// One update of the parameters inside `ranges`; everything else is frozen.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64], ranges: &[Range<usize>], lr: f64) {
        self.steps += 1;
        let cfg = &self.config;
        match cfg.kind {
            OptimizerKind::Sgd => {
                for range in ranges {
                    for i in range.clone() {
                        let g = grad[i] + cfg.weight_decay * params[i];
                        let v = cfg.momentum * self.first[i] + g;
                        self.first[i] = v;
                        let d = if cfg.nesterov { g + cfg.momentum * v } else { v };
                        params[i] -= lr * d;
                    }
                }
            }
            OptimizerKind::Adam => {
                let c1 = 1.0 - BETA1.powi(self.steps);
                let c2 = 1.0 - BETA2.powi(self.steps);
                for range in ranges {
                    for i in range.clone() {
                        let g = grad[i];
                        params[i] -= lr * cfg.weight_decay * params[i];
                        self.first[i] = BETA1 * self.first[i] + (1.0 - BETA1) * g;
                        self.second[i] = BETA2 * self.second[i] + (1.0 - BETA2) * g * g;
                        let m_hat = self.first[i] / c1;
                        let v_hat = self.second[i] / c2;
                        params[i] -= lr * m_hat / (v_hat.sqrt() + EPS);
                    }
                }
            }
        }
    }
}
