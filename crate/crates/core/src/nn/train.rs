use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::net::{HeadKind, HeadOutputs, HeadedNet, ParamGroup};
use super::optim::{Optimizer, OptimizerConfig};
use super::Matrix;
use crate::error::{Error, Result};
use crate::seed;

/// Gradient of a loss with respect to head probabilities. `None` means the
/// loss does not depend on that head.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HeadGrads {
    pub predictive: Option<Matrix>,
    pub selective: Option<Vec<f64>>,
    pub auxiliary: Option<Matrix>,
    pub uncertainty: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossEval {
    pub value: f64,
    pub grads: HeadGrads,
}

/// A training objective over mini-batches.
pub trait Objective {
    /// Called once per batch, before [`Objective::loss`], with the outputs of
    /// the current parameters. Stateful objectives (adaptive targets, sampled
    /// pairs) update themselves here. `rows` index the training set.
    fn prepare_batch(&mut self, _epoch: usize, _rows: &[usize], _out: &HeadOutputs, _rng: &mut ChaCha8Rng) {}

    /// Loss value and gradients for the batch. Must be a pure function of its
    /// arguments and the state left by the last `prepare_batch`.
    fn loss(&self, rows: &[usize], labels: &[usize], out: &HeadOutputs) -> Result<LossEval>;

    /// Parameter groups the optimizer may update.
    fn trainable(&self) -> Vec<ParamGroup> {
        let mut groups = vec![ParamGroup::Body];
        groups.extend(HeadKind::ALL.map(ParamGroup::Head));
        groups
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            batch_size: 128,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub net: HeadedNet,
    /// Mean training loss of every epoch.
    pub loss_history: Vec<f64>,
}

/// Mini-batch training. Rows are reshuffled every epoch from `cfg.seed`; the
/// last partial batch is kept.
pub fn train(
    net: HeadedNet,
    x: &Matrix,
    y: &[usize],
    objective: &mut dyn Objective,
    opt: &OptimizerConfig,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    if cfg.epochs == 0 || cfg.batch_size == 0 {
        return Err(Error::InvalidHyperparameter("epochs and batch size must be >= 1".into()));
    }
    if x.rows() != y.len() {
        return Err(Error::Shape(format!("{} rows but {} labels", x.rows(), y.len())));
    }
    if x.rows() == 0 {
        return Err(Error::Empty("training set"));
    }
    opt.validate()?;
    let classes = net.predictive_outputs();
    if let Some(&bad) = y.iter().find(|&&l| l >= classes) {
        return Err(Error::InvalidInput(format!("label {bad} outside [0, {classes})")));
    }

    let mut net = net;
    let ranges: Vec<_> = objective
        .trainable()
        .into_iter()
        .filter_map(|g| net.group_range(g))
        .collect();
    let mut optimizer = Optimizer::new(opt.clone(), net.num_params());
    let mut rng = seed::rng(cfg.seed);
    let mut order: Vec<usize> = (0..x.rows()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let lr = opt.lr_at(epoch);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let xb = x.select_rows(batch);
            let yb: Vec<usize> = batch.iter().map(|&i| y[i]).collect();
            let (out, cache) = net.forward_cached(&xb)?;
            objective.prepare_batch(epoch, batch, &out, &mut rng);
            let eval = objective.loss(batch, &yb, &out)?;
            if !eval.value.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            let grad = net.backward(&cache, &out, &eval.grads);
            optimizer.step(net.params_mut(), &grad, &ranges, lr);
            if net.params().iter().any(|p| !p.is_finite()) {
                return Err(Error::Diverged { epoch });
            }
            total += eval.value * batch.len() as f64;
        }
        history.push(total / x.rows() as f64);
    }
    Ok(TrainReport {
        net,
        loss_history: history,
    })
}
