//! Training recipes for the predictive and uncertainty networks.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::loss::{LossSpec, PredictiveObjective, UncertaintyLoss, UncertaintyObjective};
use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::nn::{train, Activation, HeadKind, HeadSpec, HeadedNet, MlpSpec, OptimizerConfig, TrainConfig};
use crate::seed::{derive_seed, rng};

/// Architecture and optimization settings of one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub optimizer: OptimizerConfig,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64, 32],
            activation: Activation::Relu,
            optimizer: OptimizerConfig::default(),
            epochs: 300,
            batch_size: 128,
        }
    }
}

impl NetConfig {
    fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed,
        }
    }
}

/// Uncertainty head shared by ConfidNet, REG and SELE: three hidden layers
/// and a sigmoid output.
pub fn uncertainty_head() -> HeadSpec {
    HeadSpec {
        hidden: vec![64, 32, 16],
        outputs: 1,
    }
}

#[derive(Debug, Clone)]
pub struct Fitted {
    pub net: HeadedNet,
    pub loss_history: Vec<f64>,
}

/// Trains a predictive net (plus selective / auxiliary heads for SelectiveNet
/// losses) on `data`.
pub fn fit_predictive(data: &LabeledDataset, loss: &LossSpec, cfg: &NetConfig, seed: u64) -> Result<Fitted> {
    loss.validate()?;
    let (predictive, selective, auxiliary) = loss.heads(data.classes);
    let spec = MlpSpec {
        input_dim: data.dim(),
        hidden_widths: cfg.hidden.clone(),
        activation: cfg.activation,
        predictive,
        selective,
        auxiliary,
        uncertainty: None,
    };
    let net = HeadedNet::new(spec, derive_seed(seed, &["init"]))?;
    let mut objective = PredictiveObjective::new(loss.clone(), &data.y, data.classes)?;
    let report = train(
        net,
        &data.x,
        &data.y,
        &mut objective,
        &cfg.optimizer,
        &cfg.train_config(derive_seed(seed, &["order"])),
    )?;
    Ok(Fitted {
        net: report.net,
        loss_history: report.loss_history,
    })
}

/// Member count and seeds of a deep ensemble.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub seeds: Vec<u64>,
}

impl EnsembleSpec {
    /// `members` seeds derived from `seed`.
    pub fn new(members: usize, seed: u64) -> Result<Self> {
        let spec = Self {
            seeds: (0..members).map(|j| derive_seed(seed, &["member", &j.to_string()])).collect(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.len() < 2 {
            return Err(Error::InvalidHyperparameter(format!(
                "ensemble needs at least 2 members, got {}",
                self.seeds.len()
            )));
        }
        Ok(())
    }
}

/// Cross-entropy members trained from their own seeds.
pub fn ens_fit(data: &LabeledDataset, spec: &EnsembleSpec, cfg: &NetConfig) -> Result<Vec<HeadedNet>> {
    spec.validate()?;
    spec.seeds
        .iter()
        .enumerate()
        .map(|(member, &s)| {
            fit_predictive(data, &LossSpec::CrossEntropy, cfg, s)
                .map(|f| f.net)
                .map_err(|e| Error::Member {
                    member,
                    source: Box::new(e),
                })
        })
        .collect()
}

/// Adds an uncertainty head to a trained classifier and fits it, with the
/// body frozen, to the probability the classifier gives the true class.
pub fn confidnet_fit(base: &HeadedNet, data: &LabeledDataset, cfg: &NetConfig, seed: u64) -> Result<HeadedNet> {
    let net = base.with_head(HeadKind::Uncertainty, uncertainty_head(), derive_seed(seed, &["confidnet-init"]))?;
    let probs = base.forward(&data.x)?.predictive;
    let targets: Vec<f64> = data.y.iter().enumerate().map(|(i, &l)| probs.get(i, l)).collect();
    let mut objective = UncertaintyObjective::new(UncertaintyLoss::Mse { targets }, false);
    let report = train(
        net,
        &data.x,
        &data.y,
        &mut objective,
        &cfg.optimizer,
        &cfg.train_config(derive_seed(seed, &["confidnet-order"])),
    )?;
    Ok(report.net)
}

/// Random halves `(A, B)` of `data`; `A` gets the extra row when `n` is odd.
pub fn half_split(data: &LabeledDataset, seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
    if data.len() < 2 {
        return Err(Error::TooSmall {
            needed: 2,
            found: data.len(),
        });
    }
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.shuffle(&mut rng(derive_seed(seed, &["half"])));
    let cut = data.len().div_ceil(2);
    Ok((data.subset(&idx[..cut]), data.subset(&idx[cut..])))
}

/// Classifier for REG / SELE trained on half A, returned with half B.
pub fn half_classifier(data: &LabeledDataset, cfg: &NetConfig, seed: u64) -> Result<(HeadedNet, LabeledDataset)> {
    let (a, b) = half_split(data, seed)?;
    let fitted = fit_predictive(&a, &LossSpec::CrossEntropy, cfg, derive_seed(seed, &["half-a"]))?;
    Ok((fitted.net, b))
}

fn zero_one_losses(classifier: &HeadedNet, data: &LabeledDataset) -> Result<Vec<f64>> {
    let pred = classifier.forward(&data.x)?.predictive.argmax_rows();
    Ok(pred.iter().zip(&data.y).map(|(p, y)| f64::from(u8::from(p != y))).collect())
}

/// Uncertainty net warm-started from the classifier body, trained on `data`
/// (body and uncertainty head) under `loss`.
fn fit_uncertainty(
    classifier: &HeadedNet,
    data: &LabeledDataset,
    loss: UncertaintyLoss,
    cfg: &NetConfig,
    seed: u64,
) -> Result<HeadedNet> {
    let net = classifier.with_head(HeadKind::Uncertainty, uncertainty_head(), derive_seed(seed, &["unc-init"]))?;
    let mut objective = UncertaintyObjective::new(loss, true);
    let report = train(
        net,
        &data.x,
        &data.y,
        &mut objective,
        &cfg.optimizer,
        &cfg.train_config(derive_seed(seed, &["unc-order"])),
    )?;
    Ok(report.net)
}

/// REG: regress the classifier's 0-1 loss on `half_b`.
pub fn reg_uncertainty(classifier: &HeadedNet, half_b: &LabeledDataset, cfg: &NetConfig, seed: u64) -> Result<HeadedNet> {
    let targets = zero_one_losses(classifier, half_b)?;
    fit_uncertainty(classifier, half_b, UncertaintyLoss::Mse { targets }, cfg, seed)
}

/// SELE: pairwise ranking loss on `half_b`; `pair_budget` pairs per batch
/// (default: the batch size).
pub fn sele_uncertainty(
    classifier: &HeadedNet,
    half_b: &LabeledDataset,
    pair_budget: Option<usize>,
    cfg: &NetConfig,
    seed: u64,
) -> Result<HeadedNet> {
    if half_b.len() < 2 {
        return Err(Error::TooSmall {
            needed: 2,
            found: half_b.len(),
        });
    }
    let weights = zero_one_losses(classifier, half_b)?;
    let loss = UncertaintyLoss::Pairwise {
        weights,
        pair_budget: pair_budget.unwrap_or(cfg.batch_size),
    };
    fit_uncertainty(classifier, half_b, loss, cfg, seed)
}

/// Classifier on half A, REG uncertainty net on half B.
pub fn reg_fit(data: &LabeledDataset, cfg: &NetConfig, unc: &NetConfig, seed: u64) -> Result<(HeadedNet, HeadedNet)> {
    let (classifier, b) = half_classifier(data, cfg, seed)?;
    let u = reg_uncertainty(&classifier, &b, unc, seed)?;
    Ok((classifier, u))
}

/// Classifier on half A, SELE uncertainty net on half B.
pub fn sele_fit(
    data: &LabeledDataset,
    pair_budget: Option<usize>,
    cfg: &NetConfig,
    unc: &NetConfig,
    seed: u64,
) -> Result<(HeadedNet, HeadedNet)> {
    let (classifier, b) = half_classifier(data, cfg, seed)?;
    let u = sele_uncertainty(&classifier, &b, pair_budget, unc, seed)?;
    Ok((classifier, u))
}
