//! Finite-difference checks of every training loss on small random nets.

use rand::Rng;
use rand_distr::StandardNormal;

use super::loss::{LossSpec, PredictiveObjective, UncertaintyLoss, UncertaintyObjective};
use crate::error::Result;
use crate::nn::{grad_check, Activation, HeadKind, HeadSpec, HeadedNet, Matrix, MlpSpec, Objective};
use crate::seed::{derive_seed, rng};

/// Loss names covered by [`gradient_suite`].
pub const GRADIENT_CASES: [&str; 9] = ["ce", "dg", "sat", "sat_em", "selnet", "selnet_em", "confidnet", "reg", "sele"];

/// Worst relative error of one loss over all its random nets.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCase {
    pub loss: &'static str,
    pub nets: usize,
    pub worst: f64,
}

const CLASSES: usize = 3;
const DIM: usize = 4;
const BATCH: usize = 7;
const STEP: f64 = 1e-5;

fn random_batch(seed: u64) -> (Matrix, Vec<usize>) {
    let mut r = rng(seed);
    let values = (0..BATCH * DIM).map(|_| r.sample(StandardNormal)).collect();
    let y = (0..BATCH).map(|i| (i + r.random_range(0..CLASSES)) % CLASSES).collect();
    (Matrix::from_vec(BATCH, DIM, values).expect("finite"), y)
}

/// The production uncertainty head is deeper; the loss gradients do not depend
/// on its widths, and small heads keep the differences well above roundoff.
fn small_head() -> HeadSpec {
    HeadSpec {
        hidden: vec![6],
        outputs: 1,
    }
}

fn predictive_net(loss: &LossSpec, seed: u64) -> Result<HeadedNet> {
    let (predictive, selective, auxiliary) = loss.heads(CLASSES);
    let spec = MlpSpec {
        input_dim: DIM,
        hidden_widths: vec![5],
        activation: Activation::Tanh,
        predictive,
        selective,
        auxiliary,
        uncertainty: None,
    };
    HeadedNet::new(spec, seed)
}

fn check_one(name: &'static str, seed: u64) -> Result<f64> {
    let (x, y) = random_batch(derive_seed(seed, &["batch"]));
    let mut r = rng(derive_seed(seed, &["aux"]));
    let predictive = |loss: LossSpec| -> Result<(HeadedNet, Box<dyn Objective>)> {
        let net = predictive_net(&loss, derive_seed(seed, &["net"]))?;
        Ok((net, Box::new(PredictiveObjective::new(loss, &y, CLASSES)?)))
    };
    let uncertain = |loss: UncertaintyLoss, train_body: bool| -> Result<(HeadedNet, Box<dyn Objective>)> {
        let base = predictive_net(&LossSpec::CrossEntropy, derive_seed(seed, &["net"]))?;
        let net = base.with_head(HeadKind::Uncertainty, small_head(), derive_seed(seed, &["head"]))?;
        Ok((net, Box::new(UncertaintyObjective::new(loss, train_body))))
    };
    let (net, mut objective) = match name {
        "ce" => predictive(LossSpec::CrossEntropy)?,
        "dg" => predictive(LossSpec::DeepGamblers { reward: 2.2 })?,
        "sat" => predictive(LossSpec::Sat { gamma: 0.9, warmup: 0 })?,
        "sat_em" => predictive(LossSpec::SatEm {
            gamma: 0.9,
            warmup: 0,
            beta: 0.1,
        })?,
        "selnet" => predictive(LossSpec::SelNet {
            coverage: 0.7,
            alpha: 0.5,
            lambda: 32.0,
        })?,
        "selnet_em" => predictive(LossSpec::SelNetEm {
            coverage: 0.9,
            alpha: 0.5,
            lambda: 32.0,
            beta: 0.1,
        })?,
        "confidnet" => {
            let targets = (0..BATCH).map(|_| r.random::<f64>()).collect();
            uncertain(UncertaintyLoss::Mse { targets }, false)?
        }
        "reg" => {
            let targets = (0..BATCH).map(|i| f64::from(u8::from(i % 3 == 0))).collect();
            uncertain(UncertaintyLoss::Mse { targets }, true)?
        }
        "sele" => {
            let weights = (0..BATCH).map(|i| f64::from(u8::from(i % 2 == 0))).collect();
            uncertain(UncertaintyLoss::Pairwise { weights, pair_budget: 12 }, true)?
        }
        other => unreachable!("unknown gradient case {other}"),
    };
    // epoch 1 with warmup 0 makes the SAT targets soft before differencing
    grad_check(objective.as_mut(), &net, &x, &y, 1, STEP)
}

/// Runs every case on `nets` random networks each.
pub fn gradient_suite(nets: usize, seed: u64) -> Result<Vec<GradCase>> {
    GRADIENT_CASES
        .iter()
        .map(|&name| {
            let mut worst = 0.0f64;
            for i in 0..nets {
                worst = worst.max(check_one(name, derive_seed(seed, &[name, &i.to_string()]))?);
            }
            Ok(GradCase { loss: name, nets, worst })
        })
        .collect()
}
