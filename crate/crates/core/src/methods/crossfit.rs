//! K-fold cross-fitting: out-of-fold probabilities over a pool plus a final
//! model trained on the whole pool.

use rand::seq::SliceRandom;

use super::fit::{fit_predictive, NetConfig};
use super::loss::LossSpec;
use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::nn::{HeadedNet, Matrix};
use crate::seed::{derive_seed, rng};

#[derive(Debug, Clone)]
pub struct CrossFit {
    /// Out-of-fold softmax rows, aligned with the pool.
    pub oof_probs: Matrix,
    /// Fold of every pool row.
    pub folds: Vec<usize>,
    /// Classifier trained on the full pool.
    pub net: HeadedNet,
}

/// Shuffled round-robin fold labels; fold sizes differ by at most one.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng(derive_seed(seed, &["folds"])));
    let mut folds = vec![0; n];
    for (pos, &i) in idx.iter().enumerate() {
        folds[i] = pos % k;
    }
    folds
}

pub fn cross_fit(pool: &LabeledDataset, k: usize, cfg: &NetConfig, seed: u64) -> Result<CrossFit> {
    if k < 2 {
        return Err(Error::InvalidHyperparameter(format!("cross-fitting needs K >= 2, got {k}")));
    }
    if pool.len() < k {
        return Err(Error::TooSmall {
            needed: k,
            found: pool.len(),
        });
    }
    let folds = fold_assignment(pool.len(), k, seed);
    let mut oof = Matrix::zeros(pool.len(), pool.classes);
    for f in 0..k {
        let (held, rest): (Vec<usize>, Vec<usize>) = (0..pool.len()).partition(|&i| folds[i] == f);
        let fitted = fit_predictive(
            &pool.subset(&rest),
            &LossSpec::CrossEntropy,
            cfg,
            derive_seed(seed, &["fold", &f.to_string()]),
        )?;
        let probs = fitted.net.forward(&pool.x.select_rows(&held))?.predictive;
        for (r, &i) in held.iter().enumerate() {
            oof.row_mut(i).copy_from_slice(probs.row(r));
        }
    }
    let net = fit_predictive(pool, &LossSpec::CrossEntropy, cfg, derive_seed(seed, &["final"]))?.net;
    Ok(CrossFit {
        oof_probs: oof,
        folds,
        net,
    })
}

/// SCross with `k` folds at target coverage `coverage`.
pub fn scross_fit(pool: &LabeledDataset, k: usize, coverage: f64, cfg: &NetConfig, seed: u64) -> Result<super::SelectiveModel> {
    let cf = cross_fit(pool, k, cfg, seed)?;
    super::scross_from(&cf, pool, coverage, seed)
}

/// AUCross with `k` folds at target coverage `coverage`.
pub fn aucross_fit(pool: &LabeledDataset, k: usize, coverage: f64, cfg: &NetConfig, seed: u64) -> Result<super::SelectiveModel> {
    if pool.classes != 2 {
        return Err(Error::UnsupportedTask(format!("AUCross needs a binary task, got {} classes", pool.classes)));
    }
    let cf = cross_fit(pool, k, cfg, seed)?;
    super::aucross_from(&cf, pool, coverage, seed)
}
