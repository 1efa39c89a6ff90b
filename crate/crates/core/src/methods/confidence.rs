//! Confidence scores computed from head outputs. Higher means more likely
//! correct.

use crate::error::{Error, Result};
use crate::nn::Matrix;

/// Maximum of the first `classes` probabilities in each row. For nets with
/// an abstention column the extra entry is ignored (no renormalization).
pub fn sr_confidence(probs: &Matrix, classes: usize) -> Result<Vec<f64>> {
    if classes == 0 || classes > probs.cols() {
        return Err(Error::Shape(format!("{classes} classes over {} columns", probs.cols())));
    }
    Ok(probs
        .iter_rows()
        .map(|r| r[..classes].iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect())
}

/// `1 - s_abstain`, the last column being the abstention probability.
pub fn abstain_confidence(probs: &Matrix) -> Result<Vec<f64>> {
    if probs.cols() < 2 {
        return Err(Error::Shape("abstention confidence needs m + 1 >= 2 columns".into()));
    }
    let last = probs.cols() - 1;
    Ok(probs.iter_rows().map(|r| 1.0 - r[last]).collect())
}

/// Row-wise mean of the members' probability matrices.
pub fn ensemble_mean(members: &[Matrix]) -> Result<Matrix> {
    let first = members.first().ok_or(Error::Empty("ensemble"))?;
    if members.iter().any(|m| m.rows() != first.rows() || m.cols() != first.cols()) {
        return Err(Error::Shape("ensemble members disagree in shape".into()));
    }
    let mut mean = Matrix::zeros(first.rows(), first.cols());
    for m in members {
        for (a, b) in mean.values_mut().iter_mut().zip(m.values()) {
            *a += b;
        }
    }
    let j = members.len() as f64;
    mean.values_mut().iter_mut().for_each(|v| *v /= j);
    Ok(mean)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsMode {
    /// `1 - H(mean probs) / ln m`.
    Entropy,
    /// Mean over members of each member's maximum probability.
    AvgSr,
}

pub fn ens_confidence(members: &[Matrix], mode: EnsMode) -> Result<Vec<f64>> {
    let mean = ensemble_mean(members)?;
    let m = mean.cols();
    if m < 2 {
        return Err(Error::Shape("ensemble confidence needs at least two classes".into()));
    }
    match mode {
        EnsMode::Entropy => {
            let ln_m = (m as f64).ln();
            Ok(mean
                .iter_rows()
                .map(|r| {
                    let h: f64 = r.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum();
                    (1.0 - h / ln_m).clamp(0.0, 1.0)
                })
                .collect())
        }
        EnsMode::AvgSr => {
            let mut acc = vec![0.0; mean.rows()];
            for member in members {
                for (a, k) in acc.iter_mut().zip(sr_confidence(member, m)?) {
                    *a += k;
                }
            }
            let j = members.len() as f64;
            Ok(acc.into_iter().map(|a| a / j).collect())
        }
    }
}
