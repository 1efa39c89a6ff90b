//! Training losses. Every function returns the batch-mean loss together with
//! its gradient with respect to the probabilities it was given; the network
//! engine chains that through softmax / sigmoid.
//!
//! All logarithms are taken of `max(p, 1e-12)`; inside the clamped region the
//! gradient is zero.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{HeadGrads, HeadKind, HeadOutputs, HeadSpec, LossEval, Matrix, Objective, ParamGroup};

pub const PROB_FLOOR: f64 = 1e-12;

#[inline]
fn clamped_ln(p: f64) -> (f64, bool) {
    if p >= PROB_FLOOR {
        (p.ln(), true)
    } else {
        (PROB_FLOOR.ln(), false)
    }
}

/// Loss value plus gradient with respect to one probability matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub grad: Matrix,
}

fn check_batch(probs: &Matrix, y: &[usize], min_cols: usize) -> Result<()> {
    if probs.rows() != y.len() {
        return Err(Error::Shape(format!("{} probability rows, {} labels", probs.rows(), y.len())));
    }
    if probs.rows() == 0 {
        return Err(Error::Empty("loss batch"));
    }
    if probs.cols() < min_cols {
        return Err(Error::Shape(format!("need at least {min_cols} probability columns, got {}", probs.cols())));
    }
    if let Some(&bad) = y.iter().find(|&&l| l >= probs.cols()) {
        return Err(Error::InvalidInput(format!("label {bad} out of range")));
    }
    Ok(())
}

/// Mean cross-entropy `-ln s_y`.
pub fn loss_ce(probs: &Matrix, y: &[usize]) -> Result<LossValue> {
    check_batch(probs, y, 1)?;
    let n = y.len() as f64;
    let mut grad = Matrix::zeros(probs.rows(), probs.cols());
    let mut value = 0.0;
    for (i, &label) in y.iter().enumerate() {
        let p = probs.get(i, label);
        let (ln, live) = clamped_ln(p);
        value -= ln;
        if live {
            grad.set(i, label, -1.0 / (n * p));
        }
    }
    Ok(LossValue { value: value / n, grad })
}

/// Deep Gamblers: mean `-ln(s_y + s_{m+1} / o)` over `m+1` probability columns.
pub fn loss_dg(probs: &Matrix, y: &[usize], reward: f64) -> Result<LossValue> {
    if !(reward > 1.0) {
        return Err(Error::InvalidHyperparameter(format!("reward o must exceed 1, got {reward}")));
    }
    check_batch(probs, y, 2)?;
    let abstain = probs.cols() - 1;
    if y.contains(&abstain) {
        return Err(Error::InvalidInput("label points at the abstention column".into()));
    }
    let n = y.len() as f64;
    let mut grad = Matrix::zeros(probs.rows(), probs.cols());
    let mut value = 0.0;
    for (i, &label) in y.iter().enumerate() {
        let q = probs.get(i, label) + probs.get(i, abstain) / reward;
        let (ln, live) = clamped_ln(q);
        value -= ln;
        if live {
            grad.set(i, label, -1.0 / (n * q));
            grad.set(i, abstain, -1.0 / (n * reward * q));
        }
    }
    Ok(LossValue { value: value / n, grad })
}

/// Per-instance soft targets of self-adaptive training.
#[derive(Debug, Clone, PartialEq)]
pub struct SatState {
    /// `n x m` rows, each a probability vector.
    pub targets: Matrix,
}

impl SatState {
    /// One-hot rows for the labels.
    pub fn new(y: &[usize], classes: usize) -> Self {
        let mut targets = Matrix::zeros(y.len(), classes);
        for (i, &l) in y.iter().enumerate() {
            targets.set(i, l, 1.0);
        }
        Self { targets }
    }
}

/// Moves the targets of `rows` towards the model's class distribution:
/// `t <- gamma * t + (1 - gamma) * s`, starting at epoch `warmup`. `probs` may
/// carry an abstention column; the first `m` entries are renormalized so the
/// targets stay probability vectors.
pub fn sat_update_targets(state: &mut SatState, rows: &[usize], probs: &Matrix, gamma: f64, epoch: usize, warmup: usize) {
    if epoch < warmup {
        return;
    }
    let m = state.targets.cols();
    for (b, &row) in rows.iter().enumerate() {
        let s = &probs.row(b)[..m];
        let mass: f64 = s.iter().sum();
        let t = state.targets.row_mut(row);
        for (tj, &sj) in t.iter_mut().zip(s) {
            let sj = if mass > 0.0 { sj / mass } else { 1.0 / m as f64 };
            *tj = gamma * *tj + (1.0 - gamma) * sj;
        }
    }
}

/// Self-adaptive training loss over `m+1` columns:
/// mean `-(sum_j t_j ln s_j + (1 - t_y) ln s_{m+1})`. `targets` holds the
/// batch's target rows (`n x m`).
pub fn loss_sat(probs: &Matrix, targets: &Matrix, y: &[usize]) -> Result<LossValue> {
    check_batch(probs, y, 2)?;
    let m = probs.cols() - 1;
    if targets.cols() != m || targets.rows() != y.len() {
        return Err(Error::Shape("target rows must be n x m".into()));
    }
    let n = y.len() as f64;
    let mut grad = Matrix::zeros(probs.rows(), probs.cols());
    let mut value = 0.0;
    for (i, &label) in y.iter().enumerate() {
        let t = targets.row(i);
        for j in 0..m {
            if t[j] == 0.0 {
                continue;
            }
            let p = probs.get(i, j);
            let (ln, live) = clamped_ln(p);
            value -= t[j] * ln;
            if live {
                grad.set(i, j, -t[j] / (n * p));
            }
        }
        let w = 1.0 - t[label];
        if w != 0.0 {
            let p = probs.get(i, m);
            let (ln, live) = clamped_ln(p);
            value -= w * ln;
            if live {
                grad.set(i, m, -w / (n * p));
            }
        }
    }
    Ok(LossValue { value: value / n, grad })
}

/// Mean entropy `-sum_j s_j ln s_j` over the first `classes` columns; other
/// columns get zero gradient. `0 ln 0 = 0`.
pub fn entropy_term(probs: &Matrix, classes: usize) -> Result<LossValue> {
    if probs.rows() == 0 {
        return Err(Error::Empty("entropy batch"));
    }
    if classes > probs.cols() {
        return Err(Error::Shape("more classes than columns".into()));
    }
    let n = probs.rows() as f64;
    let mut grad = Matrix::zeros(probs.rows(), probs.cols());
    let mut value = 0.0;
    for i in 0..probs.rows() {
        for j in 0..classes {
            let p = probs.get(i, j);
            let (ln, live) = clamped_ln(p);
            value -= p * ln;
            grad.set(i, j, -(if live { ln + 1.0 } else { ln }) / n);
        }
    }
    Ok(LossValue { value: value / n, grad })
}

/// SelectiveNet loss and its three gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct SelNetLoss {
    pub value: f64,
    pub grad_predictive: Matrix,
    pub grad_selective: Vec<f64>,
    pub grad_auxiliary: Matrix,
}

/// `alpha * (sum_i ce(s_i) k_i / sum_i k_i + lambda * max(0, c - mean k)^2)
///  + (1 - alpha) * mean ce(v_i)`.
pub fn loss_selnet(
    s_probs: &Matrix,
    k: &[f64],
    v_probs: &Matrix,
    y: &[usize],
    coverage: f64,
    alpha: f64,
    lambda: f64,
) -> Result<SelNetLoss> {
    check_batch(s_probs, y, 1)?;
    check_batch(v_probs, y, 1)?;
    if k.len() != y.len() {
        return Err(Error::Shape("selection vector length".into()));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidHyperparameter(format!("alpha {alpha} outside [0, 1]")));
    }
    let n = y.len() as f64;
    let k_sum: f64 = k.iter().sum();
    if !(k_sum > 0.0) {
        return Err(Error::DegenerateSelection);
    }
    let ce = loss_ce(s_probs, y)?;
    // per-row cross-entropy (undo the batch mean)
    let ce_rows: Vec<f64> = y.iter().enumerate().map(|(i, &l)| -clamped_ln(s_probs.get(i, l)).0).collect();
    let selective_risk = ce_rows.iter().zip(k).map(|(c, kv)| c * kv).sum::<f64>() / k_sum;
    let shortfall = (coverage - k_sum / n).max(0.0);
    let aux = loss_ce(v_probs, y)?;
    let value = alpha * (selective_risk + lambda * shortfall * shortfall) + (1.0 - alpha) * aux.value;

    let mut grad_predictive = ce.grad;
    for (i, row) in (0..y.len()).zip(k) {
        // loss_ce scaled each row by 1/n; reweight to alpha * k_i / sum k
        let scale = alpha * row * n / k_sum;
        grad_predictive.row_mut(i).iter_mut().for_each(|g| *g *= scale);
    }
    let grad_selective = ce_rows
        .iter()
        .map(|c| alpha * ((c - selective_risk) / k_sum - 2.0 * lambda * shortfall / n))
        .collect();
    let mut grad_auxiliary = aux.grad;
    grad_auxiliary.values_mut().iter_mut().for_each(|g| *g *= 1.0 - alpha);
    let _ = ce.value;
    Ok(SelNetLoss {
        value,
        grad_predictive,
        grad_selective,
        grad_auxiliary,
    })
}

/// SelectiveNet loss plus `beta` times the predictive head's entropy.
#[allow(clippy::too_many_arguments)]
pub fn loss_selnet_em(
    s_probs: &Matrix,
    k: &[f64],
    v_probs: &Matrix,
    y: &[usize],
    coverage: f64,
    alpha: f64,
    lambda: f64,
    beta: f64,
) -> Result<SelNetLoss> {
    let mut out = loss_selnet(s_probs, k, v_probs, y, coverage, alpha, lambda)?;
    if beta != 0.0 {
        let ent = entropy_term(s_probs, s_probs.cols())?;
        out.value += beta * ent.value;
        for (g, e) in out.grad_predictive.values_mut().iter_mut().zip(ent.grad.values()) {
            *g += beta * e;
        }
    }
    Ok(out)
}

/// Mean squared error between a sigmoid score and fixed targets, with the
/// gradient with respect to the score. Used by ConfidNet (targets `s_y`) and
/// REG (targets: 0-1 loss of the frozen classifier).
pub fn loss_score_mse(score: &[f64], targets: &[f64]) -> Result<(f64, Vec<f64>)> {
    if score.len() != targets.len() {
        return Err(Error::Shape("score and target lengths differ".into()));
    }
    if score.is_empty() {
        return Err(Error::Empty("mse batch"));
    }
    let n = score.len() as f64;
    let value = score.iter().zip(targets).map(|(s, t)| (s - t) * (s - t)).sum::<f64>() / n;
    let grad = score.iter().zip(targets).map(|(s, t)| 2.0 * (s - t) / n).collect();
    Ok((value, grad))
}

#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Pairwise ranking surrogate: mean over `pairs (a, b)` of
/// `w_a * ln(1 + exp(f_b - f_a))`, where `w` is the classifier's 0-1 loss.
pub fn loss_sele(f: &[f64], weights: &[f64], pairs: &[(usize, usize)]) -> Result<(f64, Vec<f64>)> {
    if f.len() < 2 {
        return Err(Error::TooSmall { needed: 2, found: f.len() });
    }
    if f.len() != weights.len() {
        return Err(Error::Shape("score and weight lengths differ".into()));
    }
    if pairs.is_empty() {
        return Err(Error::Empty("pair list"));
    }
    let p = pairs.len() as f64;
    let mut grad = vec![0.0; f.len()];
    let mut value = 0.0;
    for &(a, b) in pairs {
        let w = weights[a];
        if w == 0.0 {
            continue;
        }
        let diff = f[b] - f[a];
        value += w * softplus(diff);
        let sig = crate::nn::sigmoid(diff);
        grad[b] += w * sig / p;
        grad[a] -= w * sig / p;
    }
    Ok((value / p, grad))
}

/// Loss of a predictive network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossSpec {
    CrossEntropy,
    /// Deep Gamblers with abstention reward `o > 1`.
    DeepGamblers { reward: f64 },
    /// Self-adaptive training; targets adapt from epoch `warmup` on.
    Sat { gamma: f64, warmup: usize },
    /// Self-adaptive training plus `beta` times the mean entropy.
    SatEm { gamma: f64, warmup: usize, beta: f64 },
    /// SelectiveNet trained for `coverage`.
    SelNet { coverage: f64, alpha: f64, lambda: f64 },
    SelNetEm { coverage: f64, alpha: f64, lambda: f64, beta: f64 },
}

impl LossSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidHyperparameter(msg));
        match *self {
            LossSpec::CrossEntropy => Ok(()),
            LossSpec::DeepGamblers { reward } if !(reward > 1.0) => bad(format!("reward {reward} must exceed 1")),
            LossSpec::Sat { gamma, .. } | LossSpec::SatEm { gamma, .. } if !(0.9..=0.99).contains(&gamma) => {
                bad(format!("gamma {gamma} outside [0.9, 0.99]"))
            }
            LossSpec::SatEm { beta, .. } | LossSpec::SelNetEm { beta, .. } if !(beta >= 0.0) => {
                bad(format!("beta {beta} must be >= 0"))
            }
            LossSpec::SelNet { coverage, alpha, lambda } | LossSpec::SelNetEm { coverage, alpha, lambda, .. } => {
                if !(coverage > 0.0 && coverage <= 1.0) {
                    bad(format!("target coverage {coverage} outside (0, 1]"))
                } else if !(alpha > 0.0 && alpha < 1.0) {
                    bad(format!("alpha {alpha} outside (0, 1)"))
                } else if !(lambda > 0.0) {
                    bad(format!("lambda {lambda} must be > 0"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Whether the predictive head carries an extra abstention logit.
    pub fn has_abstain_column(&self) -> bool {
        matches!(self, LossSpec::DeepGamblers { .. } | LossSpec::Sat { .. } | LossSpec::SatEm { .. })
    }

    pub fn is_selnet(&self) -> bool {
        matches!(self, LossSpec::SelNet { .. } | LossSpec::SelNetEm { .. })
    }

    /// Predictive head width plus any extra heads this loss trains.
    pub fn heads(&self, classes: usize) -> (HeadSpec, Option<HeadSpec>, Option<HeadSpec>) {
        let width = if self.has_abstain_column() { classes + 1 } else { classes };
        if self.is_selnet() {
            (HeadSpec::linear(width), Some(HeadSpec::linear(1)), Some(HeadSpec::linear(classes)))
        } else {
            (HeadSpec::linear(width), None, None)
        }
    }
}

/// [`Objective`] for a predictive network trained with a [`LossSpec`].
#[derive(Debug, Clone)]
pub struct PredictiveObjective {
    spec: LossSpec,
    sat: Option<SatState>,
}

impl PredictiveObjective {
    /// `y` and `classes` describe the full training set (SAT keeps one target
    /// row per training instance).
    pub fn new(spec: LossSpec, y: &[usize], classes: usize) -> Result<Self> {
        spec.validate()?;
        let sat = matches!(spec, LossSpec::Sat { .. } | LossSpec::SatEm { .. }).then(|| SatState::new(y, classes));
        Ok(Self { spec, sat })
    }

    pub fn sat_state(&self) -> Option<&SatState> {
        self.sat.as_ref()
    }
}

impl Objective for PredictiveObjective {
    fn prepare_batch(&mut self, epoch: usize, rows: &[usize], out: &HeadOutputs, _rng: &mut ChaCha8Rng) {
        if let (Some(state), LossSpec::Sat { gamma, warmup } | LossSpec::SatEm { gamma, warmup, .. }) =
            (self.sat.as_mut(), &self.spec)
        {
            sat_update_targets(state, rows, &out.predictive, *gamma, epoch, *warmup);
        }
    }

    fn loss(&self, rows: &[usize], labels: &[usize], out: &HeadOutputs) -> Result<LossEval> {
        let predictive_only = |lv: LossValue| LossEval {
            value: lv.value,
            grads: HeadGrads {
                predictive: Some(lv.grad),
                ..HeadGrads::default()
            },
        };
        match &self.spec {
            LossSpec::CrossEntropy => Ok(predictive_only(loss_ce(&out.predictive, labels)?)),
            LossSpec::DeepGamblers { reward } => Ok(predictive_only(loss_dg(&out.predictive, labels, *reward)?)),
            LossSpec::Sat { .. } | LossSpec::SatEm { .. } => {
                let state = self.sat.as_ref().expect("sat state");
                let targets = state.targets.select_rows(rows);
                let mut lv = loss_sat(&out.predictive, &targets, labels)?;
                if let LossSpec::SatEm { beta, .. } = self.spec {
                    let ent = entropy_term(&out.predictive, targets.cols())?;
                    lv.value += beta * ent.value;
                    for (g, e) in lv.grad.values_mut().iter_mut().zip(ent.grad.values()) {
                        *g += beta * e;
                    }
                }
                Ok(predictive_only(lv))
            }
            LossSpec::SelNet { coverage, alpha, lambda } | LossSpec::SelNetEm { coverage, alpha, lambda, .. } => {
                let beta = match self.spec {
                    LossSpec::SelNetEm { beta, .. } => beta,
                    _ => 0.0,
                };
                let k = out.selective.as_ref().ok_or_else(|| Error::Shape("selective head missing".into()))?;
                let v = out.auxiliary.as_ref().ok_or_else(|| Error::Shape("auxiliary head missing".into()))?;
                let l = loss_selnet_em(&out.predictive, k, v, labels, *coverage, *alpha, *lambda, beta)?;
                Ok(LossEval {
                    value: l.value,
                    grads: HeadGrads {
                        predictive: Some(l.grad_predictive),
                        selective: Some(l.grad_selective),
                        auxiliary: Some(l.grad_auxiliary),
                        uncertainty: None,
                    },
                })
            }
        }
    }
}

/// How an uncertainty head is fitted.
#[derive(Debug, Clone, PartialEq)]
pub enum UncertaintyLoss {
    /// Squared error against per-instance targets.
    Mse { targets: Vec<f64> },
    /// Pairwise surrogate with per-instance 0-1 loss weights; `pair_budget`
    /// ordered pairs are sampled per batch.
    Pairwise { weights: Vec<f64>, pair_budget: usize },
}

/// [`Objective`] for the uncertainty head of ConfidNet / REG / SELE.
#[derive(Debug, Clone)]
pub struct UncertaintyObjective {
    loss: UncertaintyLoss,
    trainable: Vec<ParamGroup>,
    /// Batch-local pairs drawn by the last `prepare_batch`.
    pairs: Vec<(usize, usize)>,
}

impl UncertaintyObjective {
    /// `train_body = false` freezes everything but the uncertainty head.
    pub fn new(loss: UncertaintyLoss, train_body: bool) -> Self {
        let mut trainable = vec![ParamGroup::Head(HeadKind::Uncertainty)];
        if train_body {
            trainable.push(ParamGroup::Body);
        }
        Self {
            loss,
            trainable,
            pairs: Vec::new(),
        }
    }
}

impl Objective for UncertaintyObjective {
    fn prepare_batch(&mut self, _epoch: usize, rows: &[usize], _out: &HeadOutputs, rng: &mut ChaCha8Rng) {
        if let UncertaintyLoss::Pairwise { pair_budget, .. } = self.loss {
            self.pairs.clear();
            let n = rows.len();
            if n < 2 {
                return;
            }
            for _ in 0..pair_budget.max(1) {
                let a = rng.random_range(0..n);
                let mut b = rng.random_range(0..n - 1);
                if b >= a {
                    b += 1;
                }
                self.pairs.push((a, b));
            }
        }
    }

    fn loss(&self, rows: &[usize], _labels: &[usize], out: &HeadOutputs) -> Result<LossEval> {
        let f = out
            .uncertainty
            .as_ref()
            .ok_or_else(|| Error::Shape("uncertainty head missing".into()))?;
        let (value, grad) = match &self.loss {
            UncertaintyLoss::Mse { targets } => {
                let t: Vec<f64> = rows.iter().map(|&r| targets[r]).collect();
                loss_score_mse(f, &t)?
            }
            UncertaintyLoss::Pairwise { weights, .. } => {
                if self.pairs.is_empty() {
                    // single-row batch: nothing to rank
                    (0.0, vec![0.0; f.len()])
                } else {
                    let w: Vec<f64> = rows.iter().map(|&r| weights[r]).collect();
                    loss_sele(f, &w, &self.pairs)?
                }
            }
        };
        Ok(LossEval {
            value,
            grads: HeadGrads {
                uncertainty: Some(grad),
                ..HeadGrads::default()
            },
        })
    }

    fn trainable(&self) -> Vec<ParamGroup> {
        self.trainable.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn dg_examples() {
        assert_eq!(loss_dg(&m(&[&[1.0, 0.0, 0.0]]), &[0], 2.0).unwrap().value, 0.0);
        let v = loss_dg(&m(&[&[0.0, 0.5, 0.5]]), &[1], 2.0).unwrap().value;
        assert!((v - (-(0.75f64).ln())).abs() < 1e-12);
        assert!((v - 0.28768).abs() < 1e-5);
        // huge reward: the abstention entry no longer helps
        let probs = m(&[&[0.2, 0.5, 0.3]]);
        let dg = loss_dg(&probs, &[1], 1e12).unwrap().value;
        assert!((dg - (-(0.5f64).ln())).abs() < 1e-9);
        assert!(matches!(loss_dg(&probs, &[1], 1.0), Err(Error::InvalidHyperparameter(_))));
    }

    #[test]
    fn sat_update_examples() {
        let mut st = SatState::new(&[1], 2);
        let s = m(&[&[0.3, 0.7]]);
        sat_update_targets(&mut st, &[0], &s, 0.9, 3, 5);
        assert_eq!(st.targets.row(0), &[0.0, 1.0]);
        sat_update_targets(&mut st, &[0], &s, 0.9, 5, 5);
        assert!((st.targets.get(0, 0) - 0.03).abs() < 1e-12);
        assert!((st.targets.get(0, 1) - 0.97).abs() < 1e-12);
        // abstention column is dropped and the rest renormalized
        let mut st = SatState::new(&[0], 2);
        sat_update_targets(&mut st, &[0], &m(&[&[0.3, 0.3, 0.4]]), 0.9, 0, 0);
        assert!((st.targets.row(0).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((st.targets.get(0, 0) - 0.95).abs() < 1e-12);
    }

    #[test]
    fn gamma_out_of_range_rejected() {
        assert!(LossSpec::Sat { gamma: 1.0, warmup: 0 }.validate().is_err());
        assert!(LossSpec::Sat { gamma: 0.95, warmup: 0 }.validate().is_ok());
    }

    #[test]
    fn sat_loss_examples() {
        let t = m(&[&[1.0, 0.0]]);
        assert_eq!(loss_sat(&m(&[&[1.0, 0.0, 0.0]]), &t, &[0]).unwrap().value, 0.0);
        let t = m(&[&[0.0, 1.0]]);
        let v = loss_sat(&m(&[&[0.2, 0.7, 0.1]]), &t, &[1]).unwrap().value;
        assert!((v - 0.35667).abs() < 1e-5);
        // t_y = 0.5 puts weight 0.5 on ln s_{m+1}
        let t = m(&[&[0.5, 0.5]]);
        let probs = m(&[&[0.25, 0.25, 0.5]]);
        let v = loss_sat(&probs, &t, &[1]).unwrap().value;
        let class_part = -(0.5 * 0.25f64.ln() * 2.0);
        assert!((v - class_part - 0.34657).abs() < 1e-5);
    }

    #[test]
    fn entropy_examples() {
        let v = entropy_term(&m(&[&[0.25; 4]]), 4).unwrap().value;
        assert!((v - 4f64.ln()).abs() < 1e-12);
        assert_eq!(entropy_term(&m(&[&[0.0, 1.0]]), 2).unwrap().value, 0.0);
        assert!((entropy_term(&m(&[&[0.5, 0.5]]), 2).unwrap().value - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn selnet_examples() {
        let s = m(&[&[0.8, 0.2], &[0.4, 0.6]]);
        let v = m(&[&[0.5, 0.5], &[0.5, 0.5]]);
        let y = [0, 1];
        let ce = loss_ce(&s, &y).unwrap().value;
        let full = loss_selnet(&s, &[1.0, 1.0], &v, &y, 0.7, 1.0, 32.0).unwrap();
        assert!((full.value - ce).abs() < 1e-12);

        // mean k = 0.65 under c = 0.7 => penalty 32 * 0.05^2 = 0.08
        let k = [0.6, 0.7];
        let a = loss_selnet(&s, &k, &v, &y, 0.7, 1.0, 32.0).unwrap();
        let b = loss_selnet(&s, &k, &v, &y, 0.6, 1.0, 32.0).unwrap();
        assert!((a.value - b.value - 0.08).abs() < 1e-12);

        // alpha = 1 ignores the auxiliary head
        let other_v = m(&[&[0.9, 0.1], &[0.9, 0.1]]);
        let c = loss_selnet(&s, &k, &other_v, &y, 0.7, 1.0, 32.0).unwrap();
        assert_eq!(a.value, c.value);
        assert!(c.grad_auxiliary.values().iter().all(|&g| g == 0.0));

        assert!(matches!(
            loss_selnet(&s, &[0.0, 0.0], &v, &y, 0.7, 0.5, 32.0),
            Err(Error::DegenerateSelection)
        ));
    }

    #[test]
    fn selnet_em_examples() {
        let s = m(&[&[0.5, 0.5]]);
        let v = m(&[&[0.3, 0.7]]);
        let base = loss_selnet(&s, &[0.9], &v, &[0], 0.8, 0.5, 16.0).unwrap();
        let zero = loss_selnet_em(&s, &[0.9], &v, &[0], 0.8, 0.5, 16.0, 0.0).unwrap();
        assert_eq!(base, zero);
        let em = loss_selnet_em(&s, &[0.9], &v, &[0], 0.8, 0.5, 16.0, 0.1).unwrap();
        assert!((em.value - base.value - 0.06931).abs() < 1e-5);
    }

    #[test]
    fn mse_and_pairwise_examples() {
        assert_eq!(loss_score_mse(&[0.6], &[0.6]).unwrap().0, 0.0);
        assert!((loss_score_mse(&[0.8], &[0.6]).unwrap().0 - 0.04).abs() < 1e-12);
        // REG: misclassified (loss 1) with f = 0.3
        assert!((loss_score_mse(&[0.3], &[1.0]).unwrap().0 - 0.49).abs() < 1e-12);
        assert_eq!(loss_score_mse(&[0.0], &[0.0]).unwrap().0, 0.0);

        assert_eq!(loss_sele(&[0.1, 0.9], &[0.0, 1.0], &[(0, 1)]).unwrap().0, 0.0);
        assert!((loss_sele(&[0.4, 0.4], &[1.0, 1.0], &[(0, 1)]).unwrap().0 - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((loss_sele(&[0.0, 2.0], &[1.0, 0.0], &[(0, 1)]).unwrap().0 - 2.12693).abs() < 1e-5);
        assert!(matches!(loss_sele(&[0.0], &[1.0], &[(0, 0)]), Err(Error::TooSmall { .. })));
    }
}
