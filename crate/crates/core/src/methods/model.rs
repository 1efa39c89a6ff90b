//! Fitted selective classifiers `(h, g)`.

use serde::{Deserialize, Serialize};

use super::band::{auc_band, Band};
use super::confidence::{abstain_confidence, ens_confidence, ensemble_mean, sr_confidence, EnsMode};
use super::crossfit::CrossFit;
use super::MethodId;
use crate::calibrate::{percentile_threshold, Threshold};
use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::nn::{argmax, HeadKind, HeadedNet, Matrix};

/// Networks behind a selective model.
#[derive(Debug, Clone)]
pub enum Predictor {
    Single(HeadedNet),
    Ensemble(Vec<HeadedNet>),
    /// Classifier plus a separately trained uncertainty net.
    Split { classifier: HeadedNet, uncertainty: HeadedNet },
}

impl Predictor {
    /// Hex parameter hashes of every network, in a fixed order.
    pub fn param_hashes(&self) -> Vec<String> {
        match self {
            Predictor::Single(n) => vec![n.param_hash()],
            Predictor::Ensemble(ms) => ms.iter().map(HeadedNet::param_hash).collect(),
            Predictor::Split { classifier, uncertainty } => vec![classifier.param_hash(), uncertainty.param_hash()],
        }
    }

    fn classifier(&self) -> Option<&HeadedNet> {
        match self {
            Predictor::Single(n) | Predictor::Split { classifier: n, .. } => Some(n),
            Predictor::Ensemble(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConfidenceKind {
    Sr,
    AbstainComplement,
    SelectiveHead,
    EnsEntropy,
    EnsAvgSr,
    ConfidNet,
    UncertaintyComplement,
    /// Minority-class score with a rejection band.
    AucBand { minority: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Selection {
    Threshold(Threshold),
    Band(Band),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Predict(usize),
    Abstain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub method: MethodId,
    /// Target coverage of the calibration (and of training, for SelectiveNet).
    pub coverage: Option<f64>,
    pub seed: u64,
}

/// Class predictions and the per-row score the selection acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub predictions: Vec<usize>,
    /// Confidence for threshold kinds, minority-class score for bands.
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SelectiveModel {
    predictor: Predictor,
    kind: ConfidenceKind,
    classes: usize,
    selection: Option<Selection>,
    pub meta: ModelMeta,
}

impl SelectiveModel {
    /// Checks that the predictor provides what `kind` reads.
    pub fn new(predictor: Predictor, kind: ConfidenceKind, classes: usize, meta: ModelMeta) -> Result<Self> {
        let bad = |msg: &str| Err(Error::InvalidInput(format!("{kind:?}: {msg}")));
        match (&predictor, kind) {
            (Predictor::Ensemble(ms), _) if ms.is_empty() => return Err(Error::Empty("ensemble")),
            (Predictor::Ensemble(_), ConfidenceKind::EnsEntropy | ConfidenceKind::EnsAvgSr | ConfidenceKind::Sr) => {}
            (Predictor::Ensemble(_), ConfidenceKind::AucBand { .. }) => {}
            (Predictor::Ensemble(_), _) | (_, ConfidenceKind::EnsEntropy | ConfidenceKind::EnsAvgSr) => {
                return bad("needs exactly the ensemble predictor")
            }
            (Predictor::Split { .. }, ConfidenceKind::UncertaintyComplement | ConfidenceKind::Sr) => {}
            (Predictor::Split { .. }, _) | (_, ConfidenceKind::UncertaintyComplement) => {
                return bad("needs a classifier / uncertainty pair")
            }
            (Predictor::Single(n), ConfidenceKind::AbstainComplement) if n.predictive_outputs() != classes + 1 => {
                return bad("needs an abstention column")
            }
            (Predictor::Single(n), ConfidenceKind::SelectiveHead) if !n.has_head(HeadKind::Selective) => {
                return bad("needs a selective head")
            }
            (Predictor::Single(n), ConfidenceKind::ConfidNet) if !n.has_head(HeadKind::Uncertainty) => {
                return bad("needs an uncertainty head")
            }
            _ => {}
        }
        if let ConfidenceKind::AucBand { minority } = kind {
            if classes != 2 {
                return Err(Error::UnsupportedTask(format!("rejection bands need a binary task, got {classes} classes")));
            }
            if minority >= 2 {
                return bad("invalid minority class");
            }
        }
        Ok(Self {
            predictor,
            kind,
            classes,
            selection: None,
            meta,
        })
    }

    pub fn predictor(&self) -> &Predictor {
        &self.predictor
    }

    pub fn kind(&self) -> ConfidenceKind {
        self.kind
    }

    pub fn selection(&self) -> Option<&Selection> {
        self.selection.as_ref()
    }

    /// Same networks, different confidence function, uncalibrated.
    pub fn with_kind(&self, kind: ConfidenceKind, meta: ModelMeta) -> Result<Self> {
        Self::new(self.predictor.clone(), kind, self.classes, meta)
    }

    pub fn score(&self, x: &Matrix) -> Result<Scored> {
        let m = self.classes;
        let (probs, extra) = match &self.predictor {
            Predictor::Single(n) => {
                let out = n.forward(x)?;
                let extra = match self.kind {
                    ConfidenceKind::SelectiveHead => out.selective,
                    ConfidenceKind::ConfidNet => out.uncertainty,
                    _ => None,
                };
                (out.predictive, extra)
            }
            Predictor::Ensemble(members) => {
                let outs = members
                    .iter()
                    .map(|n| n.forward(x).map(|o| o.predictive))
                    .collect::<Result<Vec<_>>>()?;
                let scores = match self.kind {
                    ConfidenceKind::EnsEntropy => Some(ens_confidence(&outs, EnsMode::Entropy)?),
                    ConfidenceKind::EnsAvgSr => Some(ens_confidence(&outs, EnsMode::AvgSr)?),
                    _ => None,
                };
                (ensemble_mean(&outs)?, scores)
            }
            Predictor::Split { classifier, uncertainty } => {
                let probs = classifier.forward(x)?.predictive;
                let f = match self.kind {
                    ConfidenceKind::UncertaintyComplement => {
                        let f = uncertainty.forward(x)?.uncertainty.ok_or(Error::Empty("uncertainty head"))?;
                        Some(f.into_iter().map(|v| 1.0 - v).collect())
                    }
                    _ => None,
                };
                (probs, f)
            }
        };
        let predictions = probs.iter_rows().map(|r| argmax(&r[..m])).collect();
        let scores = match (self.kind, extra) {
            (ConfidenceKind::Sr, _) => sr_confidence(&probs, m)?,
            (ConfidenceKind::AbstainComplement, _) => abstain_confidence(&probs)?,
            (ConfidenceKind::AucBand { minority, .. }, _) => probs.column(minority),
            (_, Some(s)) => s,
            (kind, None) => return Err(Error::InvalidInput(format!("{kind:?} unavailable for this predictor"))),
        };
        Ok(Scored { predictions, scores })
    }

    /// Fits the threshold (or band) from calibration scores for coverage `c`.
    /// Labels are read by bands only.
    pub fn calibrate_scores(&mut self, scores: &[f64], labels: &[usize], coverage: f64) -> Result<()> {
        if labels.len() != scores.len() {
            return Err(Error::Shape(format!("{} scores, {} labels", scores.len(), labels.len())));
        }
        let selection = match self.kind {
            ConfidenceKind::AucBand { minority } => Selection::Band(auc_band(scores, labels, minority, coverage)?),
            _ => Selection::Threshold(percentile_threshold(scores, coverage)?),
        };
        self.selection = Some(selection);
        self.meta.coverage = Some(coverage);
        Ok(())
    }

    /// Calibrates on held-out inputs.
    pub fn calibrate(&mut self, x: &Matrix, y: &[usize], coverage: f64) -> Result<()> {
        let scored = self.score(x)?;
        self.calibrate_scores(&scored.scores, y, coverage)
    }

    /// Installs an externally computed selection (e.g. an SGR threshold).
    pub fn set_selection(&mut self, selection: Selection) -> Result<()> {
        let is_band = matches!(self.kind, ConfidenceKind::AucBand { .. });
        match (&selection, is_band) {
            (Selection::Band(b), true) if b.lower <= b.upper => {}
            (Selection::Threshold(_), false) => {}
            _ => return Err(Error::InvalidInput("selection does not match the confidence kind".into())),
        }
        self.selection = Some(selection);
        Ok(())
    }

    /// Acceptance flags for already-scored rows.
    pub fn accept(&self, scored: &Scored) -> Result<Vec<bool>> {
        match self.selection.as_ref().ok_or(Error::Uncalibrated)? {
            Selection::Threshold(t) => Ok(scored.scores.iter().map(|&k| t.accepts(k)).collect()),
            Selection::Band(b) => Ok(scored.scores.iter().map(|&s| !b.rejects(s)).collect()),
        }
    }

    /// The classifier used for `+SR` style reuse checks, if there is one.
    pub fn classifier(&self) -> Option<&HeadedNet> {
        self.predictor.classifier()
    }
}

/// Per-row prediction or abstention.
pub fn selective_predict(model: &SelectiveModel, x: &Matrix) -> Result<Vec<Outcome>> {
    let scored = model.score(x)?;
    let accept = model.accept(&scored)?;
    Ok(scored
        .predictions
        .iter()
        .zip(accept)
        .map(|(&p, a)| if a { Outcome::Predict(p) } else { Outcome::Abstain })
        .collect())
}

fn binary_kind(pool: &LabeledDataset) -> Result<ConfidenceKind> {
    if pool.classes != 2 {
        return Err(Error::UnsupportedTask(format!("rejection bands need a binary task, got {} classes", pool.classes)));
    }
    Ok(ConfidenceKind::AucBand {
        minority: pool.minority_class(),
    })
}

/// SCross: SR threshold from the stacked out-of-fold confidences.
pub fn scross_from(cf: &CrossFit, pool: &LabeledDataset, coverage: f64, seed: u64) -> Result<SelectiveModel> {
    let classes = pool.classes;
    let meta = ModelMeta {
        method: MethodId::Scross,
        coverage: Some(coverage),
        seed,
    };
    let mut model = SelectiveModel::new(Predictor::Single(cf.net.clone()), ConfidenceKind::Sr, classes, meta)?;
    let scores = sr_confidence(&cf.oof_probs, classes)?;
    model.calibrate_scores(&scores, &pool.y, coverage)?;
    Ok(model)
}

/// AUCross: band from the stacked out-of-fold minority scores.
pub fn aucross_from(cf: &CrossFit, pool: &LabeledDataset, coverage: f64, seed: u64) -> Result<SelectiveModel> {
    let kind = binary_kind(pool)?;
    let meta = ModelMeta {
        method: MethodId::Aucross,
        coverage: Some(coverage),
        seed,
    };
    let mut model = SelectiveModel::new(Predictor::Single(cf.net.clone()), kind, pool.classes, meta)?;
    let ConfidenceKind::AucBand { minority, .. } = kind else { unreachable!() };
    model.calibrate_scores(&cf.oof_probs.column(minority), &pool.y, coverage)?;
    Ok(model)
}

/// PlugInAUC: band fitted on held-out calibration scores of a trained scorer.
/// The minority class comes from `train`.
pub fn pluginauc_fit(
    net: &HeadedNet,
    train: &LabeledDataset,
    calibration: &LabeledDataset,
    coverage: f64,
    seed: u64,
) -> Result<SelectiveModel> {
    let kind = binary_kind(train)?;
    let meta = ModelMeta {
        method: MethodId::Pluginauc,
        coverage: Some(coverage),
        seed,
    };
    let mut model = SelectiveModel::new(Predictor::Single(net.clone()), kind, train.classes, meta)?;
    model.calibrate(&calibration.x, &calibration.y, coverage)?;
    Ok(model)
}
