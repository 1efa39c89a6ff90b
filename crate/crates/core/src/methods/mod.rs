//! The selective-classification baselines: training losses, confidence
//! functions, fitting recipes and the fitted [`SelectiveModel`].

mod band;
mod confidence;
mod crossfit;
mod fit;
mod gradsuite;
mod loss;
mod model;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub use band::{auc_band, Band};
pub use confidence::{abstain_confidence, ens_confidence, ensemble_mean, sr_confidence, EnsMode};
pub use crossfit::{aucross_fit, cross_fit, fold_assignment, scross_fit, CrossFit};
pub use fit::{
    confidnet_fit, ens_fit, fit_predictive, half_classifier, half_split, reg_fit, reg_uncertainty, sele_fit,
    sele_uncertainty, uncertainty_head, EnsembleSpec, Fitted, NetConfig,
};
pub use gradsuite::{gradient_suite, GradCase, GRADIENT_CASES};
pub use loss::{
    entropy_term, loss_ce, loss_dg, loss_sat, loss_score_mse, loss_sele, loss_selnet, loss_selnet_em,
    sat_update_targets, LossSpec, LossValue, PredictiveObjective, SatState, SelNetLoss, UncertaintyLoss,
    UncertaintyObjective, PROB_FLOOR,
};
pub use model::{
    aucross_from, pluginauc_fit, scross_from, selective_predict, ConfidenceKind, ModelMeta, Outcome, Predictor,
    Scored, Selection, SelectiveModel,
};

/// The eighteen method identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MethodId {
    Dg,
    Sat,
    SatEm,
    Selnet,
    SelnetEm,
    Sr,
    SatSr,
    SatEmSr,
    SelnetSr,
    SelnetEmSr,
    Ens,
    EnsSr,
    Confidnet,
    Reg,
    Sele,
    Scross,
    Pluginauc,
    Aucross,
}

impl MethodId {
    pub const ALL: [MethodId; 18] = [
        MethodId::Dg,
        MethodId::Sat,
        MethodId::SatEm,
        MethodId::Selnet,
        MethodId::SelnetEm,
        MethodId::Sr,
        MethodId::SatSr,
        MethodId::SatEmSr,
        MethodId::SelnetSr,
        MethodId::SelnetEmSr,
        MethodId::Ens,
        MethodId::EnsSr,
        MethodId::Confidnet,
        MethodId::Reg,
        MethodId::Sele,
        MethodId::Scross,
        MethodId::Pluginauc,
        MethodId::Aucross,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodId::Dg => "dg",
            MethodId::Sat => "sat",
            MethodId::SatEm => "sat_em",
            MethodId::Selnet => "selnet",
            MethodId::SelnetEm => "selnet_em",
            MethodId::Sr => "sr",
            MethodId::SatSr => "sat_sr",
            MethodId::SatEmSr => "sat_em_sr",
            MethodId::SelnetSr => "selnet_sr",
            MethodId::SelnetEmSr => "selnet_em_sr",
            MethodId::Ens => "ens",
            MethodId::EnsSr => "ens_sr",
            MethodId::Confidnet => "confidnet",
            MethodId::Reg => "reg",
            MethodId::Sele => "sele",
            MethodId::Scross => "scross",
            MethodId::Pluginauc => "pluginauc",
            MethodId::Aucross => "aucross",
        }
    }

    /// Band-based methods; binary tasks only and incompatible with SGR.
    pub fn is_band(self) -> bool {
        matches!(self, MethodId::Pluginauc | MethodId::Aucross)
    }

    /// SelectiveNet variants train for a specific coverage.
    pub fn trains_per_coverage(self) -> bool {
        matches!(
            self,
            MethodId::Selnet | MethodId::SelnetEm | MethodId::SelnetSr | MethodId::SelnetEmSr
        )
    }

    /// Cross-fitting methods calibrate on their own out-of-fold scores and
    /// train on train + calibration.
    pub fn is_cross_fit(self) -> bool {
        matches!(self, MethodId::Scross | MethodId::Aucross)
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        MethodId::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown method id {s:?}")))
    }
}

impl TryFrom<String> for MethodId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self, Error> {
        s.parse()
    }
}

impl From<MethodId> for String {
    fn from(m: MethodId) -> String {
        m.as_str().to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for m in MethodId::ALL {
            assert_eq!(m.as_str().parse::<MethodId>().unwrap(), m);
        }
        assert!("softmax".parse::<MethodId>().is_err());
        assert_eq!(MethodId::ALL.iter().filter(|m| !m.is_band()).count(), 16);
    }
}
