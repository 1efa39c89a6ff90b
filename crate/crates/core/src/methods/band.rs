//! Rejection bands over the minority-class score (PlugInAUC / AUCross).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Abstain iff `lower < score < upper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lower: f64,
    pub upper: f64,
}

impl Band {
    #[inline]
    pub fn rejects(&self, score: f64) -> bool {
        self.lower < score && score < self.upper
    }
}

/// Band holding calibration mass `1 - c`, placed so that the minority class
/// loses the same share `1 - c` of its calibration rows as the majority. The
/// band is a contiguous window of the sorted scores; among windows whose
/// minority count is closest to `(1 - c) n_min`, the one nearest the position
/// leaving `c (1 - p)` of the rows below it wins, `p` being the calibration
/// minority share.
pub fn auc_band(scores: &[f64], labels: &[usize], minority: usize, coverage: f64) -> Result<Band> {
    if scores.is_empty() {
        return Err(Error::Empty("calibration scores"));
    }
    if labels.len() != scores.len() {
        return Err(Error::Shape(format!("{} scores, {} labels", scores.len(), labels.len())));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidInput("NaN score".into()));
    }
    if !(coverage > 0.0 && coverage <= 1.0) {
        return Err(Error::InvalidHyperparameter(format!("coverage {coverage} outside (0, 1]")));
    }
    let n = scores.len();
    let nf = n as f64;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let is_min: Vec<usize> = order.iter().map(|&i| usize::from(labels[i] == minority)).collect();
    let n_min = is_min.iter().sum::<usize>();
    let prior = n_min as f64 / nf;
    let rejected = ((1.0 - coverage) * nf + 1e-9).floor() as usize;
    if rejected == 0 {
        let q = scores[order[(((1.0 - prior) * nf) as usize).min(n - 1)]];
        return Ok(Band { lower: q, upper: q });
    }
    let target = (1.0 - coverage) * n_min as f64;
    let anchor = ((coverage * (1.0 - prior) * nf + 1e-9).floor() as usize).min(n - rejected);
    let mut count = is_min[..rejected].iter().sum::<usize>();
    let mut best = (f64::INFINITY, usize::MAX, 0);
    for below in 0..=n - rejected {
        if below > 0 {
            count = count + is_min[below + rejected - 1] - is_min[below - 1];
        }
        let key = ((count as f64 - target).abs(), below.abs_diff(anchor));
        if key < (best.0, best.1) {
            best = (key.0, key.1, below);
        }
    }
    let below = best.2;
    let lower = if below == 0 { f64::NEG_INFINITY } else { scores[order[below - 1]] };
    let upper = order.get(below + rejected).map_or(f64::INFINITY, |&i| scores[i]);
    Ok(Band { lower, upper })
}
