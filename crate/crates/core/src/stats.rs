//! Bootstrap resampling and the Friedman / Nemenyi ranking pipeline.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng};

/// `b` resamples of `0..n` with replacement. Resample `i` depends only on
/// `(seed, i)`.
pub fn bootstrap_indices(n: usize, b: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if n == 0 {
        return Err(Error::Empty("bootstrap population"));
    }
    Ok((0..b)
        .map(|i| {
            let mut r = rng(derive_seed(seed, &["bootstrap", &i.to_string()]));
            (0..n).map(|_| r.random_range(0..n)).collect()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Population standard deviation (divisor = number of values).
    pub std: f64,
}

pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::Empty("values to summarize"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok(Summary { mean, std: var.sqrt() })
}

/// Ranks `1..=k`, lower value = better rank. Ties share the average of the
/// ranks they span; undefined values tie for the worst ranks.
pub fn rank_row(values: &[Option<f64>]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    let key = |i: usize| values[i].filter(|v| !v.is_nan());
    order.sort_by(|&a, &b| match (key(a), key(b)) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && key(order[end]) == key(order[start]) {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Friedman {
    pub mean_ranks: Vec<f64>,
    pub chi2: f64,
    /// Iman–Davenport F statistic; infinite when every trial ranks the
    /// methods identically.
    pub iman_davenport: f64,
    pub p_value: f64,
}

/// Friedman test on an `N x k` rank matrix. The p-value comes from the
/// Iman–Davenport statistic on `(k - 1, (k - 1)(N - 1))` degrees of freedom.
pub fn friedman(ranks: &[Vec<f64>]) -> Result<Friedman> {
    let n = ranks.len();
    if n < 2 {
        return Err(Error::TooSmall { needed: 2, found: n });
    }
    let k = ranks[0].len();
    if k < 2 {
        return Err(Error::TooSmall { needed: 2, found: k });
    }
    if ranks.iter().any(|r| r.len() != k) {
        return Err(Error::Shape("ragged rank matrix".into()));
    }
    let (nf, kf) = (n as f64, k as f64);
    let mean_ranks: Vec<f64> = (0..k).map(|j| ranks.iter().map(|r| r[j]).sum::<f64>() / nf).collect();
    let sum_sq: f64 = mean_ranks.iter().map(|r| r * r).sum();
    let chi2 = (12.0 * nf / (kf * (kf + 1.0)) * (sum_sq - kf * (kf + 1.0).powi(2) / 4.0)).max(0.0);
    let denom = nf * (kf - 1.0) - chi2;
    let (f, p) = if chi2 <= 0.0 {
        (0.0, 1.0)
    } else if denom <= 1e-12 * nf * kf {
        (f64::INFINITY, 0.0)
    } else {
        let f = (nf - 1.0) * chi2 / denom;
        let dist = FisherSnedecor::new(kf - 1.0, (kf - 1.0) * (nf - 1.0))
            .map_err(|e| Error::InvalidInput(format!("F distribution: {e}")))?;
        (f, dist.sf(f))
    };
    Ok(Friedman {
        mean_ranks,
        chi2,
        iman_davenport: f,
        p_value: p,
    })
}

/// Studentized range statistic divided by sqrt(2), k = 2..=20, alpha = 0.05.
const Q_05: [f64; 19] = [
    1.959964, 2.343701, 2.569032, 2.727774, 2.849705, 2.94832, 3.030878, 3.10173, 3.163684, 3.218654, 3.268004,
    3.312739, 3.353618, 3.39123, 3.426041, 3.458425, 3.488685, 3.517073, 3.543799,
];
/// As [`Q_05`] for alpha = 0.10.
const Q_10: [f64; 19] = [
    1.644854, 2.052293, 2.291341, 2.459516, 2.588521, 2.692732, 2.779884, 2.854606, 2.919889, 2.977768, 3.029694,
    3.076733, 3.119693, 3.159199, 3.195743, 3.229723, 3.261461, 3.291224, 3.319233,
];

/// Nemenyi critical difference `q_alpha * sqrt(k (k + 1) / (6 N))`.
/// Tabulated for `2 <= k <= 20` and alpha in {0.05, 0.10}.
pub fn nemenyi_cd(k: usize, n: usize, alpha: f64) -> Result<f64> {
    if !(2..=20).contains(&k) {
        return Err(Error::InvalidInput(format!("no critical value for k = {k} (tabulated 2..=20)")));
    }
    if n == 0 {
        return Err(Error::Empty("trials"));
    }
    let table = if (alpha - 0.05).abs() < 1e-12 {
        &Q_05
    } else if (alpha - 0.10).abs() < 1e-12 {
        &Q_10
    } else {
        return Err(Error::InvalidInput(format!("no critical values for alpha = {alpha}")));
    };
    let q = table[k - 2];
    Ok(q * ((k * (k + 1)) as f64 / (6.0 * n as f64)).sqrt())
}

/// Maximal runs of methods (by ascending mean rank) whose rank spread is at
/// most `cd`. Returned groups hold indices into `mean_ranks` and together
/// cover every method.
pub fn cd_groups(mean_ranks: &[f64], cd: f64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..mean_ranks.len()).collect();
    order.sort_by(|&a, &b| mean_ranks[a].total_cmp(&mean_ranks[b]).then(a.cmp(&b)));
    let mut groups = Vec::new();
    let mut last_end: Option<usize> = None;
    for i in 0..order.len() {
        let mut end = i;
        while end + 1 < order.len() && mean_ranks[order[end + 1]] - mean_ranks[order[i]] <= cd + 1e-12 {
            end += 1;
        }
        if last_end.is_none_or(|e| end > e) {
            groups.push(order[i..=end].to_vec());
            last_end = Some(end);
        }
    }
    groups
}

/// Friedman/Nemenyi summary of one ranking experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    pub methods: Vec<String>,
    pub trials: usize,
    pub mean_ranks: Vec<f64>,
    pub chi2: f64,
    pub iman_davenport: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub cd: f64,
    /// Groups of statistically indistinguishable methods.
    pub groups: Vec<Vec<String>>,
    #[serde(skip)]
    pub ranks: Vec<Vec<f64>>,
}

impl RankTable {
    /// Ranks each row of metric values (lower is better, `None` worst) and
    /// runs the Friedman and Nemenyi procedures.
    pub fn build(methods: &[String], rows: &[Vec<Option<f64>>], alpha: f64) -> Result<Self> {
        if rows.iter().any(|r| r.len() != methods.len()) {
            return Err(Error::Shape("row width differs from method count".into()));
        }
        let ranks: Vec<Vec<f64>> = rows.iter().map(|r| rank_row(r)).collect();
        let f = friedman(&ranks)?;
        let cd = nemenyi_cd(methods.len(), rows.len(), alpha)?;
        let groups = cd_groups(&f.mean_ranks, cd)
            .into_iter()
            .map(|g| g.into_iter().map(|i| methods[i].clone()).collect())
            .collect();
        Ok(Self {
            methods: methods.to_vec(),
            trials: rows.len(),
            mean_ranks: f.mean_ranks,
            chi2: f.chi2,
            iman_davenport: f.iman_davenport,
            p_value: f.p_value,
            alpha,
            cd,
            groups,
            ranks,
        })
    }
}
