//! Evaluation metrics for selective classifiers. Quantities that are
//! undefined on a given accepted set (no accepted rows, zero denominators)
//! are `None` rather than NaN.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances with a dedicated `consat_*` column.
pub const CONSAT_TOLERANCES: [f64; 5] = [0.0, 0.01, 0.02, 0.05, 0.10];

fn check_aligned(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!("vectors of length {a} and {b}")));
    }
    Ok(())
}

/// Fraction of accepted rows.
pub fn empirical_coverage(accept: &[bool]) -> Result<f64> {
    if accept.is_empty() {
        return Err(Error::Empty("test set"));
    }
    Ok(accept.iter().filter(|&&a| a).count() as f64 / accept.len() as f64)
}

/// Misclassification rate over accepted rows; `None` when nothing is accepted.
pub fn selective_error(pred: &[usize], labels: &[usize], accept: &[bool]) -> Result<Option<f64>> {
    check_aligned(pred.len(), labels.len())?;
    check_aligned(pred.len(), accept.len())?;
    let mut accepted = 0usize;
    let mut wrong = 0usize;
    for ((p, l), &a) in pred.iter().zip(labels).zip(accept) {
        if a {
            accepted += 1;
            wrong += usize::from(p != l);
        }
    }
    Ok((accepted > 0).then(|| wrong as f64 / accepted as f64))
}

/// Selective error of the constant predictor `majority` on the same accepted set.
pub fn majority_selective_error(majority: usize, labels: &[usize], accept: &[bool]) -> Result<Option<f64>> {
    check_aligned(labels.len(), accept.len())?;
    let mut accepted = 0usize;
    let mut wrong = 0usize;
    for (&l, &a) in labels.iter().zip(accept) {
        if a {
            accepted += 1;
            wrong += usize::from(l != majority);
        }
    }
    Ok((accepted > 0).then(|| wrong as f64 / accepted as f64))
}

/// `err / err_maj`; `None` when `err_maj` is zero.
pub fn rel_err(err: f64, err_maj: f64) -> Option<f64> {
    (err_maj > 0.0).then(|| err / err_maj)
}

/// 1 iff `coverage >= c - eps` (no epsilon-coverage violation).
pub fn con_sat(coverage: f64, c: f64, eps: f64) -> bool {
    // slack absorbs representation error in c - eps (0.7 - 0.02 etc.)
    coverage >= c - eps - 1e-12
}

/// Minority share among accepted labels divided by the prior `p`; `None`
/// when nothing is accepted.
pub fn min_coeff(accepted_labels: &[usize], minority: usize, prior: f64) -> Result<Option<f64>> {
    if !(prior > 0.0 && prior < 1.0) {
        return Err(Error::InvalidInput(format!("minority prior {prior} outside (0, 1)")));
    }
    if accepted_labels.is_empty() {
        return Ok(None);
    }
    let share = accepted_labels.iter().filter(|&&l| l == minority).count() as f64 / accepted_labels.len() as f64;
    Ok(Some(share / prior))
}

/// `r_hat / r`.
pub fn err_coeff(r_hat: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!("target risk {r} must be > 0")));
    }
    Ok(r_hat / r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskCoveragePoint {
    pub coverage: f64,
    pub error: f64,
}

/// One point per distinct confidence, accepting everything at or above it,
/// in order of increasing coverage.
pub fn risk_coverage_curve(conf: &[f64], correct: &[bool]) -> Result<Vec<RiskCoveragePoint>> {
    check_aligned(conf.len(), correct.len())?;
    if conf.is_empty() {
        return Err(Error::Empty("risk-coverage input"));
    }
    if conf.iter().any(|c| c.is_nan()) {
        return Err(Error::InvalidInput("NaN confidence".into()));
    }
    let n = conf.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| conf[b].total_cmp(&conf[a]));
    let mut points = Vec::new();
    let mut wrong = 0usize;
    for (pos, &row) in order.iter().enumerate() {
        wrong += usize::from(!correct[row]);
        if pos + 1 == n || conf[order[pos + 1]] != conf[row] {
            let accepted = pos + 1;
            points.push(RiskCoveragePoint {
                coverage: accepted as f64 / n as f64,
                error: wrong as f64 / accepted as f64,
            });
        }
    }
    Ok(points)
}

/// One evaluated (method, dataset, target, bootstrap) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub method: String,
    pub dataset: String,
    /// Target coverage (bounded-abstention and OOD modes).
    pub c: Option<f64>,
    pub err: Option<f64>,
    pub coverage: Option<f64>,
    pub rel_err: Option<f64>,
    /// Aligned with [`CONSAT_TOLERANCES`].
    pub consat: [Option<bool>; 5],
    pub min_coeff: Option<f64>,
    pub err_coeff: Option<f64>,
    pub seed: u64,
    /// `None` for the un-resampled test set.
    pub bootstrap: Option<usize>,
    /// SGR target risk.
    pub target_risk: Option<f64>,
    pub failure: Option<String>,
}

/// Column order of [`EvalRecord::csv_row`].
pub const RECORD_COLUMNS: [&str; 17] = [
    "method",
    "dataset",
    "c",
    "err",
    "coverage",
    "rel_err",
    "consat_000",
    "consat_001",
    "consat_002",
    "consat_005",
    "consat_010",
    "min_coeff",
    "err_coeff",
    "seed",
    "bootstrap",
    "target_risk",
    "failure",
];

pub const NA: &str = "NA";

/// Shortest round-trip formatting, `NA` for undefined.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), |x| format!("{x}"))
}

/// Parses a field written by [`fmt_opt`].
pub fn parse_opt(s: &str) -> Result<Option<f64>> {
    if s == NA || s.is_empty() {
        return Ok(None);
    }
    s.parse::<f64>()
        .map(Some)
        .map_err(|e| Error::InvalidInput(format!("bad number {s:?}: {e}")))
}

/// Which metrics a cell computes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalContext {
    pub c: Option<f64>,
    pub majority: usize,
    /// Minority class of a binary task. Its prior is the minority share of
    /// the evaluated labels, so a selection that rejects both classes at the
    /// same rate scores exactly 1 on every resample.
    pub minority: Option<usize>,
    pub target_risk: Option<f64>,
}

impl EvalRecord {
    /// A row that records a failed cell.
    pub fn failure(method: &str, dataset: &str, c: Option<f64>, target_risk: Option<f64>, seed: u64, reason: String) -> Self {
        Self {
            method: method.to_string(),
            dataset: dataset.to_string(),
            c,
            err: None,
            coverage: None,
            rel_err: None,
            consat: [None; 5],
            min_coeff: None,
            err_coeff: None,
            seed,
            bootstrap: None,
            target_risk,
            failure: Some(reason),
        }
    }

    /// Computes every metric for one labelled evaluation set.
    pub fn evaluate(
        method: &str,
        dataset: &str,
        ctx: &EvalContext,
        pred: &[usize],
        labels: &[usize],
        accept: &[bool],
        seed: u64,
        bootstrap: Option<usize>,
    ) -> Result<Self> {
        let coverage = empirical_coverage(accept)?;
        let err = selective_error(pred, labels, accept)?;
        let err_maj = majority_selective_error(ctx.majority, labels, accept)?;
        let rel = match (err, err_maj) {
            (Some(e), Some(m)) => rel_err(e, m),
            _ => None,
        };
        let consat = match ctx.c {
            Some(c) => CONSAT_TOLERANCES.map(|eps| Some(con_sat(coverage, c, eps))),
            None => [None; 5],
        };
        let min_coeff = match ctx.minority {
            Some(minority) => {
                let prior = labels.iter().filter(|&&l| l == minority).count() as f64 / labels.len() as f64;
                let accepted: Vec<usize> = labels.iter().zip(accept).filter(|(_, &a)| a).map(|(&l, _)| l).collect();
                if prior > 0.0 && prior < 1.0 {
                    min_coeff(&accepted, minority, prior)?
                } else {
                    None
                }
            }
            None => None,
        };
        let err_coeff = match (ctx.target_risk, err) {
            (Some(r), Some(e)) => Some(err_coeff(e, r)?),
            _ => None,
        };
        Ok(Self {
            method: method.to_string(),
            dataset: dataset.to_string(),
            c: ctx.c,
            err,
            coverage: Some(coverage),
            rel_err: rel,
            consat,
            min_coeff,
            err_coeff,
            seed,
            bootstrap,
            target_risk: ctx.target_risk,
            failure: None,
        })
    }

    /// Coverage-only row for unlabelled (out-of-distribution) data.
    pub fn coverage_only(method: &str, dataset: &str, c: f64, accept: &[bool], seed: u64) -> Result<Self> {
        let coverage = empirical_coverage(accept)?;
        Ok(Self {
            method: method.to_string(),
            dataset: dataset.to_string(),
            c: Some(c),
            err: None,
            coverage: Some(coverage),
            rel_err: None,
            consat: [None; 5],
            min_coeff: None,
            err_coeff: None,
            seed,
            bootstrap: None,
            target_risk: None,
            failure: None,
        })
    }

    /// Fields in [`RECORD_COLUMNS`] order.
    pub fn csv_row(&self) -> Vec<String> {
        let flag = |b: Option<bool>| b.map_or_else(|| NA.to_string(), |v| u8::from(v).to_string());
        let mut row = vec![
            self.method.clone(),
            self.dataset.clone(),
            fmt_opt(self.c),
            fmt_opt(self.err),
            fmt_opt(self.coverage),
            fmt_opt(self.rel_err),
        ];
        row.extend(self.consat.iter().map(|&b| flag(b)));
        row.extend([
            fmt_opt(self.min_coeff),
            fmt_opt(self.err_coeff),
            self.seed.to_string(),
            self.bootstrap.map_or_else(|| NA.to_string(), |b| b.to_string()),
            fmt_opt(self.target_risk),
            self.failure.clone().unwrap_or_else(|| NA.to_string()),
        ]);
        row
    }

    /// Inverse of [`EvalRecord::csv_row`].
    pub fn from_csv_row(fields: &[&str]) -> Result<Self> {
        if fields.len() != RECORD_COLUMNS.len() {
            return Err(Error::InvalidInput(format!(
                "record has {} fields, expected {}",
                fields.len(),
                RECORD_COLUMNS.len()
            )));
        }
        let flag = |s: &str| -> Result<Option<bool>> {
            match s {
                "0" => Ok(Some(false)),
                "1" => Ok(Some(true)),
                "NA" => Ok(None),
                other => Err(Error::InvalidInput(format!("bad flag {other:?}"))),
            }
        };
        let mut consat = [None; 5];
        for (i, slot) in consat.iter_mut().enumerate() {
            *slot = flag(fields[6 + i])?;
        }
        let opt_string = |s: &str| (s != NA).then(|| s.to_string());
        Ok(Self {
            method: fields[0].to_string(),
            dataset: fields[1].to_string(),
            c: parse_opt(fields[2])?,
            err: parse_opt(fields[3])?,
            coverage: parse_opt(fields[4])?,
            rel_err: parse_opt(fields[5])?,
            consat,
            min_coeff: parse_opt(fields[11])?,
            err_coeff: parse_opt(fields[12])?,
            seed: fields[13]
                .parse()
                .map_err(|e| Error::InvalidInput(format!("bad seed: {e}")))?,
            bootstrap: match fields[14] {
                "NA" => None,
                s => Some(s.parse().map_err(|e| Error::InvalidInput(format!("bad bootstrap index: {e}")))?),
            },
            target_risk: parse_opt(fields[15])?,
            failure: opt_string(fields[16]),
        })
    }
}
