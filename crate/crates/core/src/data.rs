//! Datasets: CSV ingestion, deterministic splits, standardization and
//! synthetic generators.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Matrix;
use crate::seed;

/// Feature matrix with integer class labels in `[0, classes)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub name: String,
    pub x: Matrix,
    pub y: Vec<usize>,
    pub classes: usize,
    /// Share of the least frequent class; binary tasks only.
    pub minority_prior: Option<f64>,
}

impl LabeledDataset {
    pub fn new(name: impl Into<String>, x: Matrix, y: Vec<usize>, classes: usize) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::Shape(format!("{} rows but {} labels", x.rows(), y.len())));
        }
        if let Some(&bad) = y.iter().find(|&&l| l >= classes) {
            return Err(Error::InvalidInput(format!("label {bad} outside [0, {classes})")));
        }
        let mut ds = Self {
            name: name.into(),
            x,
            y,
            classes,
            minority_prior: None,
        };
        if classes == 2 && !ds.y.is_empty() {
            let counts = ds.class_counts();
            ds.minority_prior = Some(counts[ds.minority_class()] as f64 / ds.len() as f64);
        }
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes];
        for &l in &self.y {
            counts[l] += 1;
        }
        counts
    }

    /// Least frequent class; ties go to the larger class id.
    pub fn minority_class(&self) -> usize {
        let counts = self.class_counts();
        (0..self.classes)
            .rev()
            .min_by_key(|&c| counts[c])
            .expect("at least one class")
    }

    /// Most frequent class; ties go to the smaller class id.
    pub fn majority_class(&self) -> usize {
        let counts = self.class_counts();
        (0..self.classes)
            .max_by_key(|&c| (counts[c], std::cmp::Reverse(c)))
            .expect("at least one class")
    }

    /// Rows `idx` in order. The class count is kept; the prior is recomputed.
    pub fn subset(&self, idx: &[usize]) -> LabeledDataset {
        let x = self.x.select_rows(idx);
        let y = idx.iter().map(|&i| self.y[i]).collect();
        LabeledDataset::new(self.name.clone(), x, y, self.classes).expect("subset of a valid dataset")
    }

    /// Row-wise concatenation of two datasets over the same classes.
    pub fn concat(&self, other: &LabeledDataset) -> Result<LabeledDataset> {
        if self.classes != other.classes {
            return Err(Error::Shape("class counts differ".into()));
        }
        let x = Matrix::vstack(&[&self.x, &other.x])?;
        let y = self.y.iter().chain(&other.y).copied().collect();
        LabeledDataset::new(self.name.clone(), x, y, self.classes)
    }
}

/// Which CSV column holds the label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

/// Reads a numeric CSV. Labels are re-encoded to `0..m` in order of first
/// appearance. Parse errors report 1-based file line and column.
pub fn load_csv(path: impl AsRef<Path>, label: &LabelColumn, has_header: bool) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_reader(file);

    let label_idx = match label {
        LabelColumn::Index(i) => *i,
        LabelColumn::Name(name) => {
            if !has_header {
                return Err(Error::InvalidInput("label column by name needs a header".into()));
            }
            let headers = reader.headers().map_err(|e| csv_error(e, 1))?;
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::InvalidInput(format!("no column named {name:?}")))?
        }
    };

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut codes: HashMap<String, usize> = HashMap::new();
    let mut width = None;
    let first_line = if has_header { 2 } else { 1 };
    for (i, record) in reader.records().enumerate() {
        let line = first_line + i;
        let record = record.map_err(|e| csv_error(e, line))?;
        if label_idx >= record.len() {
            return Err(Error::Parse {
                row: line,
                column: label_idx + 1,
                message: "label column missing".into(),
            });
        }
        let cols = record.len() - 1;
        if *width.get_or_insert(cols) != cols {
            return Err(Error::Parse {
                row: line,
                column: record.len(),
                message: "inconsistent field count".into(),
            });
        }
        for (c, cell) in record.iter().enumerate() {
            if c == label_idx {
                let next = codes.len();
                labels.push(*codes.entry(cell.to_string()).or_insert(next));
            } else {
                let v: f64 = cell.parse().map_err(|_| Error::Parse {
                    row: line,
                    column: c + 1,
                    message: format!("non-numeric feature {cell:?}"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        row: line,
                        column: c + 1,
                        message: "non-finite feature".into(),
                    });
                }
                values.push(v);
            }
        }
    }
    if labels.is_empty() {
        return Err(Error::Empty("csv has no data rows"));
    }
    if codes.len() < 2 {
        return Err(Error::SingleClass);
    }
    let name = path.file_stem().map_or_else(|| "csv".to_string(), |s| s.to_string_lossy().into_owned());
    let x = Matrix::from_vec(labels.len(), width.unwrap_or(0), values)?;
    LabeledDataset::new(name, x, labels, codes.len())
}

fn csv_error(e: csv::Error, line: usize) -> Error {
    Error::Parse {
        row: e.position().map_or(line, |p| p.line() as usize),
        column: 0,
        message: e.to_string(),
    }
}

/// Train / calibration / validation / test parts of one dataset.
#[derive(Debug, Clone)]
pub struct SplitBundle {
    pub train: LabeledDataset,
    pub calibration: LabeledDataset,
    pub validation: LabeledDataset,
    pub test: LabeledDataset,
    /// Original row indices of each part, in the order above.
    pub indices: [Vec<usize>; 4],
}

/// Shuffles and cuts 60/10/10/20. Part boundaries sit at the rounded
/// cumulative proportions 0.6n, 0.7n and 0.8n, which keeps every part within
/// one row of its nominal size.
pub fn split(dataset: &LabeledDataset, seed: u64) -> Result<SplitBundle> {
    let n = dataset.len();
    if n < 10 {
        return Err(Error::TooSmall { needed: 10, found: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed));
    let cut = |frac: f64| (frac * n as f64 + 0.5).floor() as usize;
    let (a, b, c) = (cut(0.6), cut(0.7), cut(0.8));
    let indices = [
        order[..a].to_vec(),
        order[a..b].to_vec(),
        order[b..c].to_vec(),
        order[c..].to_vec(),
    ];
    Ok(SplitBundle {
        train: dataset.subset(&indices[0]),
        calibration: dataset.subset(&indices[1]),
        validation: dataset.subset(&indices[2]),
        test: dataset.subset(&indices[3]),
        indices,
    })
}

/// Per-feature z-scoring fitted on the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Divisor per feature; 1 where the feature has zero variance.
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(train: &Matrix) -> Result<Self> {
        if train.rows() == 0 {
            return Err(Error::Empty("standardizer fit"));
        }
        let n = train.rows() as f64;
        let d = train.cols();
        let mut mean = vec![0.0; d];
        for row in train.iter_rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for row in train.iter_rows() {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, scale })
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        self.check(x)?;
        let mut out = x.clone();
        for r in 0..out.rows() {
            for ((v, m), s) in out.row_mut(r).iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = (*v - m) / s;
            }
        }
        Ok(out)
    }

    pub fn invert(&self, z: &Matrix) -> Result<Matrix> {
        self.check(z)?;
        let mut out = z.clone();
        for r in 0..out.rows() {
            for ((v, m), s) in out.row_mut(r).iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = *v * s + m;
            }
        }
        Ok(out)
    }

    pub fn apply_dataset(&self, ds: &LabeledDataset) -> Result<LabeledDataset> {
        Ok(LabeledDataset {
            x: self.apply(&ds.x)?,
            ..ds.clone()
        })
    }

    fn check(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.mean.len() {
            return Err(Error::Shape(format!(
                "standardizer fitted on {} features, got {}",
                self.mean.len(),
                x.cols()
            )));
        }
        Ok(())
    }
}

/// Gaussian classes: class `j` is centered at `separation * e_(j mod d)` with
/// identity covariance. Class counts follow `priors` exactly (largest
/// remainder rounding), rows are shuffled.
pub fn synth_gaussian(n: usize, d: usize, priors: &[f64], separation: f64, seed: u64) -> Result<LabeledDataset> {
    if d == 0 {
        return Err(Error::InvalidInput("d must be >= 1".into()));
    }
    if priors.len() < 2 || priors.iter().any(|&p| !(p >= 0.0)) || (priors.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput("priors must be >= 0, at least two, and sum to 1".into()));
    }
    let counts = apportion(n, priors);
    let mut y: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &k)| std::iter::repeat_n(c, k)).collect();
    let mut rng = seed::rng(seed);
    y.shuffle(&mut rng);
    let mut values = Vec::with_capacity(n * d);
    for &label in &y {
        for f in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            let center = if f == label % d { separation } else { 0.0 };
            values.push(center + z);
        }
    }
    let x = Matrix::from_vec(n, d, values)?;
    LabeledDataset::new(format!("gauss_n{n}_d{d}_sep{separation}"), x, y, priors.len())
}

/// Largest-remainder allocation of `n` items; ties go to the lower index.
fn apportion(n: usize, weights: &[f64]) -> Vec<usize> {
    let exact: Vec<f64> = weights.iter().map(|w| w * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| (e + 1e-9).floor() as usize).collect();
    let mut left = n.saturating_sub(counts.iter().sum());
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

/// Unlabeled rows drawn uniformly per feature over the reference's
/// `[min, max]` range.
pub fn ood_uniform(reference: &Matrix, n: usize, seed: u64) -> Result<Matrix> {
    if n == 0 {
        return Err(Error::Empty("ood sample size"));
    }
    if reference.rows() == 0 {
        return Err(Error::Empty("ood reference"));
    }
    let d = reference.cols();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for row in reference.iter_rows() {
        for f in 0..d {
            lo[f] = lo[f].min(row[f]);
            hi[f] = hi[f].max(row[f]);
        }
    }
    let mut rng = seed::rng(seed);
    let mut values = Vec::with_capacity(n * d);
    for _ in 0..n {
        for f in 0..d {
            let v = if hi[f] > lo[f] { rng.random_range(lo[f]..=hi[f]) } else { lo[f] };
            values.push(v);
        }
    }
    Matrix::from_vec(n, d, values)
}
