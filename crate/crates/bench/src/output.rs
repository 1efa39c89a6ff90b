//! Result files: `records.csv`, `summary.csv`, `ranks_c<coverage>.json`,
//! `run_meta.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use abstain::metrics::{fmt_opt, EvalRecord, RECORD_COLUMNS};
use abstain::stats::{summarize, RankTable};

use crate::error::{BenchError, Result};

pub const RECORDS_FILE: &str = "records.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const META_FILE: &str = "run_meta.json";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> BenchError + '_ {
    move |e| BenchError::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub fn write_records(dir: &Path, records: &[EvalRecord]) -> Result<PathBuf> {
    let path = dir.join(RECORDS_FILE);
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    w.write_record(RECORD_COLUMNS).map_err(csv_err(&path))?;
    for r in records {
        w.write_record(r.csv_row()).map_err(csv_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;
    Ok(path)
}

pub fn read_records(dir: &Path) -> Result<Vec<EvalRecord>> {
    let path = dir.join(RECORDS_FILE);
    if !path.exists() {
        return Err(BenchError::NoData(dir.to_path_buf()));
    }
    let mut r = csv::Reader::from_path(&path).map_err(csv_err(&path))?;
    let header = r.headers().map_err(csv_err(&path))?.clone();
    if header.iter().collect::<Vec<_>>() != RECORD_COLUMNS {
        return Err(BenchError::Csv {
            path,
            message: "unexpected header".into(),
        });
    }
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(csv_err(&path))?;
        let fields: Vec<&str> = row.iter().collect();
        out.push(EvalRecord::from_csv_row(&fields).map_err(|e| BenchError::Csv {
            path: path.clone(),
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

type Metric = (&'static str, fn(&EvalRecord) -> Option<f64>);

const METRICS: [Metric; 10] = [
    ("err", |r| r.err),
    ("coverage", |r| r.coverage),
    ("rel_err", |r| r.rel_err),
    ("consat_000", |r| r.consat[0].map(f64::from)),
    ("consat_001", |r| r.consat[1].map(f64::from)),
    ("consat_002", |r| r.consat[2].map(f64::from)),
    ("consat_005", |r| r.consat[3].map(f64::from)),
    ("consat_010", |r| r.consat[4].map(f64::from)),
    ("min_coeff", |r| r.min_coeff),
    ("err_coeff", |r| r.err_coeff),
];

/// Mean and population std of each metric over the records of a cell, over
/// defined values only.
pub fn summary_rows(records: &[EvalRecord]) -> Vec<Vec<String>> {
    let mut groups: Vec<((String, String, String, String), Vec<&EvalRecord>)> = Vec::new();
    for r in records {
        let key = (r.method.clone(), r.dataset.clone(), fmt_opt(r.c), fmt_opt(r.target_risk));
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    groups
        .into_iter()
        .map(|((method, dataset, c, risk), rows)| {
            let failures = rows.iter().filter(|r| r.failure.is_some()).count();
            let mut out = vec![method, dataset, c, risk, rows.len().to_string(), failures.to_string()];
            for (_, get) in &METRICS {
                let vals: Vec<f64> = rows.iter().filter_map(|r| get(r)).collect();
                match summarize(&vals) {
                    Ok(s) => out.extend([format!("{}", s.mean), format!("{}", s.std)]),
                    Err(_) => out.extend(["NA".to_string(), "NA".to_string()]),
                }
            }
            out
        })
        .collect()
}

pub fn summary_header() -> Vec<String> {
    let mut h: Vec<String> = ["method", "dataset", "c", "target_risk", "rows", "failures"]
        .map(String::from)
        .to_vec();
    for (name, _) in &METRICS {
        h.push(format!("{name}_mean"));
        h.push(format!("{name}_std"));
    }
    h
}

pub fn write_summary(dir: &Path, records: &[EvalRecord]) -> Result<PathBuf> {
    let path = dir.join(SUMMARY_FILE);
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    w.write_record(summary_header()).map_err(csv_err(&path))?;
    for row in summary_rows(records) {
        w.write_record(row).map_err(csv_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;
    Ok(path)
}

/// `ranks_c0.70.json` style name.
pub fn rank_file_name(c: f64) -> String {
    format!("ranks_c{c:.2}.json")
}

/// Rank tables per target coverage over RelErr (lower is better). Rows are
/// (dataset, bootstrap) pairs; a method's failed or undefined cells rank
/// worst. Coverages where the test cannot run are reported as notes.
pub fn rank_tables(records: &[EvalRecord], alpha: f64) -> (Vec<(f64, RankTable)>, Vec<String>) {
    let mut coverages: Vec<f64> = Vec::new();
    for r in records {
        if let Some(c) = r.c {
            if !coverages.contains(&c) {
                coverages.push(c);
            }
        }
    }
    let mut tables = Vec::new();
    let mut notes = Vec::new();
    for c in coverages {
        let at_c: Vec<&EvalRecord> = records.iter().filter(|r| r.c == Some(c) && r.target_risk.is_none()).collect();
        let mut methods: Vec<String> = Vec::new();
        let mut trials: Vec<(String, usize)> = Vec::new();
        let mut values: BTreeMap<(String, usize, String), Option<f64>> = BTreeMap::new();
        for r in &at_c {
            if !methods.contains(&r.method) {
                methods.push(r.method.clone());
            }
            if let Some(b) = r.bootstrap {
                let t = (r.dataset.clone(), b);
                if !trials.contains(&t) {
                    trials.push(t);
                }
                values.insert((r.dataset.clone(), b, r.method.clone()), r.rel_err);
            }
        }
        let rows: Vec<Vec<Option<f64>>> = trials
            .iter()
            .map(|(d, b)| {
                methods
                    .iter()
                    .map(|m| values.get(&(d.clone(), *b, m.clone())).copied().flatten())
                    .collect()
            })
            .collect();
        match RankTable::build(&methods, &rows, alpha) {
            Ok(t) => tables.push((c, t)),
            Err(e) => notes.push(format!("no rank table at c = {c}: {e}")),
        }
    }
    (tables, notes)
}

pub fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| BenchError::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    fs::write(path, text + "\n").map_err(io_err(path))
}
