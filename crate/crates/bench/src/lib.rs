//! Benchmark harness: runs the configured method x dataset x coverage matrix
//! and writes records, summaries and rank tables.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod report;
pub mod runner;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use abstain::metrics::EvalRecord;
use abstain::stats::RankTable;
use serde::Serialize;

pub use config::{BenchmarkConfig, Mode};
pub use error::{BenchError, Result};
pub use report::report;
pub use runner::RECIPES;

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Worker threads; results do not depend on it.
    pub jobs: usize,
    pub out: PathBuf,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub records: Vec<EvalRecord>,
    pub rank_tables: Vec<(f64, RankTable)>,
    pub out: PathBuf,
}

#[derive(Serialize)]
struct RunMeta<'a> {
    version: &'static str,
    seed: u64,
    mode: Mode,
    config: &'a BenchmarkConfig,
    selected_learning_rates: BTreeMap<String, BTreeMap<String, f64>>,
    rank_files: Vec<String>,
    notes: Vec<String>,
}

/// Runs `cfg` in its configured mode.
pub fn run(cfg: &BenchmarkConfig, opts: &RunOptions) -> Result<RunOutcome> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| BenchError::Config(format!("thread pool: {e}")))?;
    pool.install(|| execute(cfg, &opts.out))
}

/// Risk-targeted (SGR) run regardless of the configured mode.
pub fn run_sgr(cfg: &BenchmarkConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let mut cfg = cfg.clone();
    cfg.mode = Mode::Sgr;
    run(&cfg, opts)
}

/// Out-of-distribution coverage probe regardless of the configured mode.
pub fn run_ood(cfg: &BenchmarkConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let mut cfg = cfg.clone();
    cfg.mode = Mode::Ood;
    run(&cfg, opts)
}

fn execute(cfg: &BenchmarkConfig, out: &Path) -> Result<RunOutcome> {
    std::fs::create_dir_all(out).map_err(|source| BenchError::Io {
        path: out.to_path_buf(),
        source,
    })?;
    let mut records = Vec::new();
    let mut selected = BTreeMap::new();
    let coverages = runner::coverage_indices(cfg);
    for source in &cfg.datasets {
        let prepared = runner::prepare(source, cfg)?;
        let trainings = runner::train_all(cfg, &prepared, &cfg.methods, &coverages);
        let rows = match cfg.mode {
            Mode::BoundedAbstention => runner::abstention_records(cfg, &prepared, &trainings)?,
            Mode::Sgr => runner::sgr_records(cfg, &prepared, &trainings)?,
            Mode::Ood => runner::ood_records(cfg, &prepared, &trainings)?,
        };
        records.extend(rows);
        if !trainings.selected_lr.is_empty() {
            selected.insert(prepared.name.clone(), trainings.selected_lr);
        }
    }
    output::write_records(out, &records)?;
    output::write_summary(out, &records)?;

    let (tables, mut notes) = if cfg.mode == Mode::BoundedAbstention {
        output::rank_tables(&records, report::ALPHA)
    } else {
        (Vec::new(), vec![format!("{:?} mode: no rank tables", cfg.mode)])
    };
    let mut rank_files = Vec::new();
    for (c, t) in &tables {
        let name = output::rank_file_name(*c);
        output::write_json(&out.join(&name), t)?;
        rank_files.push(name);
    }
    let failures = records.iter().filter(|r| r.failure.is_some()).count();
    if failures > 0 {
        notes.push(format!("{failures} failed cells (see the failure column of records.csv)"));
    }
    let meta = RunMeta {
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        mode: cfg.mode,
        config: cfg,
        selected_learning_rates: selected,
        rank_files,
        notes,
    };
    output::write_json(&out.join(output::META_FILE), &meta)?;
    Ok(RunOutcome {
        records,
        rank_tables: tables,
        out: out.to_path_buf(),
    })
}
