//! Re-ranking of a finished run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use abstain::stats::RankTable;

use crate::error::{BenchError, Result};
use crate::output::{rank_file_name, rank_tables, read_records, write_json};

pub const ALPHA: f64 = 0.05;

/// Human-readable block for one rank table.
pub fn format_table(c: f64, t: &RankTable) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "c = {c:.2}  ({} trials, {} methods)", t.trials, t.methods.len());
    let _ = writeln!(
        s,
        "  Friedman chi2 = {:.4}  Iman-Davenport F = {:.4}  p = {:.4e}",
        t.chi2, t.iman_davenport, t.p_value
    );
    let _ = writeln!(s, "  Nemenyi CD (alpha {}) = {:.4}", t.alpha, t.cd);
    let mut order: Vec<usize> = (0..t.methods.len()).collect();
    order.sort_by(|&a, &b| t.mean_ranks[a].total_cmp(&t.mean_ranks[b]));
    for i in order {
        let _ = writeln!(s, "  {:>6.2}  {}", t.mean_ranks[i], t.methods[i]);
    }
    let groups: Vec<String> = t.groups.iter().map(|g| format!("[{}]", g.join(", "))).collect();
    let _ = writeln!(s, "  groups: {}", groups.join(" "));
    s
}

pub struct Report {
    pub tables: Vec<(f64, RankTable)>,
    pub files: Vec<PathBuf>,
    pub text: String,
}

/// Recomputes the rank tables from `records.csv` in `dir` and rewrites the
/// rank JSON files.
pub fn report(dir: &Path) -> Result<Report> {
    let records = read_records(dir)?;
    if !records.iter().any(|r| r.c.is_some() && r.target_risk.is_none()) {
        return Err(BenchError::NoData(dir.to_path_buf()));
    }
    let (tables, notes) = rank_tables(&records, ALPHA);
    let mut text = String::new();
    let mut files = Vec::new();
    for (c, t) in &tables {
        text.push_str(&format_table(*c, t));
        let path = dir.join(rank_file_name(*c));
        write_json(&path, t)?;
        files.push(path);
    }
    for n in notes {
        let _ = writeln!(text, "{n}");
    }
    Ok(Report { tables, files, text })
}
