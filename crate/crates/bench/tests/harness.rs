use std::path::Path;

use abstain::methods::{MethodId, NetConfig};
use abstain::metrics::{EvalRecord, NA};
use abstain_bench::config::DatasetSource;
use abstain_bench::output::{rank_tables, read_records, summary_header};
use abstain_bench::{report, run, run_ood, run_sgr, BenchError, BenchmarkConfig, RunOptions};

fn tiny_net() -> NetConfig {
    NetConfig {
        hidden: vec![8],
        epochs: 10,
        batch_size: 64,
        ..NetConfig::default()
    }
}

fn config(methods: &[MethodId], classes: usize, separation: f64) -> BenchmarkConfig {
    let mut cfg = BenchmarkConfig {
        datasets: vec![DatasetSource::Synthetic {
            name: "blobs".into(),
            n: 600,
            d: 3,
            priors: vec![1.0 / classes as f64; classes],
            separation,
            seed: 3,
        }],
        methods: methods.to_vec(),
        coverages: vec![0.7, 0.9],
        bootstrap: 5,
        seed: 11,
        ..BenchmarkConfig::default()
    };
    cfg.hyper.ensemble_size = 2;
    cfg.hyper.sat_warmup = 2;
    cfg.training.net = tiny_net();
    cfg.training.uncertainty = tiny_net();
    cfg
}

fn opts(dir: &Path, jobs: usize) -> RunOptions {
    RunOptions {
        jobs,
        out: dir.to_path_buf(),
    }
}

#[test]
fn matrix_counts_and_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&[MethodId::Sr, MethodId::Dg], 2, 2.0);
    let out = run(&cfg, &opts(dir.path(), 2)).unwrap();
    assert_eq!(out.records.len(), 20);
    assert_eq!(out.rank_tables.len(), 2);
    for f in ["records.csv", "summary.csv", "ranks_c0.70.json", "ranks_c0.90.json", "run_meta.json"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    assert_eq!(read_records(dir.path()).unwrap(), out.records);
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("run_meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 11);
    assert!(meta["version"].is_string());
}

#[test]
fn rerun_is_byte_identical() {
    let cfg = config(&[MethodId::Sr, MethodId::Sat, MethodId::Scross, MethodId::Pluginauc], 2, 2.0);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run(&cfg, &opts(a.path(), 1)).unwrap();
    run(&cfg, &opts(b.path(), 3)).unwrap();
    for f in ["records.csv", "summary.csv", "ranks_c0.70.json"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn unknown_method_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.toml");
    std::fs::write(
        &path,
        "methods = [\"sr\", \"magic\"]\n[[datasets]]\nkind = \"synthetic\"\nname = \"x\"\nn = 100\nd = 2\npriors = [0.5, 0.5]\nseparation = 2.0\nseed = 0\n",
    )
    .unwrap();
    assert!(matches!(BenchmarkConfig::load(&path), Err(BenchError::Config(_))));
}

#[test]
fn every_cell_appears_once_with_failures_isolated() {
    let dir = tempfile::tempdir().unwrap();
    // band methods cannot run on three classes
    let cfg = config(&[MethodId::Sr, MethodId::Pluginauc, MethodId::Aucross], 3, 2.0);
    let out = run(&cfg, &opts(dir.path(), 2)).unwrap();
    for m in ["pluginauc", "aucross"] {
        for c in [0.7, 0.9] {
            let rows: Vec<&EvalRecord> = out.records.iter().filter(|r| r.method == m && r.c == Some(c)).collect();
            assert_eq!(rows.len(), 1);
            assert!(rows[0].failure.as_deref().unwrap().contains("binary"));
        }
    }
    assert_eq!(out.records.iter().filter(|r| r.method == "sr").count(), 10);
    assert!(out.records.iter().filter(|r| r.method == "sr").all(|r| r.failure.is_none()));
    assert!(out.records.iter().all(|r| r.min_coeff.is_none()));
}

#[test]
fn summary_matches_records() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&[MethodId::Sr, MethodId::Ens], 2, 2.0);
    run(&cfg, &opts(dir.path(), 2)).unwrap();
    let records = read_records(dir.path()).unwrap();
    let mut rdr = csv::Reader::from_path(dir.path().join("summary.csv")).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, summary_header());
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let mut seen = 0;
    for row in rdr.records() {
        let row = row.unwrap();
        let cell: Vec<&EvalRecord> = records
            .iter()
            .filter(|r| r.method == row[col("method")] && r.c.map(|c| format!("{c}")).as_deref() == Some(&row[col("c")]))
            .collect();
        assert_eq!(row[col("rows")].parse::<usize>().unwrap(), cell.len());
        for (metric, get) in [
            ("coverage", (|r: &EvalRecord| r.coverage) as fn(&EvalRecord) -> Option<f64>),
            ("err", |r| r.err),
            ("min_coeff", |r| r.min_coeff),
        ] {
            let vals: Vec<f64> = cell.iter().filter_map(|r| get(r)).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let got: f64 = row[col(&format!("{metric}_mean"))].parse().unwrap();
            assert!((got - mean).abs() < 1e-12, "{metric}: {got} vs {mean}");
        }
        seen += 1;
    }
    assert_eq!(seen, 4);
}

#[test]
fn sgr_unit_risk_accepts_everything() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(&[MethodId::Sr, MethodId::Selnet, MethodId::Pluginauc], 2, 2.0);
    // any fraction above 1 / e pushes r to its cap of 1
    cfg.sgr.fractions = vec![100.0];
    let out = run_sgr(&cfg, &opts(dir.path(), 2)).unwrap();
    assert!(out.rank_tables.is_empty());
    for r in &out.records {
        assert_eq!(r.target_risk, Some(1.0));
        assert_eq!(r.c, None);
        if r.method == "pluginauc" {
            assert!(r.failure.as_deref().unwrap().contains("SGR"));
        } else {
            assert_eq!(r.coverage, Some(1.0), "{}", r.method);
        }
    }
    assert_eq!(out.records.iter().filter(|r| r.method == "selnet").count(), 5);
}

#[test]
fn sgr_loose_target_keeps_nearly_everything() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(&[MethodId::Sr], 2, 4.0);
    cfg.datasets = vec![DatasetSource::Synthetic {
        name: "easy".into(),
        n: 3000,
        d: 2,
        priors: vec![0.5, 0.5],
        separation: 4.0,
        seed: 0,
    }];
    cfg.training.net.epochs = 40;
    cfg.sgr = abstain_bench::config::SgrConfig {
        fractions: vec![1.0],
        delta: 0.001,
    };
    let out = run_sgr(&cfg, &opts(dir.path(), 1)).unwrap();
    for r in &out.records {
        assert!(r.coverage.unwrap() > 0.95, "{r:?}");
        assert!(r.err_coeff.unwrap() < 0.2, "{r:?}");
    }
}

#[test]
fn ood_rows_carry_coverage_only() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(&[MethodId::Sr, MethodId::Confidnet], 3, 3.0);
    cfg.ood.samples = 250;
    let out = run_ood(&cfg, &opts(dir.path(), 2)).unwrap();
    assert_eq!(out.records.len(), 4);
    for r in &out.records {
        assert!(r.failure.is_none());
        assert!((0.0..=1.0).contains(&r.coverage.unwrap()));
        assert_eq!((r.err, r.rel_err, r.min_coeff), (None, None, None));
    }
    let text = std::fs::read_to_string(dir.path().join("records.csv")).unwrap();
    assert!(text.lines().nth(1).unwrap().contains(NA));
}

#[test]
fn report_on_empty_dir_is_no_data() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(report(dir.path()), Err(BenchError::NoData(_))));
}

#[test]
fn report_recomputes_saved_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&[MethodId::Sr, MethodId::Dg, MethodId::Sat], 2, 2.0);
    let out = run(&cfg, &opts(dir.path(), 2)).unwrap();
    let saved = std::fs::read(dir.path().join("ranks_c0.70.json")).unwrap();
    let rep = report(dir.path()).unwrap();
    assert_eq!(rep.tables.len(), 2);
    assert_eq!(rep.tables[0].1.mean_ranks, out.rank_tables[0].1.mean_ranks);
    assert_eq!(std::fs::read(dir.path().join("ranks_c0.70.json")).unwrap(), saved);
    for (_, t) in &rep.tables {
        let mut covered: Vec<&String> = t.groups.iter().flatten().collect();
        covered.sort();
        covered.dedup();
        assert_eq!(covered.len(), t.methods.len());
    }
    assert!(rep.text.contains("Friedman"));
}

#[test]
fn dominant_method_ranks_first_everywhere() {
    let ctx = |b: usize, method: &str, rel: f64| EvalRecord {
        rel_err: Some(rel),
        bootstrap: Some(b),
        ..EvalRecord::failure(method, "d", Some(0.8), None, 0, String::new())
    };
    let mut records = Vec::new();
    for b in 0..6 {
        records.push(ctx(b, "good", 0.1 + b as f64 * 0.01));
        records.push(ctx(b, "bad", 0.5 + b as f64 * 0.01));
    }
    let (tables, notes) = rank_tables(&records, 0.05);
    assert!(notes.is_empty());
    assert_eq!(tables[0].1.mean_ranks, vec![1.0, 2.0]);
}
