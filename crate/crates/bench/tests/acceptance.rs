//! Acceptance criteria. Each criterion prints one PASS/FAIL line; the test
//! fails if any criterion fails.

use std::path::Path;

use abstain::calibrate::{apply_threshold, sgr_threshold};
use abstain::data::synth_gaussian;
use abstain::methods::{
    fit_predictive, gradient_suite, ConfidenceKind, LossSpec, MethodId, ModelMeta, NetConfig, Predictor, SelectiveModel,
};
use abstain::metrics::{con_sat, min_coeff, risk_coverage_curve, selective_error, CONSAT_TOLERANCES};
use abstain::seed::{derive_seed, rng};
use abstain::stats::{friedman, nemenyi_cd, rank_row};
use abstain_bench::config::{BenchmarkConfig, DatasetSource};
use abstain_bench::{run, run_ood, runner, RunOptions};
use rand::Rng;
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn small_net(hidden: &[usize], epochs: usize) -> NetConfig {
    NetConfig {
        hidden: hidden.to_vec(),
        epochs,
        batch_size: 128,
        ..NetConfig::default()
    }
}

fn synth_config(seed: u64, n: usize, priors: &[f64], separation: f64, methods: &[MethodId], coverages: &[f64]) -> BenchmarkConfig {
    let mut cfg = BenchmarkConfig {
        datasets: vec![DatasetSource::Synthetic {
            name: "synth".into(),
            n,
            d: 2,
            priors: priors.to_vec(),
            separation,
            seed: 0,
        }],
        methods: methods.to_vec(),
        coverages: coverages.to_vec(),
        bootstrap: 1,
        seed,
        ..BenchmarkConfig::default()
    };
    cfg.hyper.sat_warmup = 10;
    cfg.training.net = small_net(&[32], 150);
    cfg.training.uncertainty = small_net(&[32], 150);
    cfg
}

/// Full-test-set metrics of one calibrated cell.
struct TestCell {
    method: MethodId,
    c: f64,
    coverage: f64,
    err: Option<f64>,
    min_coeff: Option<f64>,
}

fn test_cells(cfg: &BenchmarkConfig) -> Vec<TestCell> {
    let p = runner::prepare(&cfg.datasets[0], cfg).unwrap();
    let cis: Vec<usize> = (0..cfg.coverages.len()).collect();
    let trainings = runner::train_all(cfg, &p, &cfg.methods, &cis);
    let test = &p.split.test;
    let mut out = Vec::new();
    for &method in &cfg.methods {
        for &ci in &cis {
            let model = runner::calibrated_model(cfg, &trainings, &p, method, ci).unwrap();
            let scored = model.score(&test.x).unwrap();
            let accept = model.accept(&scored).unwrap();
            let accepted: Vec<usize> = test.y.iter().zip(&accept).filter(|(_, &a)| a).map(|(&y, _)| y).collect();
            out.push(TestCell {
                method,
                c: cfg.coverages[ci],
                coverage: accepted.len() as f64 / test.len() as f64,
                err: selective_error(&scored.predictions, &test.y, &accept).unwrap(),
                min_coeff: p.minority.and_then(|m| {
                    let prior = test.y.iter().filter(|&&y| y == m).count() as f64 / test.len() as f64;
                    min_coeff(&accepted, m, prior).unwrap()
                }),
            });
        }
    }
    out
}

fn gradient_check() -> Outcome {
    let cases = gradient_suite(20, 11).unwrap();
    let worst = cases.iter().map(|c| c.worst).fold(0.0, f64::max);
    let names: Vec<String> = cases.iter().map(|c| format!("{}={:.1e}", c.loss, c.worst)).collect();
    Outcome {
        pass: cases.len() == 9 && worst < 1e-4,
        detail: format!("worst {worst:.2e} ({})", names.join(" ")),
    }
}

fn coverage_calibration() -> Outcome {
    let methods = [MethodId::Sr, MethodId::Sat, MethodId::Dg, MethodId::Scross, MethodId::Pluginauc];
    let coverages = [0.7, 0.8, 0.9, 0.99];
    let per_seed: Vec<Vec<TestCell>> = (0..20u64)
        .into_par_iter()
        .map(|s| test_cells(&synth_config(s, 5000, &[0.5, 0.5], 3.0, &methods, &coverages)))
        .collect();
    let mut pass = true;
    let mut worst = Vec::new();
    for &m in &methods {
        for &c in &coverages {
            let hits = per_seed
                .iter()
                .flatten()
                .filter(|t| t.method == m && t.c == c && (t.coverage - c).abs() <= 0.05)
                .count();
            if hits < 18 {
                pass = false;
            }
            worst.push((hits, format!("{m}@{c}")));
        }
    }
    worst.sort();
    Outcome {
        pass,
        detail: format!("fewest seeds within 0.05: {} ({}/20)", worst[0].1, worst[0].0),
    }
}

fn risk_coverage_tradeoff() -> Outcome {
    let cells: Vec<TestCell> = (0..10u64)
        .into_par_iter()
        .flat_map(|s| test_cells(&synth_config(100 + s, 5000, &[0.5, 0.5], 3.0, &[MethodId::Sr], &[0.7, 0.99])))
        .collect();
    let mean = |c: f64| {
        let v: Vec<f64> = cells.iter().filter(|t| t.c == c).map(|t| t.err.unwrap_or(0.0)).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let (lo, hi) = (mean(0.7), mean(0.99));
    Outcome {
        pass: hi > 0.0 && lo <= 0.8 * hi,
        detail: format!("mean err {lo:.4} at .70 vs {hi:.4} at .99"),
    }
}

fn sgr_guarantee() -> Outcome {
    let (sep, delta) = (2.0, 0.1);
    let train = synth_gaussian(3000, 2, &[0.5, 0.5], sep, 1).unwrap();
    let net = fit_predictive(&train, &LossSpec::CrossEntropy, &small_net(&[16], 40), 2).unwrap().net;
    let meta = ModelMeta {
        method: MethodId::Sr,
        coverage: None,
        seed: 0,
    };
    let model = SelectiveModel::new(Predictor::Single(net), ConfidenceKind::Sr, 2, meta).unwrap();
    let population = synth_gaussian(200_000, 2, &[0.5, 0.5], sep, 3).unwrap();
    let scored = model.score(&population.x).unwrap();
    let pop_err = selective_error(&scored.predictions, &population.y, &vec![true; population.len()]).unwrap().unwrap();
    let r = 2.0 * pop_err;
    let draws = 500u64;
    let violations: usize = (0..draws)
        .into_par_iter()
        .map(|i| {
            let cal = synth_gaussian(1000, 2, &[0.5, 0.5], sep, derive_seed(4, &["cal", &i.to_string()])).unwrap();
            let test = synth_gaussian(1000, 2, &[0.5, 0.5], sep, derive_seed(4, &["test", &i.to_string()])).unwrap();
            let sc = model.score(&cal.x).unwrap();
            let correct: Vec<bool> = sc.predictions.iter().zip(&cal.y).map(|(a, b)| a == b).collect();
            let sgr = sgr_threshold(&sc.scores, &correct, r, delta).unwrap();
            let st = model.score(&test.x).unwrap();
            let accept = apply_threshold(&st.scores, &sgr.threshold);
            let err = selective_error(&st.predictions, &test.y, &accept).unwrap();
            usize::from(err.is_some_and(|e| e > r))
        })
        .sum();
    let frac = violations as f64 / draws as f64;
    Outcome {
        pass: frac <= 0.13,
        detail: format!("population error {pop_err:.4}, r {r:.4}, violation rate {frac:.3}"),
    }
}

fn minority_rejection() -> Outcome {
    let methods = [MethodId::Sr, MethodId::Pluginauc, MethodId::Aucross];
    let per_seed: Vec<Vec<TestCell>> = (0..10u64)
        .into_par_iter()
        .map(|s| test_cells(&synth_config(200 + s, 10_000, &[0.9, 0.1], 2.0, &methods, &[0.7])))
        .collect();
    let coeff = |cells: &[TestCell], m: MethodId| cells.iter().find(|t| t.method == m).and_then(|t| t.min_coeff);
    let good = per_seed
        .iter()
        .filter(|cells| {
            let band_ok = [MethodId::Pluginauc, MethodId::Aucross]
                .iter()
                .all(|&m| coeff(cells, m).is_some_and(|v| (0.85..=1.15).contains(&v)));
            band_ok && coeff(cells, MethodId::Sr).is_some_and(|v| v < 0.8)
        })
        .count();
    let show = |m: MethodId| {
        let v: Vec<String> = per_seed.iter().map(|c| format!("{:.2}", coeff(c, m).unwrap_or(f64::NAN))).collect();
        format!("{m} [{}]", v.join(" "))
    };
    Outcome {
        pass: good >= 8,
        detail: format!(
            "{good}/10 seeds; {}; {}; {}",
            show(MethodId::Sr),
            show(MethodId::Pluginauc),
            show(MethodId::Aucross)
        ),
    }
}

fn scross_consistency() -> Outcome {
    let cells = test_cells(&synth_config(300, 20_000, &[0.5, 0.5], 2.0, &[MethodId::Sr, MethodId::Scross], &[0.7, 0.9]));
    let cov = |m: MethodId, c: f64| cells.iter().find(|t| t.method == m && t.c == c).unwrap().coverage;
    let gaps: Vec<f64> = [0.7, 0.9].iter().map(|&c| (cov(MethodId::Scross, c) - cov(MethodId::Sr, c)).abs()).collect();
    Outcome {
        pass: gaps.iter().all(|&g| g <= 0.05),
        detail: format!("coverage gaps {:.4} at .70, {:.4} at .90", gaps[0], gaps[1]),
    }
}

/// Average rank by counting: 1 + (values strictly below) + (other values tied) / 2.
fn brute_ranks(row: &[f64]) -> Vec<f64> {
    row.iter()
        .map(|&v| {
            let below = row.iter().filter(|&&w| w < v).count() as f64;
            let tied = row.iter().filter(|&&w| w == v).count() as f64;
            1.0 + below + (tied - 1.0) / 2.0
        })
        .collect()
}

fn statistics_oracle() -> Outcome {
    let mut g = rng(7);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let k = g.random_range(2..=5usize);
        let n = g.random_range(2..=6usize);
        let values: Vec<Vec<f64>> = (0..n).map(|_| (0..k).map(|_| g.random_range(0..4) as f64).collect()).collect();
        let ranks: Vec<Vec<f64>> = values.iter().map(|r| rank_row(&r.iter().map(|&v| Some(v)).collect::<Vec<_>>())).collect();
        for (r, v) in ranks.iter().zip(&values) {
            worst = worst.max(r.iter().zip(brute_ranks(v)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        }
        let (nf, kf) = (n as f64, k as f64);
        let centre = nf * (kf + 1.0) / 2.0;
        let dev: f64 = (0..k)
            .map(|j| {
                let sum: f64 = ranks.iter().map(|r| r[j]).sum();
                (sum - centre).powi(2)
            })
            .sum();
        let chi2 = 12.0 / (nf * kf * (kf + 1.0)) * dev;
        worst = worst.max((friedman(&ranks).unwrap().chi2 - chi2).abs());
    }
    let fixed: Vec<Vec<f64>> = vec![vec![1.0, 2.0, 3.0]; 4];
    let hand = friedman(&fixed).unwrap().chi2;
    let cd = nemenyi_cd(3, 10, 0.05).unwrap();
    Outcome {
        pass: worst <= 1e-10 && hand == 8.0 && (cd - 1.0478).abs() <= 1e-3,
        detail: format!("max deviation {worst:.1e}, hand case {hand}, CD(3, 10) {cd:.4}"),
    }
}

fn metric_oracles() -> Outcome {
    let mut g = rng(8);
    let mut mismatches = 0usize;
    for _ in 0..1000 {
        let n = g.random_range(1..=8usize);
        let classes = g.random_range(2..=3usize);
        let labels: Vec<usize> = (0..n).map(|_| g.random_range(0..classes)).collect();
        let pred: Vec<usize> = (0..n).map(|_| g.random_range(0..classes)).collect();
        let conf: Vec<f64> = (0..n).map(|_| g.random_range(0..4) as f64 / 4.0).collect();
        let correct: Vec<bool> = pred.iter().zip(&labels).map(|(a, b)| a == b).collect();
        let prior = g.random_range(1..10) as f64 / 10.0;

        // every threshold at an observed confidence, accepting conf >= t
        let mut thresholds = conf.clone();
        thresholds.sort_by(|a, b| b.total_cmp(a));
        thresholds.dedup();
        let curve = risk_coverage_curve(&conf, &correct).unwrap();
        if curve.len() != thresholds.len() {
            mismatches += 1;
        }
        for (p, &t) in curve.iter().zip(&thresholds) {
            let acc: Vec<usize> = (0..n).filter(|&i| conf[i] >= t).collect();
            let wrong = acc.iter().filter(|&&i| !correct[i]).count();
            if p.coverage != acc.len() as f64 / n as f64 || p.error != wrong as f64 / acc.len() as f64 {
                mismatches += 1;
            }
        }

        // every accepted subset
        for mask in 0u32..(1 << n) {
            let accept: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
            let a = mask.count_ones() as usize;
            let wrong = (0..n).filter(|&i| accept[i] && pred[i] != labels[i]).count();
            let want = (a > 0).then(|| wrong as f64 / a as f64);
            if selective_error(&pred, &labels, &accept).unwrap() != want {
                mismatches += 1;
            }
            let acc_labels: Vec<usize> = (0..n).filter(|&i| accept[i]).map(|i| labels[i]).collect();
            let minority = acc_labels.iter().filter(|&&l| l == 1).count();
            let want = (a > 0).then(|| minority as f64 / a as f64 / prior);
            if min_coeff(&acc_labels, 1, prior).unwrap() != want {
                mismatches += 1;
            }
            for c100 in [50u32, 68, 70, 75, 80, 90, 99, 100] {
                for (e, e100) in CONSAT_TOLERANCES.iter().zip([0u32, 1, 2, 5, 10]) {
                    // a / n >= (c - eps) in exact integer arithmetic
                    let want = 100 * a as i64 >= (c100 as i64 - e100 as i64) * n as i64;
                    if con_sat(a as f64 / n as f64, c100 as f64 / 100.0, *e) != want {
                        mismatches += 1;
                    }
                }
            }
        }
    }
    Outcome {
        pass: mismatches == 0,
        detail: format!("{mismatches} mismatches over 1000 cases"),
    }
}

fn determinism(dir: &Path) -> Outcome {
    let mut cfg = synth_config(5, 1200, &[0.6, 0.4], 2.0, &MethodId::ALL, &[0.7, 0.9]);
    cfg.bootstrap = 10;
    cfg.hyper.ensemble_size = 3;
    cfg.training.net = small_net(&[16], 15);
    cfg.training.uncertainty = small_net(&[16], 15);
    let bytes = |name: &str, jobs: usize| {
        let out = dir.join(name);
        run(&cfg, &RunOptions { jobs, out: out.clone() }).unwrap();
        std::fs::read(out.join("records.csv")).unwrap()
    };
    let a = bytes("a", 1);
    let b = bytes("b", 1);
    let c = bytes("c", 4);
    Outcome {
        pass: a == b && a == c,
        detail: format!("{} bytes; repeat equal {}, jobs 1 vs 4 equal {}", a.len(), a == b, a == c),
    }
}

fn ood_plumbing(dir: &Path) -> Outcome {
    let methods: Vec<MethodId> = MethodId::ALL.iter().copied().filter(|m| !m.is_band()).collect();
    let mut cfg = synth_config(6, 3000, &[0.4, 0.3, 0.3], 3.0, &methods, &[0.7, 0.99]);
    cfg.datasets = vec![DatasetSource::Synthetic {
        name: "synth3".into(),
        n: 3000,
        d: 3,
        priors: vec![0.4, 0.3, 0.3],
        separation: 3.0,
        seed: 0,
    }];
    cfg.hyper.ensemble_size = 3;
    cfg.training.net = small_net(&[16], 20);
    cfg.training.uncertainty = small_net(&[16], 20);
    let outcome = run_ood(&cfg, &RunOptions { jobs: 4, out: dir.join("ood") }).unwrap();
    let cov = |m: MethodId, c: f64| {
        outcome
            .records
            .iter()
            .find(|r| r.method == m.as_str() && r.c == Some(c))
            .and_then(|r| r.coverage)
    };
    let complete = methods.len() == 16
        && methods
            .iter()
            .all(|&m| [0.7, 0.99].iter().all(|&c| cov(m, c).is_some_and(|v| (0.0..=1.0).contains(&v))));
    let lower: Vec<&str> = methods
        .iter()
        .filter(|&&m| matches!((cov(m, 0.7), cov(m, 0.99)), (Some(a), Some(b)) if a < b))
        .map(|m| m.as_str())
        .collect();
    Outcome {
        pass: complete && !lower.is_empty(),
        detail: format!("all 16 in [0, 1]: {complete}; lower at .70: {}", lower.join(" ")),
    }
}

#[test]
fn acceptance() {
    let dir = tempfile::tempdir().unwrap();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("gradient suite", Box::new(gradient_check)),
        ("coverage calibration", Box::new(coverage_calibration)),
        ("risk-coverage trade-off", Box::new(risk_coverage_tradeoff)),
        ("SGR guarantee", Box::new(sgr_guarantee)),
        ("minority rejection", Box::new(minority_rejection)),
        ("SCross/SR consistency", Box::new(scross_consistency)),
        ("statistics oracle", Box::new(statistics_oracle)),
        ("metric oracles", Box::new(metric_oracles)),
        ("determinism", Box::new(|| determinism(dir.path()))),
        ("OOD plumbing", Box::new(|| ood_plumbing(dir.path()))),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = std::time::Instant::now();
        let o = check();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("{verdict} {:>2} {name}: {} [{:.1}s]", i + 1, o.detail, start.elapsed().as_secs_f64());
        if !o.pass {
            failed.push(*name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
