//! Experiment execution: dataset preparation, shared training recipes, and
//! per-cell calibration and evaluation.

use std::collections::BTreeMap;

use abstain::data::{load_csv, ood_uniform, split, synth_gaussian, LabeledDataset, SplitBundle, Standardizer};
use abstain::methods::{
    cross_fit, ens_fit, fit_predictive, half_classifier, reg_uncertainty, sele_uncertainty,
    sr_confidence, confidnet_fit, ConfidenceKind, CrossFit, EnsembleSpec, LossSpec, MethodId, ModelMeta, NetConfig,
    Predictor, Selection, SelectiveModel,
};
use abstain::calibrate::sgr_threshold;
use abstain::metrics::{majority_selective_error, EvalContext, EvalRecord};
use abstain::nn::HeadedNet;
use abstain::seed::derive_seed;
use abstain::stats::bootstrap_indices;
use rayon::prelude::*;

use crate::config::{BenchmarkConfig, DatasetSource};
use crate::error::Result;

/// Recipe names accepted as `training.overrides` keys.
pub const RECIPES: [&str; 12] = [
    "ce", "dg", "sat", "sat_em", "selnet", "selnet_em", "ens", "half", "confidnet", "reg", "sele", "crossfit",
];

/// A dataset split, standardized on its training part.
pub struct Prepared {
    pub name: String,
    pub seed: u64,
    pub split: SplitBundle,
    /// Train + calibration, used by the cross-fitting methods.
    pub pool: LabeledDataset,
    pub majority: usize,
    pub minority: Option<usize>,
}

pub fn prepare(source: &DatasetSource, cfg: &BenchmarkConfig) -> Result<Prepared> {
    let name = source.name().to_string();
    let seed = derive_seed(cfg.seed, &["dataset", &name]);
    let mut data = match source {
        DatasetSource::Csv { path, label, header, .. } => load_csv(path, label, *header)?,
        DatasetSource::Synthetic {
            n,
            d,
            priors,
            separation,
            seed: data_seed,
            ..
        } => synth_gaussian(*n, *d, priors, *separation, derive_seed(seed, &["synthetic", &data_seed.to_string()]))?,
    };
    data.name = name.clone();
    let mut s = split(&data, derive_seed(seed, &["split"]))?;
    if cfg.training.standardize {
        let z = Standardizer::fit(&s.train.x)?;
        s.train = z.apply_dataset(&s.train)?;
        s.calibration = z.apply_dataset(&s.calibration)?;
        s.validation = z.apply_dataset(&s.validation)?;
        s.test = z.apply_dataset(&s.test)?;
    }
    let pool = s.train.concat(&s.calibration)?;
    let majority = s.train.majority_class();
    let minority = s.train.minority_prior.map(|_| s.train.minority_class());
    Ok(Prepared {
        name,
        seed,
        split: s,
        pool,
        majority,
        minority,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Recipe {
    Ce,
    Dg,
    Sat,
    SatEm,
    /// Index into the configured coverages.
    SelNet(usize),
    SelNetEm(usize),
    Ens,
    Half,
    CrossFit,
    ConfidNet,
    Reg,
    Sele,
}

impl Recipe {
    pub fn name(self) -> &'static str {
        match self {
            Recipe::Ce => "ce",
            Recipe::Dg => "dg",
            Recipe::Sat => "sat",
            Recipe::SatEm => "sat_em",
            Recipe::SelNet(_) => "selnet",
            Recipe::SelNetEm(_) => "selnet_em",
            Recipe::Ens => "ens",
            Recipe::Half => "half",
            Recipe::CrossFit => "crossfit",
            Recipe::ConfidNet => "confidnet",
            Recipe::Reg => "reg",
            Recipe::Sele => "sele",
        }
    }

    fn label(self) -> String {
        match self {
            Recipe::SelNet(i) | Recipe::SelNetEm(i) => format!("{}@{i}", self.name()),
            _ => self.name().to_string(),
        }
    }

    fn dependency(self) -> Option<Recipe> {
        match self {
            Recipe::ConfidNet => Some(Recipe::Ce),
            Recipe::Reg | Recipe::Sele => Some(Recipe::Half),
            _ => None,
        }
    }

    fn is_predictive(self) -> bool {
        matches!(
            self,
            Recipe::Ce | Recipe::Dg | Recipe::Sat | Recipe::SatEm | Recipe::SelNet(_) | Recipe::SelNetEm(_)
        )
    }
}

/// Training recipe behind `method` for coverage index `ci`.
pub fn recipe_for(method: MethodId, ci: usize) -> Recipe {
    match method {
        MethodId::Sr | MethodId::Pluginauc => Recipe::Ce,
        MethodId::Dg => Recipe::Dg,
        MethodId::Sat | MethodId::SatSr => Recipe::Sat,
        MethodId::SatEm | MethodId::SatEmSr => Recipe::SatEm,
        MethodId::Selnet | MethodId::SelnetSr => Recipe::SelNet(ci),
        MethodId::SelnetEm | MethodId::SelnetEmSr => Recipe::SelNetEm(ci),
        MethodId::Ens | MethodId::EnsSr => Recipe::Ens,
        MethodId::Confidnet => Recipe::ConfidNet,
        MethodId::Reg => Recipe::Reg,
        MethodId::Sele => Recipe::Sele,
        MethodId::Scross | MethodId::Aucross => Recipe::CrossFit,
    }
}

pub enum Trained {
    Net(HeadedNet),
    Ensemble(Vec<HeadedNet>),
    Half { classifier: HeadedNet, half_b: LabeledDataset },
    Split { classifier: HeadedNet, uncertainty: HeadedNet },
    CrossFit(CrossFit),
}

/// Trained recipes of one dataset; failures are kept as messages.
pub struct Trainings {
    pub results: BTreeMap<Recipe, std::result::Result<Trained, String>>,
    /// Learning rates picked by the grid search, by recipe label.
    pub selected_lr: BTreeMap<String, f64>,
}

impl Trainings {
    pub fn get(&self, recipe: Recipe) -> std::result::Result<&Trained, String> {
        match self.results.get(&recipe) {
            Some(Ok(t)) => Ok(t),
            Some(Err(e)) => Err(e.clone()),
            None => Err(format!("recipe {} was not trained", recipe.label())),
        }
    }
}

fn net_config(cfg: &BenchmarkConfig, recipe: Recipe) -> NetConfig {
    let default = match recipe {
        Recipe::ConfidNet | Recipe::Reg | Recipe::Sele => &cfg.training.uncertainty,
        _ => &cfg.training.net,
    };
    cfg.training.overrides.get(recipe.name()).unwrap_or(default).clone()
}

fn loss_spec(cfg: &BenchmarkConfig, recipe: Recipe, classes: usize) -> LossSpec {
    let h = &cfg.hyper;
    match recipe {
        Recipe::Dg => LossSpec::DeepGamblers {
            reward: h.dg_reward.unwrap_or((1.0 + classes as f64) / 2.0),
        },
        Recipe::Sat => LossSpec::Sat {
            gamma: h.sat_gamma,
            warmup: h.sat_warmup,
        },
        Recipe::SatEm => LossSpec::SatEm {
            gamma: h.sat_gamma,
            warmup: h.sat_warmup,
            beta: h.entropy_beta,
        },
        Recipe::SelNet(i) => LossSpec::SelNet {
            coverage: cfg.coverages[i],
            alpha: h.selnet_alpha,
            lambda: h.selnet_lambda,
        },
        Recipe::SelNetEm(i) => LossSpec::SelNetEm {
            coverage: cfg.coverages[i],
            alpha: h.selnet_alpha,
            lambda: h.selnet_lambda,
            beta: h.entropy_beta,
        },
        _ => LossSpec::CrossEntropy,
    }
}

fn validation_error(net: &HeadedNet, val: &LabeledDataset) -> Result<f64> {
    if val.is_empty() {
        return Ok(0.0);
    }
    let probs = net.forward(&val.x)?.predictive;
    let m = val.classes;
    let wrong = probs
        .iter_rows()
        .zip(&val.y)
        .filter(|(r, &y)| {
            let best = (0..m).fold(0, |b, j| if r[j] > r[b] { j } else { b });
            best != y
        })
        .count();
    Ok(wrong as f64 / val.len() as f64)
}

/// Trains a predictive recipe, grid-searching the learning rate on the
/// validation split when configured. Returns the net and the chosen rate.
fn train_predictive(cfg: &BenchmarkConfig, p: &Prepared, recipe: Recipe, seed: u64) -> Result<(HeadedNet, Option<f64>)> {
    let loss = loss_spec(cfg, recipe, p.split.train.classes);
    let net_cfg = net_config(cfg, recipe);
    let Some(grid) = &cfg.training.grid_search else {
        return Ok((fit_predictive(&p.split.train, &loss, &net_cfg, seed)?.net, None));
    };
    let mut best: Option<(f64, f64, HeadedNet)> = None;
    for &lr in &grid.learning_rates {
        let mut c = net_cfg.clone();
        c.optimizer.learning_rate = lr;
        let net = fit_predictive(&p.split.train, &loss, &c, seed)?.net;
        let err = validation_error(&net, &p.split.validation)?;
        if best.as_ref().is_none_or(|(e, _, _)| err < *e) {
            best = Some((err, lr, net));
        }
    }
    let (_, lr, net) = best.expect("nonempty grid");
    Ok((net, Some(lr)))
}

fn train_recipe(
    cfg: &BenchmarkConfig,
    p: &Prepared,
    recipe: Recipe,
    dep: Option<&Trained>,
    ce_lr: Option<f64>,
) -> Result<(Trained, Option<f64>)> {
    let seed = derive_seed(p.seed, &["recipe", &recipe.label()]);
    let mut net_cfg = net_config(cfg, recipe);
    if let (Some(lr), false) = (ce_lr, matches!(recipe, Recipe::ConfidNet | Recipe::Reg | Recipe::Sele)) {
        net_cfg.optimizer.learning_rate = lr;
    }
    let trained = match recipe {
        r if r.is_predictive() => {
            let (net, lr) = train_predictive(cfg, p, r, seed)?;
            return Ok((Trained::Net(net), lr));
        }
        Recipe::Ens => {
            let spec = EnsembleSpec::new(cfg.hyper.ensemble_size, seed)?;
            Trained::Ensemble(ens_fit(&p.split.train, &spec, &net_cfg)?)
        }
        Recipe::Half => {
            let (classifier, half_b) = half_classifier(&p.split.train, &net_cfg, seed)?;
            Trained::Half { classifier, half_b }
        }
        Recipe::CrossFit => Trained::CrossFit(cross_fit(&p.pool, cfg.hyper.folds, &net_cfg, seed)?),
        Recipe::ConfidNet => {
            let Some(Trained::Net(base)) = dep else { unreachable!("confidnet depends on ce") };
            Trained::Net(confidnet_fit(base, &p.split.train, &net_cfg, seed)?)
        }
        Recipe::Reg | Recipe::Sele => {
            let Some(Trained::Half { classifier, half_b }) = dep else { unreachable!("reg/sele depend on half") };
            let uncertainty = if recipe == Recipe::Reg {
                reg_uncertainty(classifier, half_b, &net_cfg, seed)?
            } else {
                sele_uncertainty(classifier, half_b, cfg.hyper.pair_budget, &net_cfg, seed)?
            };
            Trained::Split {
                classifier: classifier.clone(),
                uncertainty,
            }
        }
        _ => unreachable!(),
    };
    Ok((trained, None))
}

/// Trains every recipe the configured methods need, in dependency order.
/// Recipes of one stage run in parallel; results do not depend on the
/// schedule.
pub fn train_all(cfg: &BenchmarkConfig, p: &Prepared, methods: &[MethodId], coverages: &[usize]) -> Trainings {
    let mut needed: Vec<Recipe> = Vec::new();
    for &m in methods {
        for &ci in coverages {
            let r = recipe_for(m, ci);
            if let Some(d) = r.dependency() {
                needed.push(d);
            }
            needed.push(r);
        }
    }
    // grid-searched CE rate is shared by the ensemble / half / cross-fit recipes
    if cfg.training.grid_search.is_some() && needed.iter().any(|r| matches!(r, Recipe::Ens | Recipe::Half | Recipe::CrossFit)) {
        needed.push(Recipe::Ce);
    }
    needed.sort();
    needed.dedup();

    let mut results = BTreeMap::new();
    let mut selected_lr = BTreeMap::new();
    let stage = |r: &Recipe| -> usize {
        match r {
            r if r.is_predictive() => 0,
            Recipe::Ens | Recipe::Half | Recipe::CrossFit | Recipe::ConfidNet => 1,
            _ => 2,
        }
    };
    for s in 0..3 {
        let batch: Vec<Recipe> = needed.iter().copied().filter(|r| stage(r) == s).collect();
        let ce_lr = selected_lr.get("ce").copied();
        let done: Vec<(Recipe, std::result::Result<(Trained, Option<f64>), String>)> = batch
            .par_iter()
            .map(|&r| {
                let dep = match r.dependency() {
                    Some(d) => match results.get(&d) {
                        Some(Ok(t)) => Some(t),
                        Some(Err(e)) => return (r, Err(format!("{} failed: {e}", d.name()))),
                        None => return (r, Err(format!("{} missing", d.name()))),
                    },
                    None => None,
                };
                (r, train_recipe(cfg, p, r, dep, ce_lr).map_err(|e| e.to_string()))
            })
            .collect();
        for (r, res) in done {
            let res = res.map(|(t, lr)| {
                if let Some(lr) = lr {
                    selected_lr.insert(r.label(), lr);
                }
                t
            });
            results.insert(r, res);
        }
    }
    Trainings { results, selected_lr }
}

fn meta(method: MethodId, c: Option<f64>, seed: u64) -> ModelMeta {
    ModelMeta {
        method,
        coverage: c,
        seed,
    }
}

fn band_kind(ds: &LabeledDataset) -> Result<ConfidenceKind> {
    match ds.minority_prior {
        Some(_) if ds.classes == 2 => Ok(ConfidenceKind::AucBand {
            minority: ds.minority_class(),
        }),
        _ => Err(abstain::Error::UnsupportedTask(format!("band methods need a binary task, got {} classes", ds.classes)).into()),
    }
}

/// Uncalibrated model of `method` plus the calibration scores, labels and
/// correctness flags its selection is fitted on.
pub struct Calibrand {
    pub model: SelectiveModel,
    pub scores: Vec<f64>,
    pub labels: Vec<usize>,
    pub correct: Vec<bool>,
}

pub fn calibrand(method: MethodId, trained: &Trained, p: &Prepared, seed: u64) -> Result<Calibrand> {
    let m = p.split.train.classes;
    let single = |net: &HeadedNet, kind| SelectiveModel::new(Predictor::Single(net.clone()), kind, m, meta(method, None, seed));
    let model = match (method, trained) {
        (MethodId::Sr | MethodId::SatSr | MethodId::SatEmSr | MethodId::SelnetSr | MethodId::SelnetEmSr, Trained::Net(n)) => {
            single(n, ConfidenceKind::Sr)?
        }
        (MethodId::Dg | MethodId::Sat | MethodId::SatEm, Trained::Net(n)) => single(n, ConfidenceKind::AbstainComplement)?,
        (MethodId::Selnet | MethodId::SelnetEm, Trained::Net(n)) => single(n, ConfidenceKind::SelectiveHead)?,
        (MethodId::Confidnet, Trained::Net(n)) => single(n, ConfidenceKind::ConfidNet)?,
        (MethodId::Pluginauc, Trained::Net(n)) => single(n, band_kind(&p.split.train)?)?,
        (MethodId::Ens | MethodId::EnsSr, Trained::Ensemble(ms)) => {
            let kind = if method == MethodId::Ens {
                ConfidenceKind::EnsEntropy
            } else {
                ConfidenceKind::EnsAvgSr
            };
            SelectiveModel::new(Predictor::Ensemble(ms.clone()), kind, m, meta(method, None, seed))?
        }
        (MethodId::Reg | MethodId::Sele, Trained::Split { classifier, uncertainty }) => SelectiveModel::new(
            Predictor::Split {
                classifier: classifier.clone(),
                uncertainty: uncertainty.clone(),
            },
            ConfidenceKind::UncertaintyComplement,
            m,
            meta(method, None, seed),
        )?,
        (MethodId::Scross | MethodId::Aucross, Trained::CrossFit(cf)) => {
            let kind = if method == MethodId::Scross {
                ConfidenceKind::Sr
            } else {
                band_kind(&p.pool)?
            };
            let model = single(&cf.net, kind)?;
            let scores = match kind {
                ConfidenceKind::AucBand { minority, .. } => cf.oof_probs.column(minority),
                _ => sr_confidence(&cf.oof_probs, m)?,
            };
            let preds = cf.oof_probs.iter_rows().map(|r| argmax(&r[..m]));
            let correct = preds.zip(&p.pool.y).map(|(a, &b)| a == b).collect();
            return Ok(Calibrand {
                model,
                scores,
                labels: p.pool.y.clone(),
                correct,
            });
        }
        _ => unreachable!("recipe / method mismatch for {method}"),
    };
    let scored = model.score(&p.split.calibration.x)?;
    let correct = scored.predictions.iter().zip(&p.split.calibration.y).map(|(a, b)| a == b).collect();
    Ok(Calibrand {
        model,
        scores: scored.scores,
        labels: p.split.calibration.y.clone(),
        correct,
    })
}

fn argmax(row: &[f64]) -> usize {
    (0..row.len()).fold(0, |b, j| if row[j] > row[b] { j } else { b })
}

/// Calibrated model of `method` at coverage index `ci`.
pub fn calibrated_model(
    cfg: &BenchmarkConfig,
    trainings: &Trainings,
    p: &Prepared,
    method: MethodId,
    ci: usize,
) -> Result<SelectiveModel, String> {
    let c = cfg.coverages[ci];
    let trained = trainings.get(recipe_for(method, ci))?;
    let seed = derive_seed(p.seed, &["model", method.as_str()]);
    (|| -> Result<SelectiveModel> {
        let mut cal = calibrand(method, trained, p, seed)?;
        cal.model.calibrate_scores(&cal.scores, &cal.labels, c)?;
        Ok(cal.model)
    })()
    .map_err(|e| e.to_string())
}

fn eval_context(p: &Prepared, c: Option<f64>, target_risk: Option<f64>) -> EvalContext {
    EvalContext {
        c,
        majority: p.majority,
        minority: p.minority,
        target_risk,
    }
}

/// Records of one calibrated model on every bootstrap resample of the test set.
fn bootstrap_records(
    method: MethodId,
    p: &Prepared,
    model: &SelectiveModel,
    boots: &[Vec<usize>],
    ctx: &EvalContext,
    seed: u64,
) -> Result<Vec<EvalRecord>> {
    let test = &p.split.test;
    let scored = model.score(&test.x)?;
    let accept = model.accept(&scored)?;
    boots
        .iter()
        .enumerate()
        .map(|(b, idx)| {
            let pred: Vec<usize> = idx.iter().map(|&i| scored.predictions[i]).collect();
            let labels: Vec<usize> = idx.iter().map(|&i| test.y[i]).collect();
            let acc: Vec<bool> = idx.iter().map(|&i| accept[i]).collect();
            Ok(EvalRecord::evaluate(method.as_str(), &p.name, ctx, &pred, &labels, &acc, seed, Some(b))?)
        })
        .collect()
}

/// Bounded-abstention records of one dataset, in (method, coverage,
/// bootstrap) order.
pub fn abstention_records(cfg: &BenchmarkConfig, p: &Prepared, trainings: &Trainings) -> Result<Vec<EvalRecord>> {
    let boots = bootstrap_indices(p.split.test.len(), cfg.bootstrap, derive_seed(p.seed, &["bootstrap"]))?;
    let cells: Vec<(MethodId, usize)> = cfg
        .methods
        .iter()
        .flat_map(|&m| (0..cfg.coverages.len()).map(move |ci| (m, ci)))
        .collect();
    let rows: Vec<Vec<EvalRecord>> = cells
        .par_iter()
        .map(|&(method, ci)| {
            let c = cfg.coverages[ci];
            let ctx = eval_context(p, Some(c), None);
            let res = calibrated_model(cfg, trainings, p, method, ci)
                .and_then(|model| bootstrap_records(method, p, &model, &boots, &ctx, cfg.seed).map_err(|e| e.to_string()));
            res.unwrap_or_else(|reason| vec![EvalRecord::failure(method.as_str(), &p.name, Some(c), None, cfg.seed, reason)])
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// Mean of the defined values, `None` if there are none.
fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Averages records of the same (method, dataset, target, bootstrap) cell
/// computed by different models.
fn average_records(parts: &[EvalRecord]) -> EvalRecord {
    let mut out = parts[0].clone();
    out.err = mean_defined(parts.iter().map(|r| r.err));
    out.coverage = mean_defined(parts.iter().map(|r| r.coverage));
    out.rel_err = mean_defined(parts.iter().map(|r| r.rel_err));
    out.min_coeff = mean_defined(parts.iter().map(|r| r.min_coeff));
    out.err_coeff = mean_defined(parts.iter().map(|r| r.err_coeff));
    out
}

/// SGR records of one dataset, in (method, fraction, bootstrap) order.
pub fn sgr_records(cfg: &BenchmarkConfig, p: &Prepared, trainings: &Trainings) -> Result<Vec<EvalRecord>> {
    let test = &p.split.test;
    let e = majority_selective_error(p.majority, &test.y, &vec![true; test.len()])?.unwrap_or(0.0);
    let boots = bootstrap_indices(test.len(), cfg.bootstrap, derive_seed(p.seed, &["bootstrap"]))?;
    let cells: Vec<(MethodId, f64)> = cfg
        .methods
        .iter()
        .flat_map(|&m| cfg.sgr.fractions.iter().map(move |&f| (m, f)))
        .collect();
    let rows: Vec<Vec<EvalRecord>> = cells
        .par_iter()
        .map(|&(method, frac)| {
            let r = (frac * e).min(1.0);
            let fail = |reason: String| vec![EvalRecord::failure(method.as_str(), &p.name, None, Some(r), cfg.seed, reason)];
            if method.is_band() {
                return fail("band selection is not compatible with SGR".into());
            }
            if !(r > 0.0) {
                return fail("majority-class error is zero; no positive target risk".into());
            }
            let ctx = eval_context(p, None, Some(r));
            // SelectiveNet variants: one model per configured coverage, averaged
            let model_cis: Vec<usize> = if method.trains_per_coverage() {
                (0..cfg.coverages.len()).collect()
            } else {
                vec![0]
            };
            let per_model: std::result::Result<Vec<Vec<EvalRecord>>, String> = model_cis
                .iter()
                .map(|&ci| {
                    let trained = trainings.get(recipe_for(method, ci))?;
                    (|| -> Result<Vec<EvalRecord>> {
                        let seed = derive_seed(p.seed, &["model", method.as_str()]);
                        let mut cal = calibrand(method, trained, p, seed)?;
                        let sgr = sgr_threshold(&cal.scores, &cal.correct, r, cfg.sgr.delta)?;
                        cal.model.set_selection(Selection::Threshold(sgr.threshold))?;
                        bootstrap_records(method, p, &cal.model, &boots, &ctx, cfg.seed)
                    })()
                    .map_err(|e| e.to_string())
                })
                .collect();
            match per_model {
                Ok(models) => (0..boots.len())
                    .map(|b| average_records(&models.iter().map(|m| m[b].clone()).collect::<Vec<_>>()))
                    .collect(),
                Err(reason) => fail(reason),
            }
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// Out-of-distribution coverage of one dataset, in (method, coverage) order.
pub fn ood_records(cfg: &BenchmarkConfig, p: &Prepared, trainings: &Trainings) -> Result<Vec<EvalRecord>> {
    let n = if cfg.ood.samples == 0 {
        p.split.test.len()
    } else {
        cfg.ood.samples
    };
    let ood = ood_uniform(&p.split.train.x, n, derive_seed(p.seed, &["ood"]))?;
    let cells: Vec<(MethodId, usize)> = cfg
        .methods
        .iter()
        .flat_map(|&m| (0..cfg.coverages.len()).map(move |ci| (m, ci)))
        .collect();
    Ok(cells
        .par_iter()
        .map(|&(method, ci)| {
            let c = cfg.coverages[ci];
            calibrated_model(cfg, trainings, p, method, ci)
                .and_then(|model| {
                    (|| -> Result<EvalRecord> {
                        let scored = model.score(&ood)?;
                        let accept = model.accept(&scored)?;
                        Ok(EvalRecord::coverage_only(method.as_str(), &p.name, c, &accept, cfg.seed)?)
                    })()
                    .map_err(|e| e.to_string())
                })
                .unwrap_or_else(|reason| EvalRecord::failure(method.as_str(), &p.name, Some(c), None, cfg.seed, reason))
        })
        .collect())
}

/// Coverage indices whose models a mode needs.
pub fn coverage_indices(cfg: &BenchmarkConfig) -> Vec<usize> {
    (0..cfg.coverages.len()).collect()
}
