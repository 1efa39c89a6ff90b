//! Benchmark configuration (TOML).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use abstain::data::LabelColumn;
use abstain::methods::{MethodId, NetConfig};
use abstain::metrics::CONSAT_TOLERANCES;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    BoundedAbstention,
    Sgr,
    Ood,
}

impl std::str::FromStr for Mode {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bounded_abstention" => Ok(Mode::BoundedAbstention),
            "sgr" => Ok(Mode::Sgr),
            "ood" => Ok(Mode::Ood),
            other => Err(BenchError::Config(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    Csv {
        name: String,
        path: PathBuf,
        /// Column index or header name of the label.
        label: LabelColumn,
        #[serde(default = "yes")]
        header: bool,
    },
    Synthetic {
        name: String,
        n: usize,
        d: usize,
        priors: Vec<f64>,
        separation: f64,
        #[serde(default)]
        seed: u64,
    },
}

fn yes() -> bool {
    true
}

impl DatasetSource {
    pub fn name(&self) -> &str {
        match self {
            DatasetSource::Csv { name, .. } | DatasetSource::Synthetic { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SgrConfig {
    /// Target risks as fractions of the majority-class error.
    pub fractions: Vec<f64>,
    pub delta: f64,
}

impl Default for SgrConfig {
    fn default() -> Self {
        Self {
            fractions: vec![0.1, 0.2, 0.5, 1.0],
            delta: 0.001,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OodConfig {
    /// Uniform samples per dataset; 0 means the test-split size.
    pub samples: usize,
}

/// Loss hyperparameters. `dg_reward` defaults to `(1 + m) / 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyper {
    pub dg_reward: Option<f64>,
    pub sat_gamma: f64,
    pub sat_warmup: usize,
    pub selnet_alpha: f64,
    pub selnet_lambda: f64,
    pub entropy_beta: f64,
    pub ensemble_size: usize,
    pub folds: usize,
    /// SELE pairs per batch; defaults to the batch size.
    pub pair_budget: Option<usize>,
}

impl Default for Hyper {
    fn default() -> Self {
        Self {
            dg_reward: None,
            sat_gamma: 0.95,
            sat_warmup: 30,
            selnet_alpha: 0.5,
            selnet_lambda: 32.0,
            entropy_beta: 1e-3,
            ensemble_size: 10,
            folds: 5,
            pair_budget: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSearch {
    /// Candidate learning rates, scored by validation error.
    pub learning_rates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    /// Network used by every recipe without an override.
    pub net: NetConfig,
    /// Network settings of the ConfidNet / REG / SELE uncertainty training.
    pub uncertainty: NetConfig,
    /// Replacement net configs keyed by recipe name (see [`crate::RECIPES`]).
    pub overrides: BTreeMap<String, NetConfig>,
    pub standardize: bool,
    pub grid_search: Option<GridSearch>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            net: NetConfig::default(),
            uncertainty: NetConfig::default(),
            overrides: BTreeMap::new(),
            standardize: true,
            grid_search: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub datasets: Vec<DatasetSource>,
    pub methods: Vec<MethodId>,
    pub coverages: Vec<f64>,
    pub bootstrap: usize,
    pub tolerances: Vec<f64>,
    pub mode: Mode,
    pub sgr: SgrConfig,
    pub ood: OodConfig,
    pub seed: u64,
    pub hyper: Hyper,
    pub training: TrainingConfig,
    pub output: Option<PathBuf>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            datasets: Vec::new(),
            methods: MethodId::ALL.to_vec(),
            coverages: vec![0.70, 0.75, 0.80, 0.85, 0.90, 0.95, 0.99],
            bootstrap: 100,
            tolerances: CONSAT_TOLERANCES.to_vec(),
            mode: Mode::BoundedAbstention,
            sgr: SgrConfig::default(),
            ood: OodConfig::default(),
            seed: 0,
            hyper: Hyper::default(),
            training: TrainingConfig::default(),
            output: None,
        }
    }
}

impl BenchmarkConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config; relative CSV paths resolve against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for ds in &mut cfg.datasets {
            if let DatasetSource::Csv { path, .. } = ds {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(BenchError::Config(msg));
        if self.datasets.is_empty() {
            return bad("no datasets configured".into());
        }
        let mut names: Vec<&str> = self.datasets.iter().map(DatasetSource::name).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return bad("dataset names must be unique".into());
        }
        if self.methods.is_empty() {
            return bad("no methods configured".into());
        }
        let mut methods = self.methods.clone();
        methods.sort();
        methods.dedup();
        if methods.len() != self.methods.len() {
            return bad("duplicate method id".into());
        }
        if self.coverages.is_empty() || self.coverages.iter().any(|&c| !(c > 0.0 && c <= 1.0)) {
            return bad(format!("coverages must lie in (0, 1]: {:?}", self.coverages));
        }
        if self.bootstrap == 0 {
            return bad("bootstrap count must be >= 1".into());
        }
        if let Some(t) = self.tolerances.iter().find(|t| !CONSAT_TOLERANCES.contains(t)) {
            return bad(format!("tolerance {t} has no output column (allowed: {CONSAT_TOLERANCES:?})"));
        }
        if self.sgr.fractions.is_empty() || self.sgr.fractions.iter().any(|&f| !(f > 0.0)) {
            return bad("SGR fractions must be > 0".into());
        }
        if !(self.sgr.delta > 0.0 && self.sgr.delta < 1.0) {
            return bad(format!("SGR delta {} outside (0, 1)", self.sgr.delta));
        }
        if let Some(o) = self.hyper.dg_reward {
            if !(o > 1.0) {
                return bad(format!("dg_reward {o} must exceed 1"));
            }
        }
        if self.hyper.ensemble_size < 2 {
            return bad("ensemble_size must be >= 2".into());
        }
        if self.hyper.folds < 2 {
            return bad("folds must be >= 2".into());
        }
        if let Some(key) = self.training.overrides.keys().find(|k| !crate::RECIPES.contains(&k.as_str())) {
            return bad(format!("override for unknown recipe {key:?} (known: {:?})", crate::RECIPES));
        }
        if let Some(g) = &self.training.grid_search {
            if g.learning_rates.is_empty() || g.learning_rates.iter().any(|&lr| !(lr >= 0.0)) {
                return bad("grid_search.learning_rates must be a nonempty list of rates >= 0".into());
            }
        }
        for net in std::iter::once(&self.training.net)
            .chain(std::iter::once(&self.training.uncertainty))
            .chain(self.training.overrides.values())
        {
            net.optimizer.validate().map_err(|e| BenchError::Config(e.to_string()))?;
            if net.epochs == 0 || net.batch_size == 0 {
                return bad("epochs and batch_size must be >= 1".into());
            }
        }
        Ok(())
    }
}
