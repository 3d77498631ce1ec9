//! Sweep configuration: a TOML file with `[model]`, `[sweep]` and `[fit]`
//! sections, plus command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantizer::{EmptyCellPolicy, FitConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub dims: Vec<usize>,
    pub sigma_x: f64,
    pub sigma_n_list: Vec<f64>,
    pub k_grid: Vec<usize>,
    pub trials_d1: usize,
    pub trials_d2: usize,
    pub fit: FitConfig,
    pub seed_root: u64,
    pub out_dir: PathBuf,
    pub emit_plots: bool,
}

/// Powers of two from 1 to 1024.
pub fn default_k_grid() -> Vec<usize> {
    (0..=10).map(|e| 1usize << e).collect()
}

impl Default for ExperimentSpec {
    /// Dimensions {1, 4, 10}, noise levels {0.2, 1, 5}, unit prior, 10^5 trials.
    fn default() -> Self {
        Self {
            dims: vec![1, 4, 10],
            sigma_x: 1.0,
            sigma_n_list: vec![0.2, 1.0, 5.0],
            k_grid: default_k_grid(),
            trials_d1: 100_000,
            trials_d2: 100_000,
            fit: FitConfig::default(),
            seed_root: 20_240_601,
            out_dir: PathBuf::from("results"),
            emit_plots: true,
        }
    }
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        reason: reason.into(),
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            return Err(invalid("model.dims", "must not be empty"));
        }
        for (i, &d) in self.dims.iter().enumerate() {
            if d == 0 {
                return Err(invalid(format!("model.dims[{i}]"), "must be positive"));
            }
            if self.dims[..i].contains(&d) {
                return Err(invalid(format!("model.dims[{i}]"), format!("duplicate dimension {d}")));
            }
        }
        if !(self.sigma_x > 0.0 && self.sigma_x.is_finite()) {
            return Err(invalid("model.sigma_x", format!("must be positive and finite, got {}", self.sigma_x)));
        }
        if self.sigma_n_list.is_empty() {
            return Err(invalid("model.sigma_n", "must not be empty"));
        }
        for (i, &s) in self.sigma_n_list.iter().enumerate() {
            if !(s > 0.0 && s.is_finite()) {
                return Err(invalid(format!("model.sigma_n[{i}]"), format!("must be positive and finite, got {s}")));
            }
            if self.sigma_n_list[..i].contains(&s) {
                return Err(invalid(format!("model.sigma_n[{i}]"), format!("duplicate noise level {s}")));
            }
        }
        if self.k_grid.is_empty() {
            return Err(invalid("sweep.k_grid", "must not be empty"));
        }
        if self.k_grid[0] == 0 {
            return Err(invalid("sweep.k_grid[0]", "must be positive"));
        }
        if let Some(i) = self.k_grid.windows(2).position(|w| w[1] <= w[0]) {
            return Err(invalid(format!("sweep.k_grid[{}]", i + 1), "must be strictly increasing"));
        }
        if self.trials_d1 < 100 {
            return Err(invalid("sweep.trials_d1", "need at least 100 trials"));
        }
        if self.trials_d2 < 100 {
            return Err(invalid("sweep.trials_d2", "need at least 100 trials"));
        }
        if self.seed_root > i64::MAX as u64 {
            return Err(invalid("seed_root", "must fit in a signed 64-bit integer"));
        }
        self.fit.validate().map_err(|e| match e {
            Error::InvalidParameter { name, reason } => invalid(format!("fit.{name}"), reason),
            other => other,
        })?;
        let max_k = *self.k_grid.last().unwrap();
        if self.fit.train_size(max_k) < max_k {
            return Err(invalid("fit.n_train", format!("fewer training samples than k = {max_k}")));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: SpecFile = toml::from_str(text).map_err(|e| {
            let field = e.message().split('`').nth(1).unwrap_or("<file>").to_string();
            invalid(field, e.message().trim().to_string())
        })?;
        let spec = file.into_spec();
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// TOML rendering that [`ExperimentSpec::from_toml_str`] reads back.
    pub fn to_toml(&self) -> String {
        toml::to_string(&SpecFile::from_spec(self)).expect("spec serializes")
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(d) = &o.dims {
            self.dims = d.clone();
        }
        if let Some(s) = &o.sigma_n {
            self.sigma_n_list = s.clone();
        }
        if let Some(k) = &o.k_grid {
            self.k_grid = k.clone();
        }
        if let Some(t) = o.trials {
            self.trials_d1 = t;
            self.trials_d2 = t;
        }
        if let Some(s) = o.seed {
            self.seed_root = s;
        }
        if let Some(p) = &o.out {
            self.out_dir = p.clone();
        }
        if let Some(p) = o.plots {
            self.emit_plots = p;
        }
        self.validate()
    }
}

/// Command-line overrides; `None` keeps the configured value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub dims: Option<Vec<usize>>,
    pub sigma_n: Option<Vec<f64>>,
    pub k_grid: Option<Vec<usize>>,
    /// Sets both D1 and D2 trial counts.
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub plots: Option<bool>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    #[serde(default = "defaults::seed_root")]
    seed_root: u64,
    #[serde(default = "defaults::out_dir")]
    out_dir: PathBuf,
    #[serde(default = "defaults::emit_plots")]
    emit_plots: bool,
    #[serde(default)]
    model: ModelSection,
    #[serde(default)]
    sweep: SweepSection,
    #[serde(default)]
    fit: FitSection,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSection {
    dims: Vec<usize>,
    sigma_x: f64,
    sigma_n: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    k_grid: Vec<usize>,
    trials_d1: usize,
    trials_d2: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    n_train: Option<usize>,
    max_iters: usize,
    rel_tol: f64,
    restarts: usize,
}

mod defaults {
    use super::*;

    pub fn seed_root() -> u64 {
        ExperimentSpec::default().seed_root
    }
    pub fn out_dir() -> PathBuf {
        ExperimentSpec::default().out_dir
    }
    pub fn emit_plots() -> bool {
        true
    }
}

impl Default for ModelSection {
    fn default() -> Self {
        let s = ExperimentSpec::default();
        Self {
            dims: s.dims,
            sigma_x: s.sigma_x,
            sigma_n: s.sigma_n_list,
        }
    }
}

impl Default for SweepSection {
    fn default() -> Self {
        let s = ExperimentSpec::default();
        Self {
            k_grid: s.k_grid,
            trials_d1: s.trials_d1,
            trials_d2: s.trials_d2,
        }
    }
}

impl Default for FitSection {
    fn default() -> Self {
        let f = FitConfig::default();
        Self {
            n_train: f.n_train,
            max_iters: f.max_iters,
            rel_tol: f.rel_tol,
            restarts: f.restarts,
        }
    }
}

impl SpecFile {
    fn into_spec(self) -> ExperimentSpec {
        ExperimentSpec {
            dims: self.model.dims,
            sigma_x: self.model.sigma_x,
            sigma_n_list: self.model.sigma_n,
            k_grid: self.sweep.k_grid,
            trials_d1: self.sweep.trials_d1,
            trials_d2: self.sweep.trials_d2,
            fit: FitConfig {
                n_train: self.fit.n_train,
                max_iters: self.fit.max_iters,
                rel_tol: self.fit.rel_tol,
                restarts: self.fit.restarts,
                empty_cell_policy: EmptyCellPolicy::RespawnAtFarthestPoint,
            },
            seed_root: self.seed_root,
            out_dir: self.out_dir,
            emit_plots: self.emit_plots,
        }
    }

    fn from_spec(s: &ExperimentSpec) -> Self {
        Self {
            seed_root: s.seed_root,
            out_dir: s.out_dir.clone(),
            emit_plots: s.emit_plots,
            model: ModelSection {
                dims: s.dims.clone(),
                sigma_x: s.sigma_x,
                sigma_n: s.sigma_n_list.clone(),
            },
            sweep: SweepSection {
                k_grid: s.k_grid.clone(),
                trials_d1: s.trials_d1,
                trials_d2: s.trials_d2,
            },
            fit: FitSection {
                n_train: s.fit.n_train,
                max_iters: s.fit.max_iters,
                rel_tol: s.fit.rel_tol,
                restarts: s.fit.restarts,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_of(r: Result<ExperimentSpec>) -> String {
        match r {
            Err(Error::Config { field, .. }) => field,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn default_grid_is_powers_of_two() {
        let g = default_k_grid();
        assert_eq!(g.len(), 11);
        assert_eq!((g[0], g[10]), (1, 1024));
        ExperimentSpec::default().validate().unwrap();
    }

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(ExperimentSpec::from_toml_str("").unwrap(), ExperimentSpec::default());
    }

    #[test]
    fn toml_round_trip() {
        let mut s = ExperimentSpec::default();
        s.fit.n_train = Some(5000);
        s.dims = vec![2];
        s.sigma_n_list = vec![0.3, 0.7];
        s.emit_plots = false;
        assert_eq!(ExperimentSpec::from_toml_str(&s.to_toml()).unwrap(), s);
    }

    #[test]
    fn partial_sections() {
        let s = ExperimentSpec::from_toml_str(
            "seed_root = 9\n[model]\ndims = [2, 3]\nsigma_x = 2.0\nsigma_n = [1.0]\n[fit]\nn_train = 2000\nmax_iters = 5\nrel_tol = 1e-4\nrestarts = 1\n",
        )
        .unwrap();
        assert_eq!(s.dims, vec![2, 3]);
        assert_eq!(s.seed_root, 9);
        assert_eq!(s.k_grid, default_k_grid());
        assert_eq!(s.fit.restarts, 1);
    }

    #[test]
    fn errors_name_the_field() {
        let t = "[sweep]\nk_grid = [1, 4, 2]\ntrials_d1 = 1000\ntrials_d2 = 1000\n";
        assert_eq!(field_of(ExperimentSpec::from_toml_str(t)), "sweep.k_grid[2]");
        let t = "[model]\ndims = [1, 0]\nsigma_x = 1.0\nsigma_n = [1.0]\n";
        assert_eq!(field_of(ExperimentSpec::from_toml_str(t)), "model.dims[1]");
        let t = "[model]\ndims = [1]\nsigma_x = 1.0\nsigma_n = [1.0, -2.0]\n";
        assert_eq!(field_of(ExperimentSpec::from_toml_str(t)), "model.sigma_n[1]");
        let t = "[fit]\nmax_iters = 10\nrel_tol = 1e-6\nrestarts = 0\n";
        assert_eq!(field_of(ExperimentSpec::from_toml_str(t)), "fit.restarts");
        let t = "[sweep]\nk_grid = [1]\ntrials_d1 = 10\ntrials_d2 = 1000\n";
        assert_eq!(field_of(ExperimentSpec::from_toml_str(t)), "sweep.trials_d1");
        let t = "bogus = 1\n";
        assert!(field_of(ExperimentSpec::from_toml_str(t)).contains("bogus"));
    }

    #[test]
    fn overrides_replace_fields() {
        let mut s = ExperimentSpec::default();
        s.apply(&Overrides {
            dims: Some(vec![3]),
            k_grid: Some(vec![1, 2]),
            trials: Some(500),
            plots: Some(false),
            ..Default::default()
        })
        .unwrap();
        assert_eq!((s.dims.clone(), s.k_grid.clone(), s.trials_d1, s.trials_d2), (vec![3], vec![1, 2], 500, 500));
        assert!(!s.emit_plots);
        assert!(s.apply(&Overrides { k_grid: Some(vec![]), ..Default::default() }).is_err());
    }
}
