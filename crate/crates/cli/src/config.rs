//! Experiment configuration files.

use std::fmt;
use std::path::{Path, PathBuf};

use chimera_core::meanfield::{ClassifierConfig, InitialConditionSpec};
use chimera_core::NetworkParams;
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Meanfield,
    Fluctuations,
    Analyze,
    ScanMi,
    ReproduceFig1,
    ReproduceFig2,
    ReproduceFig3,
    ReproduceFig4,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = self.to_possible_value().expect("no skipped variants");
        f.write_str(name.get_name())
    }
}

/// Where the initial mean-field state comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IcSource {
    /// A persisted initial-condition file, relative to the config file.
    File { path: PathBuf },
    Generated(InitialConditionSpec),
}

impl Default for IcSource {
    fn default() -> Self {
        IcSource::Generated(InitialConditionSpec::default())
    }
}

/// A persisted covariance snapshot to analyze instead of propagating one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceInput {
    pub csv: PathBuf,
    pub sidecar: PathBuf,
}

/// One mean-field run of a multi-regime figure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeRun {
    pub label: String,
    #[serde(rename = "V")]
    pub coupling: f64,
    pub t0: f64,
}

/// The three runs of the regime figures: chimera, synchronized and
/// desynchronized, at their customary snapshot times.
pub fn default_regime_runs() -> Vec<RegimeRun> {
    vec![
        RegimeRun { label: "chimera".into(), coupling: 1.2, t0: 3000.5 },
        RegimeRun { label: "synchronized".into(), coupling: 1.6, t0: 25.5 },
        RegimeRun { label: "desynchronized".into(), coupling: 0.8, t0: 8000.5 },
    ]
}

/// Snapshot time of the single-regime figures when `t0` is not given.
pub const DEFAULT_CHIMERA_T0: f64 = 3000.5;

fn default_delta_t() -> f64 {
    0.5
}
fn default_dt_mf() -> f64 {
    1e-2
}
fn default_dt_cov() -> f64 {
    1e-3
}
fn default_outputs() -> PathBuf {
    PathBuf::from("out")
}
fn default_sample_interval() -> f64 {
    0.5
}
fn default_cov_sample_interval() -> f64 {
    0.05
}
fn default_mi_anchor() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Ignored when the experiment is named on the command line.
    #[serde(default)]
    pub experiment: Option<Experiment>,
    pub params: NetworkParams,
    #[serde(default)]
    pub ic: IcSource,
    /// Start of the fluctuation window; the end of a mean-field run.
    #[serde(default)]
    pub t0: Option<f64>,
    #[serde(default = "default_delta_t")]
    pub delta_t: f64,
    #[serde(default = "default_dt_mf")]
    pub dt_mf: f64,
    #[serde(default = "default_dt_cov")]
    pub dt_cov: f64,
    #[serde(default = "default_outputs")]
    pub outputs: PathBuf,
    #[serde(default)]
    pub classifier: ClassifierConfig,
    /// Spacing of space-time grid samples.
    #[serde(default = "default_sample_interval")]
    pub sample_interval: f64,
    /// Spacing of covariance samples inside the fluctuation window.
    #[serde(default = "default_cov_sample_interval")]
    pub cov_sample_interval: f64,
    /// 1-based first site of Alice in MI scans.
    #[serde(default = "default_mi_anchor")]
    pub mi_anchor: usize,
    /// Alice size for MI summaries and time series; 20, or `N / 2` on
    /// smaller rings, when absent.
    #[serde(default)]
    pub mi_partition: Option<usize>,
    /// Overrides the runs of the regime figures.
    #[serde(default)]
    pub runs: Option<Vec<RegimeRun>>,
    /// Analyze this snapshot instead of propagating one.
    #[serde(default)]
    pub covariance: Option<CovarianceInput>,
}

impl ExperimentConfig {
    /// Reads `path`, resolving relative file references against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        if text.trim().is_empty() {
            return Err(CliError::Config(format!("{} is empty", path.display())));
        }
        let mut cfg: Self =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let IcSource::File { path } = &mut self.ic {
            fix(path);
        }
        if let Some(cov) = &mut self.covariance {
            fix(&mut cov.csv);
            fix(&mut cov.sidecar);
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        if let IcSource::Generated(spec) = &mut self.ic {
            spec.seed = seed;
        }
        self
    }

    /// Seed of a generated initial condition.
    pub fn seed(&self) -> Option<u64> {
        match &self.ic {
            IcSource::Generated(spec) => Some(spec.seed),
            IcSource::File { .. } => None,
        }
    }

    pub fn mi_partition(&self) -> usize {
        self.mi_partition.unwrap_or_else(|| 20.min((self.params.n / 2).max(1)))
    }

    pub fn regime_runs(&self) -> Vec<RegimeRun> {
        self.runs.clone().unwrap_or_else(default_regime_runs)
    }

    pub fn validate(&self, experiment: Experiment) -> Result<(), CliError> {
        self.params.validate().map_err(|e| CliError::Config(e.to_string()))?;
        match &self.ic {
            IcSource::Generated(spec) => spec.validate().map_err(|e| CliError::Config(e.to_string()))?,
            IcSource::File { path } => require_file(path)?,
        }
        if let Some(cov) = &self.covariance {
            require_file(&cov.csv)?;
            require_file(&cov.sidecar)?;
        }
        if let Some(t0) = self.t0 {
            if !(t0.is_finite() && t0 >= 0.0) {
                return Err(CliError::Config(format!("t0 must be >= 0, got {t0}")));
            }
        }
        for (name, v) in [
            ("delta_t", self.delta_t),
            ("dt_mf", self.dt_mf),
            ("dt_cov", self.dt_cov),
            ("sample_interval", self.sample_interval),
            ("cov_sample_interval", self.cov_sample_interval),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.mi_anchor == 0 || self.mi_anchor > self.params.n {
            return Err(CliError::Config(format!("mi_anchor {} outside 1..={}", self.mi_anchor, self.params.n)));
        }
        let part = self.mi_partition();
        if part == 0 || part >= self.params.n {
            return Err(CliError::Config(format!("mi_partition {part} outside 1..={}", self.params.n - 1)));
        }
        let needs_t0 = matches!(
            experiment,
            Experiment::Meanfield | Experiment::Fluctuations | Experiment::ScanMi
        ) || (experiment == Experiment::Analyze && self.covariance.is_none());
        if needs_t0 && self.t0.is_none() {
            return Err(CliError::Config(format!("experiment {experiment} needs t0")));
        }
        if let Some(runs) = &self.runs {
            if runs.is_empty() {
                return Err(CliError::Config("runs must not be empty".into()));
            }
            for r in runs {
                if !(r.coupling.is_finite() && r.coupling >= 0.0 && r.t0.is_finite() && r.t0 >= 0.0) {
                    return Err(CliError::Config(format!("run {:?} has invalid V or t0", r.label)));
                }
            }
        }
        Ok(())
    }
}

fn require_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{} does not exist", path.display())))
    }
}
