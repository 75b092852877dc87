//! Run configuration, read from TOML and overridden by command-line flags.
//!
//! ```toml
//! experiment = "loss-curve"   # loss-curve | peak-target | geometry-2d | representatives | rtp-loss-curve
//! seed = 7                    # required whenever a run draws random numbers
//!
//! [metric]
//! kind = "pcs"                # pcs | rtp
//! norm = "inf"                # any p >= 1, or "inf"
//! energy = 30.0               # kWh to schedule per sample
//! x_max = 3.0                 # kW cap per slot
//! # weights = [1.0, ...]      # per-slot weights, default all ones
//!
//! [engine]
//! clusters = 3
//! max_iters = 10
//! tolerance = 1e-3
//! init = "kmeans"             # kmeans | random
//!
//! [solver]
//! method = "epigraph-lp"      # epigraph-lp | projected-subgradient
//!
//! [sweep]
//! max_clusters = 20
//! schemes = ["dmoc", "dmoc-approx", "kmc"]
//! targets_kw = [6.0, 7.0, 8.0]
//!
//! [io]
//! # input = "profiles.csv"    # synthetic data is generated when absent
//! output_dir = "out"
//!
//! [synthetic]                 # used when io.input is absent (pcs metric)
//! archetypes = 3
//! slots = 24
//! samples = 365
//!
//! [scenario]                  # used when io.input is absent (rtp metric)
//! consumers = 5
//! slots = 4
//! periods = 365
//! ```

use std::path::{Path, PathBuf};

use dmoc_core::eval::Scheme;
use dmoc_core::rtp::RtpScenarioParams;
use dmoc_core::{EngineConfig, Init, MetricSpec, Norm, PcsParams, PcsSolverConfig, RtpParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::synth::SyntheticPcsParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    LossCurve,
    PeakTarget,
    #[serde(rename = "geometry-2d")]
    #[value(name = "geometry-2d")]
    Geometry2D,
    Representatives,
    RtpLossCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MetricConfig {
    Pcs(PcsConfig),
    Rtp(RtpParams),
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig::Pcs(PcsConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PcsConfig {
    pub norm: Norm,
    pub energy: f64,
    pub x_max: f64,
    pub weights: Option<Vec<f64>>,
}

impl Default for PcsConfig {
    fn default() -> Self {
        Self { norm: Norm::Infinity, energy: 30.0, x_max: 3.0, weights: None }
    }
}

impl MetricConfig {
    /// Full metric for data with `dim` columns.
    pub fn spec(&self, dim: usize) -> Result<MetricSpec, CliError> {
        let spec = match self {
            MetricConfig::Pcs(p) => MetricSpec::Pcs(PcsParams {
                weights: p.weights.clone().unwrap_or_else(|| vec![1.0; dim]),
                norm: p.norm,
                energy: p.energy,
                x_max: p.x_max,
            }),
            MetricConfig::Rtp(r) => MetricSpec::Rtp(r.clone()),
        };
        spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        if spec.data_dim() != dim {
            return Err(CliError::Data(format!(
                "data has {dim} columns but the metric expects {}",
                spec.data_dim()
            )));
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    Kmeans,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineSection {
    pub clusters: usize,
    pub max_iters: usize,
    pub tolerance: f64,
    pub init: InitKind,
}

impl Default for EngineSection {
    fn default() -> Self {
        let base = EngineConfig::default();
        Self { clusters: 3, max_iters: base.max_iters, tolerance: base.tolerance, init: InitKind::Kmeans }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSection {
    pub max_clusters: usize,
    pub schemes: Vec<String>,
    pub targets_kw: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            max_clusters: 20,
            schemes: vec!["dmoc".into(), "dmoc-approx".into(), "kmc".into()],
            targets_kw: vec![6.0, 7.0, 8.0, 9.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IoSection {
    pub input: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for IoSection {
    fn default() -> Self {
        Self { input: None, output_dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub experiment: Option<Experiment>,
    pub seed: Option<u64>,
    pub metric: MetricConfig,
    pub engine: EngineSection,
    pub solver: PcsSolverConfig,
    pub sweep: SweepSection,
    pub io: IoSection,
    pub synthetic: SyntheticPcsParams,
    pub scenario: RtpScenarioParams,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))
    }

    /// Relative `io` paths are resolved against the config file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(input) = &config.io.input {
            config.io.input = Some(base.join(input));
        }
        config.io.output_dir = base.join(&config.io.output_dir);
        Ok(config)
    }

    pub fn require_seed(&self) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| CliError::Usage("this run is stochastic: pass --seed or set seed in the config".into()))
    }

    pub fn schemes(&self) -> Result<Vec<Scheme>, CliError> {
        self.sweep.schemes.iter().map(|s| s.parse().map_err(CliError::Usage)).collect()
    }

    pub fn engine_config(&self, clusters: usize, seed: u64) -> EngineConfig {
        EngineConfig {
            clusters,
            max_iters: self.engine.max_iters,
            tolerance: self.engine.tolerance,
            seed,
            init: match self.engine.init {
                InitKind::Kmeans => Init::FromKmeansPipeline,
                InitKind::Random => Init::Random,
            },
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |e: dmoc_core::DmocError| CliError::Usage(e.to_string());
        self.solver.validate().map_err(usage)?;
        if self.engine.clusters == 0 || self.engine.max_iters == 0 || !(self.engine.tolerance >= 0.0) {
            return Err(CliError::Usage("engine needs clusters >= 1, max_iters >= 1, tolerance >= 0".into()));
        }
        if self.sweep.max_clusters == 0 {
            return Err(CliError::Usage("sweep.max_clusters must be at least 1".into()));
        }
        self.schemes()?;
        Ok(())
    }
}
