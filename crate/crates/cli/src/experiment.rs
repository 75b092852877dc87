//! Experiment pipelines that turn a [`RunConfig`] into CSV tables.

use std::path::{Path, PathBuf};

use dmoc_core::engine;
use dmoc_core::eval::{self, Scheme};
use dmoc_core::pcs::PcsMetric;
use dmoc_core::rtp::{generate_rtp_scenario, RtpScenarioParams};
use dmoc_core::{
    AssignmentRule, ClusteringResult, DataSet, DecisionMetric, Metric, MetricSpec, Norm, PcsParams,
};
use log::info;
use rayon::prelude::*;

use crate::config::{Experiment, MetricConfig, RunConfig};
use crate::csvio::{format_value, load_profiles, quantize, write_table};
use crate::error::CliError;
use crate::synth::gen_synthetic_pcs;

/// An in-memory CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &'static str, header: &[&str]) -> Self {
        Self { name, header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn write_to(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(format!("{}.csv", self.name));
        write_table(&path, &self.header, self.rows.iter().cloned())?;
        Ok(path)
    }
}

/// Metric with exact assignment plus, for scheduling metrics, its
/// Voronoi-assignment variant.
pub struct Metrics {
    pub spec: MetricSpec,
    pub exact: Metric,
    pub approx: Option<PcsMetric>,
}

impl Metrics {
    pub fn new(config: &RunConfig, dim: usize) -> Result<Self, CliError> {
        let spec = config.metric.spec(dim)?;
        let exact = spec.metric(config.solver.clone(), AssignmentRule::Exact);
        let approx = match &spec {
            MetricSpec::Pcs(p) => Some(PcsMetric::new(p.clone(), config.solver.clone(), AssignmentRule::Voronoi)),
            MetricSpec::Rtp(_) => None,
        };
        Ok(Self { spec, exact, approx })
    }

    pub fn run(&self, data: &DataSet, scheme: Scheme, config: &engine::EngineConfig) -> Result<ClusteringResult, CliError> {
        Ok(eval::run_scheme(&self.exact, self.approx.as_ref(), data, scheme, config)?)
    }
}

/// Reads `io.input`, or generates synthetic data from the seed when no input
/// is configured. Generated values are rounded to CSV precision.
pub fn load_data(config: &RunConfig) -> Result<DataSet, CliError> {
    if let Some(path) = &config.io.input {
        return Ok(load_profiles(path)?);
    }
    let seed = config.require_seed()?;
    match &config.metric {
        MetricConfig::Pcs(_) => Ok(gen_synthetic_pcs(&crate::synth::SyntheticPcsParams {
            seed,
            ..config.synthetic.clone()
        })?),
        MetricConfig::Rtp(r) => {
            let params = RtpScenarioParams {
                consumers: r.consumers,
                slots: r.slots,
                seed,
                ..config.scenario.clone()
            };
            Ok(quantize_data(&generate_rtp_scenario(&params)?))
        }
    }
}

pub fn quantize_data(data: &DataSet) -> DataSet {
    let rows = data.iter().map(|g| g.iter().map(|&v| quantize(v)).collect()).collect();
    DataSet::with_dim(data.dim(), rows).expect("same shape")
}

fn fmt(v: f64) -> String {
    format_value(v)
}

fn pcs_params(metrics: &Metrics) -> Result<&PcsParams, CliError> {
    match &metrics.spec {
        MetricSpec::Pcs(p) => Ok(p),
        MetricSpec::Rtp(_) => Err(CliError::Usage("this experiment needs a pcs metric".into())),
    }
}

/// Runs the configured experiment and returns its tables without writing them.
pub fn experiment_tables(config: &RunConfig) -> Result<Vec<Table>, CliError> {
    config.validate()?;
    let experiment = config
        .experiment
        .ok_or_else(|| CliError::Usage("no experiment selected: pass --experiment or set it in the config".into()))?;
    let seed = config.require_seed()?;
    let data = load_data(config)?;
    let metrics = Metrics::new(config, data.dim())?;
    info!("{experiment:?}: {} samples of dimension {}", data.len(), data.dim());
    match experiment {
        Experiment::LossCurve => loss_curve(config, &metrics, &data, seed),
        Experiment::RtpLossCurve => {
            if !matches!(metrics.spec, MetricSpec::Rtp(_)) {
                return Err(CliError::Usage("rtp-loss-curve needs an rtp metric".into()));
            }
            loss_curve(config, &metrics, &data, seed)
        }
        Experiment::PeakTarget => peak_target(config, &metrics, &data, seed),
        Experiment::Geometry2D => geometry(config, &metrics, &data, seed),
        Experiment::Representatives => representatives(config, &metrics, &data, seed),
    }
}

/// Runs the configured experiment and writes one CSV per table into
/// `io.output_dir`.
pub fn run_experiment(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let tables = experiment_tables(config)?;
    std::fs::create_dir_all(&config.io.output_dir)?;
    tables.iter().map(|t| t.write_to(&config.io.output_dir)).collect()
}

/// [`run_experiment`] on a dedicated pool of `jobs` worker threads
/// (`0` picks the number of cores).
pub fn run_experiment_with_jobs(config: &RunConfig, jobs: usize) -> Result<Vec<PathBuf>, CliError> {
    with_jobs(jobs, || run_experiment(config))
}

pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> Result<T, CliError> + Send) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {jobs} workers: {e}")))?;
    pool.install(f)
}

fn summary(metrics: &Metrics, data: &DataSet, perfect: f64) -> Table {
    let mut table = Table::new("summary", &["key", "value"]);
    table.rows.push(vec!["samples".into(), data.len().to_string()]);
    table.rows.push(vec!["dimension".into(), data.dim().to_string()]);
    table.rows.push(vec!["perfect_objective".into(), fmt(perfect)]);
    if matches!(metrics.spec, MetricSpec::Pcs(_)) {
        let h = eval::peak_histogram(data);
        table.rows.push(vec!["peak_entropy_bits".into(), fmt(eval::peak_entropy(&h))]);
    }
    table
}

fn loss_curve(config: &RunConfig, metrics: &Metrics, data: &DataSet, seed: u64) -> Result<Vec<Table>, CliError> {
    let mut schemes = config.schemes()?;
    if metrics.approx.is_none() {
        schemes.retain(|&s| s != Scheme::DmocApprox);
    }
    let perfect = eval::perfect_objective(&metrics.exact, data)?;
    let max = config.sweep.max_clusters.min(data.len());
    let jobs: Vec<(Scheme, usize)> = schemes.iter().flat_map(|&s| (1..=max).map(move |m| (s, m))).collect();
    let results: Vec<Result<f64, CliError>> = jobs
        .par_iter()
        .map(|&(scheme, m)| {
            let result = metrics.run(data, scheme, &config.engine_config(m, seed))?;
            info!("{} M={m}: objective {}", scheme.label(), result.objective);
            Ok(result.objective)
        })
        .collect();
    let mut table = Table::new("loss_curve", &["scheme", "clusters", "objective", "relative_loss_pct"]);
    for (&(scheme, m), objective) in jobs.iter().zip(results) {
        let objective = objective?;
        let loss = eval::relative_loss(perfect, objective)?;
        table.rows.push(vec![scheme.label().into(), m.to_string(), fmt(objective), fmt(loss)]);
    }
    Ok(vec![table, summary(metrics, data, perfect)])
}

fn peak_target(config: &RunConfig, metrics: &Metrics, data: &DataSet, seed: u64) -> Result<Vec<Table>, CliError> {
    let params = pcs_params(metrics)?;
    if params.norm != Norm::Infinity {
        return Err(CliError::Usage("peak-target needs norm = \"inf\"".into()));
    }
    let template = config.engine_config(1, seed);
    let mut curve = Table::new("peak_curve", &["scheme", "clusters", "peak_kw"]);
    let mut targets = Table::new("peak_target", &["scheme", "target_kw", "clusters"]);
    let perfect_peak = eval::perfect_decisions(&metrics.exact, data)?
        .iter()
        .zip(data.iter())
        .map(|(x, g)| params.peak(x, g))
        .fold(0.0, f64::max);
    curve.rows.push(vec!["perfect".into(), String::new(), fmt(perfect_peak)]);
    for scheme in config.schemes()? {
        let peaks = eval::peak_by_clusters(params, &config.solver, data, scheme, config.sweep.max_clusters, &template)?;
        for (i, &p) in peaks.iter().enumerate() {
            curve.rows.push(vec![scheme.label().into(), (i + 1).to_string(), fmt(p)]);
        }
        for &target in &config.sweep.targets_kw {
            let needed = eval::first_meeting_target(&peaks, target).map_or("not-found".to_string(), |m| m.to_string());
            targets.rows.push(vec![scheme.label().into(), fmt(target), needed]);
        }
    }
    Ok(vec![targets, curve])
}

fn geometry(config: &RunConfig, metrics: &Metrics, data: &DataSet, seed: u64) -> Result<Vec<Table>, CliError> {
    if data.dim() != 2 {
        return Err(CliError::Data(format!("geometry-2d needs two columns, data has {}", data.dim())));
    }
    let engine_config = config.engine_config(config.engine.clusters, seed);
    let kmc = metrics.run(data, Scheme::Kmc, &engine_config)?;
    let dmoc = metrics.run(data, Scheme::Dmoc, &engine_config)?;
    let mut table = Table::new("geometry", &["g1", "g2", "kmc_label", "dmoc_label"]);
    for (n, g) in data.iter().enumerate() {
        table.rows.push(vec![
            fmt(g[0]),
            fmt(g[1]),
            kmc.partition.cluster_of(n).to_string(),
            dmoc.partition.cluster_of(n).to_string(),
        ]);
    }
    Ok(vec![table])
}

fn representatives(config: &RunConfig, metrics: &Metrics, data: &DataSet, seed: u64) -> Result<Vec<Table>, CliError> {
    let width = metrics.exact.decision_dim().max(data.dim());
    let mut header = vec!["scheme", "kind", "cluster"].into_iter().map(String::from).collect::<Vec<_>>();
    header.extend((1..=width).map(|t| format!("v{t}")));
    let mut table = Table { name: "representatives", header, rows: Vec::new() };
    let engine_config = config.engine_config(config.engine.clusters, seed);
    let mut schemes = config.schemes()?;
    if metrics.approx.is_none() {
        schemes.retain(|&s| s != Scheme::DmocApprox);
    }
    for scheme in schemes {
        let result = metrics.run(data, scheme, &engine_config)?;
        let members = result.partition.members();
        for (m, rep) in result.representatives.iter().enumerate() {
            table.rows.push(padded(scheme, "representative", m, rep, width));
        }
        for (m, idx) in members.iter().enumerate() {
            let mean = if idx.is_empty() { Vec::new() } else { data.mean_of(idx) };
            table.rows.push(padded(scheme, "cluster-mean", m, &mean, width));
        }
    }
    Ok(vec![table])
}

fn padded(scheme: Scheme, kind: &str, cluster: usize, values: &[f64], width: usize) -> Vec<String> {
    let mut row = vec![scheme.label().to_string(), kind.to_string(), cluster.to_string()];
    row.extend(values.iter().map(|&v| fmt(v)));
    row.resize(width + 3, String::new());
    row
}
