//! Argument parsing and subcommand dispatch for the `dmoc` binary.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use dmoc_core::eval::{self, Scheme};
use dmoc_core::pcs::SolverMethod;
use dmoc_core::rtp::{generate_rtp_scenario, RtpScenarioParams};
use dmoc_core::{DecisionMetric, MetricSpec, Norm, RtpParams};

use crate::config::{Experiment, InitKind, MetricConfig, PcsConfig, RunConfig};
use crate::csvio::{format_value, write_profiles};
use crate::error::CliError;
use crate::experiment::{load_data, run_experiment, with_jobs, Metrics, Table};
use crate::synth::{gen_synthetic_pcs, SyntheticPcsParams};

#[derive(Debug, Parser)]
#[command(name = "dmoc", version, about = "Decision-oriented clustering of load profiles")]
pub struct Cli {
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic data set as CSV.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Cluster one data set and write assignments and representatives.
    Cluster(ClusterArgs),
    /// Perfect-baseline objective and peak statistics of a data set.
    Eval(RunArgs),
    /// Run an experiment sweep and write its tables.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Subcommand)]
pub enum GenCommand {
    /// Load profiles with planted peak times.
    Pcs(GenPcsArgs),
    /// Consumer satisfaction parameters, one row of `K * T` values per period.
    Rtp(GenRtpArgs),
}

#[derive(Debug, Args)]
pub struct GenPcsArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub archetypes: usize,
    #[arg(long, default_value_t = 24)]
    pub slots: usize,
    #[arg(long, default_value_t = 365)]
    pub samples: usize,
    #[arg(long, default_value_t = 3.0)]
    pub peak_kw: f64,
    #[arg(long, default_value_t = 0.5)]
    pub base_kw: f64,
    #[arg(long, default_value_t = 0.5)]
    pub jitter: f64,
}

#[derive(Debug, Args)]
pub struct GenRtpArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub consumers: usize,
    #[arg(long, default_value_t = 4)]
    pub slots: usize,
    #[arg(long, default_value_t = 365)]
    pub periods: usize,
    #[arg(long, default_value_t = 2.0)]
    pub g_low: f64,
    #[arg(long, default_value_t = 3.0)]
    pub g_high: f64,
}

/// Config file plus flags overriding its values.
#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML run configuration.
    #[arg(value_name = "CONFIG", conflicts_with = "config")]
    pub config_file: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input CSV, one profile per row.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Switch the metric kind; its parameters reset to defaults.
    #[arg(long, value_parser = ["pcs", "rtp"])]
    pub metric: Option<String>,
    /// Norm order p, or "inf".
    #[arg(long)]
    pub norm: Option<Norm>,
    #[arg(long)]
    pub energy: Option<f64>,
    #[arg(long)]
    pub x_max: Option<f64>,
    #[arg(long)]
    pub consumers: Option<usize>,
    #[arg(long)]
    pub slots: Option<usize>,
    #[arg(long)]
    pub clusters: Option<usize>,
    #[arg(long)]
    pub max_clusters: Option<usize>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long, value_enum)]
    pub init: Option<InitKind>,
    /// Comma-separated subset of dmoc, dmoc-approx, kmc.
    #[arg(long, value_delimiter = ',')]
    pub schemes: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub targets_kw: Option<Vec<f64>>,
    #[arg(long, value_parser = ["epigraph-lp", "projected-subgradient"])]
    pub solver: Option<String>,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, default_value = "dmoc", value_parser = ["dmoc", "dmoc-approx", "kmc"])]
    pub scheme: String,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_enum)]
    pub experiment: Option<Experiment>,
}

impl RunArgs {
    /// Config file values with every given flag applied on top.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut config = match self.config_file.as_ref().or(self.config.as_ref()) {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(input) = &self.input {
            config.io.input = Some(input.clone());
        }
        if let Some(dir) = &self.out_dir {
            config.io.output_dir = dir.clone();
        }
        if self.seed.is_some() {
            config.seed = self.seed;
        }
        match self.metric.as_deref() {
            Some("pcs") if !matches!(config.metric, MetricConfig::Pcs(_)) => {
                config.metric = MetricConfig::Pcs(PcsConfig::default())
            }
            Some("rtp") if !matches!(config.metric, MetricConfig::Rtp(_)) => {
                config.metric = MetricConfig::Rtp(RtpParams::default())
            }
            _ => {}
        }
        match &mut config.metric {
            MetricConfig::Pcs(p) => {
                set(&mut p.norm, self.norm);
                set(&mut p.energy, self.energy);
                set(&mut p.x_max, self.x_max);
                if self.consumers.is_some() {
                    return Err(CliError::Usage("--consumers applies to the rtp metric".into()));
                }
                set(&mut config.synthetic.slots, self.slots);
            }
            MetricConfig::Rtp(r) => {
                if self.norm.is_some() || self.energy.is_some() || self.x_max.is_some() {
                    return Err(CliError::Usage("--norm, --energy and --x-max apply to the pcs metric".into()));
                }
                set(&mut r.consumers, self.consumers);
                set(&mut r.slots, self.slots);
            }
        }
        set(&mut config.engine.clusters, self.clusters);
        set(&mut config.engine.max_iters, self.max_iters);
        set(&mut config.engine.tolerance, self.tolerance);
        set(&mut config.engine.init, self.init);
        set(&mut config.sweep.max_clusters, self.max_clusters);
        set(&mut config.sweep.schemes, self.schemes.clone());
        set(&mut config.sweep.targets_kw, self.targets_kw.clone());
        match self.solver.as_deref() {
            Some("epigraph-lp") => config.solver.method = SolverMethod::EpigraphLp,
            Some("projected-subgradient") => config.solver.method = SolverMethod::ProjectedSubgradient,
            _ => {}
        }
        config.validate()?;
        Ok(config)
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Parses `args` (program name first) and runs the selected command.
/// Help and version requests print and succeed.
pub fn main_with_args<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return Ok(());
            }
            return Err(CliError::Usage(e.render().to_string().trim_end().to_string()));
        }
    };
    let jobs = cli.jobs;
    with_jobs(jobs, move || run(cli.command))
}

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Gen(GenCommand::Pcs(a)) => {
            let data = gen_synthetic_pcs(&SyntheticPcsParams {
                archetypes: a.archetypes,
                slots: a.slots,
                samples: a.samples,
                seed: a.seed,
                peak_kw: a.peak_kw,
                base_kw: a.base_kw,
                jitter: a.jitter,
            })?;
            write_profiles(&a.out, &data)?;
        }
        Command::Gen(GenCommand::Rtp(a)) => {
            let data = generate_rtp_scenario(&RtpScenarioParams {
                consumers: a.consumers,
                slots: a.slots,
                g_low: a.g_low,
                g_high: a.g_high,
                periods: a.periods,
                seed: a.seed,
            })?;
            write_profiles(&a.out, &data)?;
        }
        Command::Cluster(a) => {
            let config = a.run.resolve()?;
            let scheme: Scheme = a.scheme.parse().map_err(CliError::Usage)?;
            for table in cluster_tables(&config, scheme)? {
                let path = write_in(&config, &table)?;
                println!("wrote {}", path.display());
            }
        }
        Command::Eval(a) => {
            let config = a.resolve()?;
            for table in eval_tables(&config)? {
                let path = write_in(&config, &table)?;
                println!("wrote {}", path.display());
            }
        }
        Command::Experiment(a) => {
            let mut config = a.run.resolve()?;
            set(&mut config.experiment, a.experiment.map(Some));
            for path in run_experiment(&config)? {
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn write_in(config: &RunConfig, table: &Table) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(&config.io.output_dir)?;
    table.write_to(&config.io.output_dir)
}

/// Assignment, representatives and a summary of one clustering run.
pub fn cluster_tables(config: &RunConfig, scheme: Scheme) -> Result<Vec<Table>, CliError> {
    let seed = config.require_seed()?;
    let data = load_data(config)?;
    let metrics = Metrics::new(config, data.dim())?;
    if scheme == Scheme::DmocApprox && metrics.approx.is_none() {
        return Err(CliError::Usage("dmoc-approx needs a pcs metric".into()));
    }
    let result = metrics.run(&data, scheme, &config.engine_config(config.engine.clusters, seed))?;
    let perfect = eval::perfect_objective(&metrics.exact, &data)?;

    let mut assignment = table("assignment", &["sample", "cluster"]);
    for n in 0..data.len() {
        assignment.rows.push(vec![n.to_string(), result.partition.cluster_of(n).to_string()]);
    }
    let mut header = vec!["cluster".to_string()];
    header.extend((1..=metrics.exact.decision_dim()).map(|t| format!("v{t}")));
    let mut reps = Table { name: "representatives", header, rows: Vec::new() };
    for (m, x) in result.representatives.iter().enumerate() {
        let mut row = vec![m.to_string()];
        row.extend(x.iter().map(|&v| format_value(v)));
        reps.rows.push(row);
    }
    let mut summary = table("summary", &["key", "value"]);
    let trace: Vec<String> = result.trace.objectives.iter().map(|&v| format_value(v)).collect();
    summary.rows.extend([
        vec!["scheme".into(), scheme.label().into()],
        vec!["clusters".into(), result.clusters().to_string()],
        vec!["objective".into(), format_value(result.objective)],
        vec!["perfect_objective".into(), format_value(perfect)],
        vec!["relative_loss_pct".into(), format_value(eval::relative_loss(perfect, result.objective)?)],
        vec!["iterations".into(), result.trace.iterations_run.to_string()],
        vec!["converged".into(), result.trace.converged.to_string()],
        vec!["trace".into(), trace.join(" ")],
    ]);
    Ok(vec![assignment, reps, summary])
}

/// Perfect-baseline objective, and for load profiles the peak-slot
/// histogram with its entropy.
pub fn eval_tables(config: &RunConfig) -> Result<Vec<Table>, CliError> {
    let data = load_data(config)?;
    let metrics = Metrics::new(config, data.dim())?;
    let perfect = eval::perfect_objective(&metrics.exact, &data)?;
    let mut summary = table("eval", &["key", "value"]);
    summary.rows.push(vec!["samples".into(), data.len().to_string()]);
    summary.rows.push(vec!["perfect_objective".into(), format_value(perfect)]);
    let mut tables = Vec::new();
    if let MetricSpec::Pcs(_) = metrics.spec {
        let h = eval::peak_histogram(&data);
        summary.rows.push(vec!["peak_entropy_bits".into(), format_value(eval::peak_entropy(&h))]);
        let mut hist = table("peak_histogram", &["slot", "count", "p_hat"]);
        for (t, (&c, &p)) in h.counts.iter().zip(&h.p_hat).enumerate() {
            hist.rows.push(vec![(t + 1).to_string(), c.to_string(), format_value(p)]);
        }
        tables.push(hist);
    }
    tables.insert(0, summary);
    Ok(tables)
}

fn table(name: &'static str, header: &[&str]) -> Table {
    Table { name, header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
}
