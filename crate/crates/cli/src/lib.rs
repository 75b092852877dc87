//! Command-line front end: CSV ingestion, synthetic data, clustering runs and
//! experiment tables.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod config;
pub mod csvio;
pub mod error;
pub mod experiment;
pub mod synth;

pub use config::{Experiment, RunConfig};
pub use csvio::{format_value, load_profiles, quantize};
pub use error::CliError;
pub use experiment::{experiment_tables, run_experiment, run_experiment_with_jobs, Table};
pub use synth::{gen_synthetic_pcs, SyntheticPcsParams};
