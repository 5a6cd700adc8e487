//! Datasets, readers, metrics, configuration and experiment runs around the
//! rotation-invariant network.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod data;
pub mod experiment;
pub mod io;
pub mod metrics;
pub mod scenario;
pub mod selftest;

pub use config::{DatasetSource, ExperimentConfig};
pub use experiment::{noise_bench, run_scenario, CsvRow, Dataset, HookCounters, ScenarioOutcome};
pub use metrics::MetricReport;
pub use scenario::{RotationMode, Scenario};
