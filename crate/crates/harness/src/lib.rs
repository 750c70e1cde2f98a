//! Configuration-driven runner for the learned error-mitigation experiments:
//! dataset generation for both phases, training, baselines and reports.

pub mod checks;
pub mod config;
pub mod metrics;
pub mod pipeline;
pub mod report;

pub use config::{ConfigError, Experiment, ExperimentConfig};
pub use pipeline::{build_datasets, evaluate, run, train_model, Datasets};
pub use report::{Metrics, Report};
