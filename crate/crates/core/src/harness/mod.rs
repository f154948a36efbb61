//! Experiment configuration, orchestration, rate fits and artifact emission.

pub mod config;
pub mod experiments;
pub mod fit;
pub mod output;

pub use config::{ExperimentConfig, ExperimentKind, GridSection};
pub use experiments::{predicted_exponent, run_experiment, FitSummary, RunSummary};
pub use fit::{fit_rate, FitModel, RateFitResult, BOOTSTRAP_RESAMPLES, MIN_FIT_POINTS};
pub use output::{write_atomic, RunFlags};
