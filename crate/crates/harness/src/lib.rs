//! Experiment driver: configuration, the staged pipeline, fit
//! classification and artifact output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifacts;
pub mod config;
pub mod fit_report;
pub mod pipeline;

pub use config::{ConfigError, ExperimentConfig, PotentialKind};
pub use fit_report::{classify, fit_curves, fit_report, CurveClass, FitReport};
pub use pipeline::{run_experiment, Claim, RunReport, Stage, StageStatus};
