// SPDX-License-Identifier: Apache-2.0

//! Experiment driver: configuration, sweeps, verification suites and plots.

pub mod config;
pub mod plot;
pub mod sweep;
pub mod verify;

pub use config::{Algorithm, AnchorSpec, ComponentPolicy, ConfigBuilder, ExperimentConfig, Suite};
pub use sweep::{run_sweep, run_trial, Metric, SweepResult, TrialOutput, TrialRecord};
pub use verify::{run_verify, write_verify_csv, VerifyRow};
