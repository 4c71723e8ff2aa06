//! Experiment runner behind the `srpcr` binary.

pub mod config;
pub mod csv;
pub mod plot;
pub mod run;

pub use config::ExperimentConfig;
pub use run::{prepare, run_diagnostics, run_experiment, solve_all, dump_sequence, Experiment, RhsSummary, RunSummary};
