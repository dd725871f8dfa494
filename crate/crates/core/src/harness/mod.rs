//! Experiment orchestration: run configuration, training loops, and the CLI.

pub mod cli;
pub mod config;
pub mod run;

pub use cli::cli_main;
pub use config::{ConfigOverrides, Experiment, OptimizerKind, RunConfig};
pub use run::{load_experiment_data, run, run_classify, run_curvefit, run_poly, write_outputs, Divergence, RunOutcome};
