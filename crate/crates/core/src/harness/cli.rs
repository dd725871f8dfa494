use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Result;
use crate::mlp::Init;
use crate::selftest;

use super::config::{ConfigOverrides, Experiment, OptimizerKind, RunConfig};
use super::run::{run, write_outputs, RunOutcome};

#[derive(Debug, Parser)]
#[command(
    name = "ayla",
    version,
    about = "Power-law loss transformation experiments for SGD and ADAM",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Minimize x^4 - 3x^3 + 2 from a starting point
    Poly(RunArgs),
    /// Fit a one-hidden-layer network to a noisy quartic
    Curvefit(RunArgs),
    /// Train on MNIST (IDX files)
    Mnist(RunArgs),
    /// Train on CIFAR-100 (binary files)
    Cifar100(RunArgs),
    /// Run the built-in invariant checks
    Selftest,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON file with snake_case keys; flags take precedence
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    optimizer: Option<OptimizerKind>,
    /// Apply the loss transformation to gradients
    #[arg(long)]
    ayla: bool,
    /// Power used when |loss| < 1
    #[arg(long)]
    n1: Option<f64>,
    /// Power used when |loss| > 1
    #[arg(long)]
    n2: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Hidden units
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    start_x: Option<f64>,
    /// Stratified training subset size per class
    #[arg(long)]
    per_class: Option<usize>,
    /// Dataset directory (default: $AYLA_DATA_DIR)
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Output directory for CSV traces
    #[arg(long)]
    out: Option<PathBuf>,
    /// Weight initialization
    #[arg(long, value_enum)]
    init: Option<InitArg>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum InitArg {
    Normal,
    Glorot,
}

impl RunArgs {
    fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            optimizer: self.optimizer,
            ayla: self.ayla.then_some(true),
            n1: self.n1,
            n2: self.n2,
            lr: self.lr,
            epochs: self.epochs,
            hidden: self.hidden,
            batch_size: self.batch_size,
            seed: self.seed,
            start_x: self.start_x,
            per_class: self.per_class,
            data_dir: self.data_dir.clone(),
            out: self.out.clone(),
            init: self.init.map(|i| match i {
                InitArg::Normal => Init::NormalFanIn,
                InitArg::Glorot => Init::GlorotUniform,
            }),
        }
    }

    fn resolve(&self, experiment: Experiment) -> Result<RunConfig> {
        let mut cfg = RunConfig::defaults(experiment);
        if let Some(path) = &self.config {
            ConfigOverrides::from_json_file(path)?.apply(&mut cfg);
        }
        self.overrides().apply(&mut cfg);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn summary(cfg: &RunConfig, outcome: &RunOutcome) -> String {
    let mut parts = vec![cfg.run_name()];
    if let Some(row) = outcome.final_row() {
        parts.push(format!("epochs={}", outcome.trace.len()));
        parts.push(format!("final_loss={:.6}", row.raw_loss));
        if let Some(x) = outcome.final_x {
            parts.push(format!("final_x={x:.6}"));
        }
        if let Some(a) = row.train_accuracy {
            parts.push(format!("train_acc={:.4}", a));
        }
        if let Some(a) = row.test_accuracy {
            parts.push(format!("test_acc={:.4}", a));
        }
    }
    if let Some(d) = &outcome.diverged {
        parts.push(format!("DIVERGED at epoch {}: {}", d.epoch, d.reason));
    }
    parts.join(" ")
}

fn execute(experiment: Experiment, args: &RunArgs) -> Result<()> {
    let cfg = args.resolve(experiment)?;
    let outcome = run(&cfg)?;
    let path = write_outputs(&cfg, &outcome)?;
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(stdout, "{}", summary(&cfg, &outcome));
    let _ = writeln!(stdout, "{}", path.display());
    Ok(())
}

/// Parses `argv` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (experiment, args) = match &cli.command {
        Command::Poly(a) => (Experiment::Poly, a),
        Command::Curvefit(a) => (Experiment::Curvefit, a),
        Command::Mnist(a) => (Experiment::Mnist, a),
        Command::Cifar100(a) => (Experiment::Cifar100, a),
        Command::Selftest => {
            let report = selftest::run_all();
            let mut stdout = std::io::stdout().lock();
            for check in &report {
                let _ = writeln!(stdout, "{check}");
            }
            return if report.iter().all(|c| c.passed) { 0 } else { 1 };
        }
    };
    match execute(experiment, args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
