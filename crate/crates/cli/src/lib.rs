//! Command-line front end for ELM ensemble variance estimation.

// Validation is written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod manifest;
pub mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};


/// Fit extreme learning machine ensembles and estimate the variance of their predictions.
#[derive(Debug, Parser)]
#[command(name = "elm-uq", version, about)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Master seed; generated from the clock and recorded when omitted.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory [default: out].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// TOML file with default values for any long flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads [default: all cores].
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a synthetic data set.
    Generate(GenerateArgs),
    /// Fit an ensemble to a data file and save it.
    Fit(FitArgs),
    /// Ensemble predictions at query points.
    Predict(PredictArgs),
    /// Per-point variance estimates at query points.
    Variance(VarianceArgs),
    /// Repeated-fit evaluation of the estimators against a simulated ground truth.
    Experiment(ExperimentArgs),
    /// Simulated ground-truth mean and variance of the ensemble prediction.
    GroundTruth(GroundTruthArgs),
    /// Choose the number of neurons or the Tikhonov factor.
    #[command(subcommand)]
    Select(SelectCommand),
}

#[derive(Debug, Args, Default)]
pub struct ModelArgs {
    #[arg(long)]
    pub neurons: Option<usize>,
    /// Tikhonov factor (0 for plain least squares).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// sigmoid or tanh.
    #[arg(long)]
    pub activation: Option<String>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// trapeze1d, friedman_homo or friedman_hetero.
    #[arg(long)]
    pub generator: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// uniform or gaussian.
    #[arg(long)]
    pub noise: Option<String>,
    /// Write the regression function without noise as the target.
    #[arg(long)]
    pub noise_free: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV with input columns x1.. and target column y.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Ensemble size.
    #[arg(long)]
    pub m: Option<String>,
    /// Input scaling before the hidden layer: none or minmax.
    #[arg(long)]
    pub scale: Option<String>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// CSV with input columns x1..; other columns are ignored.
    #[arg(long)]
    pub query: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VarianceArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub query: Option<PathBuf>,
    /// Comma list of NHo, BR, S1, NHe, S2, S3, or "all".
    #[arg(long)]
    pub estimators: Option<String>,
    /// Jackknife covariance form: exact or approximate.
    #[arg(long)]
    pub form: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub generator: Option<String>,
    #[arg(long)]
    pub noise: Option<String>,
    /// Training points.
    #[arg(long)]
    pub n: Option<usize>,
    /// Test points.
    #[arg(long)]
    pub n_test: Option<usize>,
    /// Evaluation grid points.
    #[arg(long)]
    pub grid: Option<usize>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Ensemble sizes, comma separated.
    #[arg(long)]
    pub m: Option<String>,
    /// Repetitions K.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Ground-truth replications R.
    #[arg(long)]
    pub gt_reps: Option<usize>,
    #[arg(long)]
    pub estimators: Option<String>,
    #[arg(long)]
    pub form: Option<String>,
    /// Interval half-width in standard deviations for coverage.
    #[arg(long)]
    pub z: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GroundTruthArgs {
    #[arg(long)]
    pub generator: Option<String>,
    #[arg(long)]
    pub noise: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub n_test: Option<usize>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub m: Option<String>,
    #[arg(long)]
    pub gt_reps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SelectSource {
    /// Data file to select on.
    #[arg(long, conflicts_with = "generator")]
    pub data: Option<PathBuf>,
    /// Select on fresh synthetic draws instead of a data file.
    #[arg(long)]
    pub generator: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of synthetic draws, each selected on separately.
    #[arg(long)]
    pub generations: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum SelectCommand {
    /// Number of neurons by repeated k-fold cross-validation.
    Neurons {
        #[command(flatten)]
        source: SelectSource,
        /// Candidate neuron counts, comma separated.
        #[arg(long)]
        values: Option<String>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        repeats: Option<usize>,
    },
    /// Tikhonov factor by generalized cross-validation.
    Alpha {
        #[command(flatten)]
        source: SelectSource,
        /// Candidate factors, comma separated.
        #[arg(long)]
        values: Option<String>,
        #[arg(long)]
        neurons: Option<usize>,
        /// Random weight draws averaged per candidate.
        #[arg(long)]
        draws: Option<usize>,
    },
}

/// Parse the process arguments, run the command and report the exit code.
pub fn main_exit() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("elm-uq: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::CliError;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn global_flags_work_after_the_subcommand() {
        let cli = Cli::try_parse_from(["elm-uq", "fit", "--data", "d.csv", "--seed", "7", "--m", "3"]).unwrap();
        assert_eq!(cli.global.seed, Some(7));
        let Command::Fit(f) = cli.command else { panic!("expected fit") };
        assert_eq!(f.m.as_deref(), Some("3"));
    }

    #[test]
    fn usage_errors_map_to_exit_one() {
        assert_eq!(CliError::Usage(String::new()).exit_code(), 1);
    }
}
