//! `weapo` command-line runner.
//!
//! Exit codes: 0 on success, 1 on data or model errors, 2 on usage errors.

mod commands;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "weapo", version, about = "Positive-only weak supervision label models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a label model on a dataset and write the model file.
    Fit(FitArgs),
    /// Evaluate a label model on the covered part of a labeled test set.
    Eval(EvalArgs),
    /// Train the kernel ridge end model on label-model scores and evaluate it.
    End(EndArgs),
    /// Fit several label models and tabulate their covered-subset metrics.
    Compare(CompareArgs),
    /// Generate a synthetic dataset and its oracle sidecar.
    Synth(SynthArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CommonArgs {
    /// Seed echoed into results (all generation is seeded from it).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Suppress the human-readable table.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ModelArgs {
    /// Class prior p(y = +1); required by `weapo` and `fs`.
    #[arg(long)]
    pub prior: Option<f64>,
    /// Weight on the squared-norm regularizer.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub prior_weight: f64,
    #[arg(long, default_value_t = 5000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 0.5)]
    pub step0: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 100)]
    pub ds_max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub ds_tol: f64,
    /// Additive smoothing in the Dawid-Skene M-step.
    #[arg(long, default_value_t = 1.0)]
    pub smoothing: f64,
    /// Triplet denominators at or below this magnitude are skipped.
    #[arg(long, default_value_t = 1e-4)]
    pub eps_clip: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FitArgs {
    /// Training dataset (JSON Lines).
    pub train: PathBuf,
    /// weapo, weapo-noprior (alias weapo-prior), mv, ds or fs.
    #[arg(long)]
    pub model: String,
    #[command(flatten)]
    pub params: ModelArgs,
    /// Where to write the model file.
    #[arg(long)]
    pub out: PathBuf,
    /// Also dump the covering constraint edges as JSON.
    #[arg(long)]
    pub edges: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EvalArgs {
    /// Model file written by `fit`.
    pub model_file: PathBuf,
    /// Labeled test dataset.
    pub test: PathBuf,
    /// Result JSON path; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EndArgs {
    pub model_file: PathBuf,
    /// Training dataset with features.
    pub train: PathBuf,
    /// Labeled test dataset with features.
    pub test: PathBuf,
    /// RBF width; defaults to 1 / (F * var(train features)).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Ridge strength.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Regression target for records no LF fires on.
    #[arg(long, default_value_t = 0.0)]
    pub uncovered_target: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CompareArgs {
    pub train: PathBuf,
    pub test: PathBuf,
    /// Comma-separated model names.
    #[arg(long, value_delimiter = ',', default_value = "mv,ds,fs,weapo-noprior,weapo")]
    pub models: Vec<String>,
    /// Oracle sidecar from `synth`; adds an `oracle` row.
    #[arg(long)]
    pub oracle: Option<PathBuf>,
    #[command(flatten)]
    pub params: ModelArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SynthArgs {
    /// JSON spec file; inline flags are ignored when given.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 0.3)]
    pub p_plus: f64,
    /// Per-LF firing probability on positives.
    #[arg(long, value_delimiter = ',', default_value = "0.7,0.6,0.5,0.4,0.3")]
    pub tpr: Vec<f64>,
    /// Per-LF firing probability on negatives.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.1,0.05,0.05,0.02")]
    pub fpr: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Feature dimension; 0 means no features.
    #[arg(long, default_value_t = 0)]
    pub feature_dim: usize,
    /// Distance between the two class means.
    #[arg(long, default_value_t = 4.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Dataset output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Oracle sidecar path; defaults to `<out stem>.oracle.json`.
    #[arg(long)]
    pub oracle_out: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Fit(a) => commands::fit(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::End(a) => commands::end(&a),
        Command::Compare(a) => commands::compare(&a),
        Command::Synth(a) => commands::synth(&a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
