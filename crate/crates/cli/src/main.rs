use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod analyze;
mod files;
mod generate;

#[derive(Parser)]
#[command(name = "bubbleflow", version, about = "Bubbly-flow image metrics, two-phase parameters and a desk-scale conditional GAN")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Image correspondence metrics for every PGM in a directory.
    Metrics(analyze::MetricsArgs),
    /// Two-phase parameters from bubble annotation files.
    Extract(analyze::ExtractArgs),
    /// Empirical correlation predictions for a manifest of conditions.
    Correlate(analyze::CorrelateArgs),
    /// Per-indicator MRE reports between two manifests.
    Compare(analyze::CompareArgs),
    /// Geometric condition grid inside a polygon.
    Grid(analyze::GridArgs),
    /// Procedural bubbly-flow images with exact annotations.
    Synth(generate::SynthArgs),
    /// Train the conditional GAN on a toy or synthetic-image target.
    TrainToy(generate::TrainArgs),
    /// Draw samples from a trained checkpoint.
    Sample(generate::SampleArgs),
    /// FID, KID, IS and precision/recall between two image directories.
    EvalGen(generate::EvalArgs),
}

/// Output path, or stdout when absent.
#[derive(clap::Args, Debug)]
pub struct Output {
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Metrics(a) => analyze::metrics(a),
        Command::Extract(a) => analyze::extract(a),
        Command::Correlate(a) => analyze::correlate(a),
        Command::Compare(a) => analyze::compare(a),
        Command::Grid(a) => analyze::grid(a),
        Command::Synth(a) => generate::synth(a),
        Command::TrainToy(a) => generate::train_toy(a),
        Command::Sample(a) => generate::sample(a),
        Command::EvalGen(a) => generate::eval_gen(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
