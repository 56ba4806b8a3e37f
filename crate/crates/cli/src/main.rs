mod basis;
mod design;
mod mc;
mod optimize;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Response-surface optimization over function inputs.
///
/// Relative output directories are placed under $FRSM_OUTPUT_ROOT when set.
#[derive(Parser, Debug)]
#[command(name = "funrsm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a coded design and report its properties.
    Design(design::DesignArgs),
    /// Run the descent and second-order steps on a benchmark or external oracle.
    Optimize(optimize::OptimizeArgs),
    /// Monte-Carlo basis and dimension studies.
    Mc(mc::McArgs),
    /// Fit a PCA, PLS or Fourier basis to training curves.
    Basis(basis::BasisArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Design(a) => design::run(a),
        Command::Optimize(a) => optimize::run(a),
        Command::Mc(a) => mc::run(a),
        Command::Basis(a) => basis::run(a),
    };
    match result {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
