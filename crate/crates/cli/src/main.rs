//! `iontrap`: analysis reports, grids, trajectories, waveforms and recooling fits for rf ion traps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod analyze;
mod dynamics;
mod error;
mod grid;
mod output;
mod recool;
mod setup;
mod waveform;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "iontrap",
    version,
    about = "Design and analysis tools for rf ion traps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Null, secular modes, depth, cooling geometry and noise estimates for a layout.
    Analyze(analyze::AnalyzeArgs),
    /// Pseudopotential sampled on a rectangle in a z = const plane.
    Grid(grid::GridArgs),
    /// Integrate the full equation of motion and compare with the pseudopotential picture.
    Dynamics(dynamics::DynamicsArgs),
    /// Axial voltage sequences for transport and separation.
    Waveform(waveform::WaveformArgs),
    /// Synthesize a recooling fluorescence curve for a thermal ensemble.
    RecoolSim(recool::SimArgs),
    /// Fit the initial temperature to a recooling fluorescence curve.
    RecoolFit(recool::FitArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze(a) => analyze::run(a),
        Command::Grid(a) => grid::run(a),
        Command::Dynamics(a) => dynamics::run(a),
        Command::Waveform(a) => waveform::run(a),
        Command::RecoolSim(a) => recool::simulate(a),
        Command::RecoolFit(a) => recool::fit(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
