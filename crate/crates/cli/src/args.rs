use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "shutter-sim", version, about = "Polarization-preserving Pockels-cell shutter simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// F_ON, T_ON and T_OFF for the +, -, H and V inputs at the bench trigger frequency.
    Characterize(RunArgs),
    /// Transmittivity after one trigger (time) or steady-state figures versus trigger frequency.
    Sweep(SweepArgs),
    /// Fit arm phase, leakage, wave-plate retardance and losses to the bench targets.
    Calibrate(RunArgs),
    /// Parse and check a bench file.
    Validate(BenchArg),
}

#[derive(Debug, Args)]
pub struct BenchArg {
    #[arg(long)]
    pub bench: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub bench: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Time,
    Frequency,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Defaults to the mode of the bench `sweep` section.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// `start:stop:steps`, with optional units (`0:6us:601`, `100Hz:10kHz:9`).
    /// Times are spaced linearly, frequencies logarithmically.
    #[arg(long)]
    pub range: Option<String>,
}
