//! `teleop`: run, compare, identify and plot twin-arm teleoperation sessions.
//!
//! Exit status is 0 on success, 1 when a simulation or fit fails and 2 for
//! bad arguments, paths or configuration.

mod commands;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use teleop_core::controller::{Side, TeleopMode};

#[derive(Parser)]
#[command(name = "teleop", version, about = "Twin-arm 4-channel bilateral teleoperation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one control mode on a scenario and write its telemetry log.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Overrides the scenario's mode.
        #[arg(long)]
        mode: Option<TeleopMode>,
    },
    /// Run all seven control modes on a scenario and tabulate the errors.
    Compare {
        #[command(flatten)]
        run: RunArgs,
        /// Also write every mode's telemetry log.
        #[arg(long)]
        logs: bool,
    },
    /// Fit the dynamic parameters to a synthetic excitation or a recorded log.
    Identify(IdentifyArgs),
    /// Write per-signal data files and SVG figures for a telemetry log.
    Plot {
        /// Telemetry CSV.
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print the error metrics of a telemetry log.
    Metrics {
        #[arg(long)]
        log: PathBuf,
        /// Mode the log was recorded with, used as the row label.
        #[arg(long, default_value = "four-ch-proposed")]
        mode: TeleopMode,
        /// Directory for metrics.csv; printed only when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Model document; the built-in CRANE-X7 when omitted.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Scenario document; the default swing when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Single-threaded, bit-reproducible stepping (the default).
    #[arg(long, conflicts_with = "concurrent")]
    deterministic: bool,
    /// Real-time run with leader, follower and plant on their own threads.
    #[arg(long)]
    concurrent: bool,
    /// Round encoder readings to 12-bit counts.
    #[arg(long)]
    quantize_encoders: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the scenario duration [s].
    #[arg(long)]
    duration: Option<f64>,
}

#[derive(Args)]
struct IdentifyArgs {
    /// Kinematics, torque limits and parameter layout; also the simulated
    /// robot for synthetic excitation.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Excitation settings.
    #[arg(long)]
    excitation: Option<PathBuf>,
    /// Fit to one arm of this telemetry log instead of a synthetic run.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "leader", requires = "log")]
    arm: Arm,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Arm {
    Leader,
    Follower,
}

impl From<Arm> for Side {
    fn from(a: Arm) -> Self {
        match a {
            Arm::Leader => Side::Leader,
            Arm::Follower => Side::Follower,
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(core) = cause.downcast_ref::<teleop_core::Error>() {
            return if core.is_usage() { 2 } else { 1 };
        }
        if cause.is::<std::io::Error>() {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { run, mode } => commands::simulate(&run, mode),
        Command::Compare { run, logs } => commands::compare(&run, logs),
        Command::Identify(args) => commands::identify(&args),
        Command::Plot { log, out } => plot::plot(&log, &out),
        Command::Metrics { log, mode, out } => commands::metrics(&log, mode, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
