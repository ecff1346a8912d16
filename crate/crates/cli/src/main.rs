//! Command-line driver for the spin-ensemble stabilization simulator.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bloch_ensemble::error::Error;
use bloch_ensemble::simulator::RotationMethod;

use commands::{ConfigSource, RunOptions};
use config::ScenarioKind;

/// Exit codes: 0 success, 2 config error, 3 runtime/numeric error,
/// 4 I/O error.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidConfig(_)
        | Error::InvalidGrid(_)
        | Error::GridMismatch
        | Error::LengthMismatch { .. }
        | Error::GridTooSmall { .. } => 2,
        Error::ZeroNorm
        | Error::DegenerateSweepSeed { .. }
        | Error::MissingDerivativeField
        | Error::OffSphere { .. }
        | Error::NotARotation { .. }
        | Error::DegenerateState { .. } => 3,
        Error::Io { .. } | Error::Parse { .. } => 4,
    }
}

fn error_tag(err: &Error) -> &'static str {
    match exit_code(err) {
        2 => "CONFIG",
        3 => "NUMERIC",
        _ => "IO",
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Sweep,
    Ode,
}

impl From<MethodArg> for RotationMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Sweep => RotationMethod::Sweep,
            MethodArg::Ode => RotationMethod::Ode,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Paper,
    Equator,
}

impl From<ScenarioArg> for ScenarioKind {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::Paper => ScenarioKind::Paper,
            ScenarioArg::Equator => ScenarioKind::Equator,
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Run configuration file (key = value lines).
    #[arg(long, conflicts_with = "scenario")]
    config: Option<PathBuf>,
    /// Builtin scenario instead of a config file.
    #[arg(long, value_enum)]
    scenario: Option<ScenarioArg>,
    /// Output directory (default: "out", or out_dir from the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record every K-th step.
    #[arg(long)]
    stride: Option<u32>,
    /// Rotation-field construction.
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Also integrate the M1-frame and lab-frame (explicit pi-impulse)
    /// paths and report their mismatch at t = 2kT.
    #[arg(long)]
    lab_frame_check: bool,
}

impl RunArgs {
    fn options(&self) -> Result<RunOptions, Error> {
        let source = match (&self.config, self.scenario) {
            (Some(path), None) => ConfigSource::File(path.clone()),
            (None, Some(s)) => ConfigSource::Builtin(s.into()),
            (None, None) => {
                return Err(Error::InvalidConfig(
                    "give --config PATH or --scenario {paper|equator}".into(),
                ))
            }
            (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
        };
        Ok(RunOptions {
            source,
            out_dir: self.out.clone(),
            stride: self.stride,
            method: self.method.map(Into::into),
            lab_frame_check: self.lab_frame_check,
        })
    }
}

#[derive(Debug, Parser)]
#[command(name = "bloch-ensemble", version, about = "Lyapunov-feedback stabilization of a spin ensemble", disable_version_flag = false)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the closed loop and write trajectory/profile CSVs.
    Simulate(RunArgs),
    /// Grid (N vs 2N) and step (h vs h/2) sensitivity studies.
    Refine(RunArgs),
    /// Build and validate the rotation field for a target profile.
    RotationField {
        /// Target profile CSV (omega,x,y,z).
        target: PathBuf,
        #[arg(long, value_enum, default_value = "sweep")]
        method: MethodArg,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Evaluate the Lyapunov functional of a profile against a target.
    Lyapunov {
        /// Profile CSV.
        profile: PathBuf,
        /// Target profile CSV.
        target: PathBuf,
        #[arg(long, value_enum, default_value = "sweep")]
        method: MethodArg,
    },
    /// Write a gnuplot script for the simulate outputs.
    PlotScript {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Write the builtin scenario profiles as CSV files.
    ExportScenario {
        #[arg(value_enum)]
        scenario: ScenarioArg,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print the version.
    Version,
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate(args) => commands::cmd_simulate(&args.options()?),
        Command::Refine(args) => commands::cmd_refine(&args.options()?),
        Command::RotationField { target, method, out } => {
            commands::cmd_rotation_field(&target, method.into(), &out)
        }
        Command::Lyapunov { profile, target, method } => {
            commands::cmd_lyapunov(&profile, &target, method.into())
        }
        Command::PlotScript { out } => commands::cmd_plot_script(&out),
        Command::ExportScenario { scenario, out } => {
            commands::cmd_export_scenario(scenario.into(), &out)
        }
        Command::Version => {
            commands::cmd_version();
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}: {}", error_tag(&err), err);
            ExitCode::from(exit_code(&err))
        }
    }
}
