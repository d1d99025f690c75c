use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use quadswitch::app::{self, CliError, Overrides, Source};

/// Switched adaptive control of a quadrotor under payload changes.
#[derive(Parser)]
#[command(name = "quadswitch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SourceArgs {
    /// Scenario file (TOML).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Bundled scenario.
    #[arg(long, value_name = "NAME", value_parser = clap::builder::PossibleValuesParser::new(quadswitch::config::PRESETS))]
    preset: Option<String>,
}

impl SourceArgs {
    fn source(&self) -> Source {
        match (&self.config, &self.preset) {
            (Some(path), _) => Source::File(path.clone()),
            (None, Some(name)) => Source::Preset(name.clone()),
            (None, None) => unreachable!("clap enforces one source"),
        }
    }
}

#[derive(Args)]
struct OverrideArgs {
    /// Integration step in seconds.
    #[arg(long, value_name = "H")]
    step: Option<f64>,
    /// Simulated horizon in seconds.
    #[arg(long, value_name = "T")]
    horizon: Option<f64>,
}

impl OverrideArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            step: self.step,
            horizon: self.horizon,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write the trace, plot data and summary.
    Run {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        overrides: OverrideArgs,
        /// Output directory.
        #[arg(long, value_name = "DIR", default_value = "out")]
        out: PathBuf,
        /// Reserved; every model is deterministic.
        #[arg(long, value_name = "N")]
        seed: Option<u64>,
    },
    /// Print the average-dwell-time threshold for the configured gains.
    Adt {
        #[command(flatten)]
        source: SourceArgs,
    },
    /// Check the configured schedule against its declared dwell time.
    Certify {
        #[command(flatten)]
        source: SourceArgs,
    },
    /// Print the validated configuration as TOML.
    DumpConfig {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
}

fn dispatch(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Run {
            source,
            overrides,
            out,
            seed,
        } => app::run(&source.source(), &out, overrides.overrides(), seed).map(|r| r.summary),
        Command::Adt { source } => app::adt(&source.source()).map(|th| app::format_adt(&th)),
        Command::Certify { source } => app::certify(&source.source()),
        Command::DumpConfig { source, overrides } => app::dump_config(&source.source(), overrides.overrides()),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            if matches!(e, CliError::Adt(_)) {
                println!("ADT certified: no");
            }
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
