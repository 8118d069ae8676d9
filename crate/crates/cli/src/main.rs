//! `gp-audio`: Gaussian-process analysis of music audio from the command
//! line. Every run reads one JSON configuration and writes its outputs
//! atomically into an output directory.

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gp_audio_core::{Error, ErrorClass, Result};

use commands::Context;
use config::RunConfig;

/// Environment variable overriding the dense-inference sample cap.
const MAX_N_VAR: &str = "GP_AUDIO_MAX_N";

#[derive(Debug, Parser)]
#[command(name = "gp-audio", version, about = "Gaussian-process models of music audio")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,

    /// Seed overriding the configuration's seed.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Log errors only.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
enum Command {
    /// Draw prior samples of a composite kernel on a uniform grid.
    Sample,
    /// Numerical spectral density of a stationary kernel.
    Spectrum,
    /// Estimate the fundamental of every event in a recording.
    Pitch,
    /// Impute missing intervals of a recording.
    Fill,
    /// Generate a synthetic excerpt with ready-to-run configurations.
    Gen,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::Spectrum => "spectrum",
            Command::Pitch => "pitch",
            Command::Fill => "fill",
            Command::Gen => "gen",
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err.class() {
        ErrorClass::Config => 2,
        ErrorClass::Format => 3,
        ErrorClass::Numerical => 4,
        ErrorClass::Input => 5,
    }
}

fn max_n_override() -> Result<Option<usize>> {
    match std::env::var(MAX_N_VAR) {
        Ok(value) => value
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|e| Error::Config(format!("{MAX_N_VAR}=`{value}`: {e}"))),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(Error::Config(format!("{MAX_N_VAR}: {e}"))),
    }
}

/// The configuration must hold the selected task's section and no other.
fn check_sections(config: &RunConfig, command: Command) -> Result<()> {
    let present = [
        ("sample", config.sample.is_some()),
        ("spectrum", config.spectrum.is_some()),
        ("pitch", config.pitch.is_some()),
        ("fill", config.fill.is_some()),
        ("gen", config.gen.is_some()),
    ];
    let others: Vec<&str> = present
        .iter()
        .filter(|&&(name, set)| set && name != command.name())
        .map(|&(name, _)| name)
        .collect();
    if !others.is_empty() {
        return Err(Error::Config(format!(
            "the `{}` subcommand runs one task, but the configuration also has section(s) {}",
            command.name(),
            others.join(", ")
        )));
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let config_path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::Config("--config PATH is required".into()))?;
    let config = RunConfig::load(config_path)?;
    check_sections(&config, cli.command)?;
    let seed = cli.seed.or(config.seed);
    let ctx = Context {
        base_dir: config_path.parent().unwrap_or(Path::new(".")).to_path_buf(),
        seed: seed.unwrap_or(0),
        seed_given: seed.is_some(),
        max_n: max_n_override()?,
        normalize: config.normalize,
    };
    let outputs = match cli.command {
        Command::Sample => commands::sample(&config, &ctx)?,
        Command::Spectrum => commands::spectrum(&config)?,
        Command::Pitch => commands::pitch(&config, &ctx)?,
        Command::Fill => commands::fill(&config, &ctx)?,
        Command::Gen => commands::gen(&config, &ctx)?,
    };
    outputs.commit(&cli.out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage_error = e.use_stderr();
            let _ = e.print();
            return if usage_error { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{}: {e}", cli.command.name());
            ExitCode::from(exit_code(&e))
        }
    }
}
