use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use config::RunConfig;

/// Riesz feature extraction, classification and property checks.
///
/// Settings are `key=value` pairs after the subcommand; they override the
/// config file, which overrides the defaults.
#[derive(Parser)]
#[command(name = "riesz", version, after_help = RunConfig::help())]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Settings {
    #[arg(value_name = "KEY=VALUE")]
    settings: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Write one feature row per image to a CSV file.
    Extract(Settings),
    /// Write bounding-box crops of every image to a directory.
    Bbox(Settings),
    /// Fit a classifier on a feature CSV.
    Train(Settings),
    /// Score a model on a feature CSV or a multi-scale manifest.
    Eval(Settings),
    /// Run the property suite.
    Verify(Settings),
    /// Time feature extraction on random images.
    Bench(Settings),
}

fn resolve(cli: &Cli, settings: &Settings) -> Result<RunConfig, config::ConfigError> {
    let mut cfg = RunConfig::defaults();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    cfg.apply_args(&settings.settings)?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (settings, run): (&Settings, fn(&RunConfig) -> Result<(), commands::CliError>) = match &cli.command {
        Command::Extract(s) => (s, commands::extract),
        Command::Bbox(s) => (s, commands::bbox),
        Command::Train(s) => (s, commands::train),
        Command::Eval(s) => (s, commands::eval),
        Command::Verify(s) => (s, commands::verify),
        Command::Bench(s) => (s, commands::bench),
    };
    let cfg = match resolve(&cli, settings) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: configuration error: {e}");
            return ExitCode::from(2);
        }
    };
    if cli.print_config {
        print!("{cfg}");
        return ExitCode::SUCCESS;
    }
    match run(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
