mod commands;
mod config;
mod error;
mod output;
mod units;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::Format;
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "uncoupled", version, about = "Linear spectra and SFWM pair rates of coupled racetrack resonators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML, or a CSV/JSON report with an embedded config).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; defaults to the config's `output.path`, else stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads for sweeps and quadrature (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Port transmissions over the sweep.
    Spectrum,
    /// Circulating intensity enhancement over the sweep.
    Enhance,
    /// Channel intensities along the coupler.
    Fields,
    /// CW pair-generation rates.
    Rates,
    /// Biphoton wavefunction for a pulsed pump.
    Biphoton,
}

fn run(cli: &Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let cfg = config::load(path)?;
    let report = match cli.command {
        Command::Spectrum => commands::spectrum(&cfg)?,
        Command::Enhance => commands::enhance(&cfg)?,
        Command::Fields => commands::fields(&cfg)?,
        Command::Rates => commands::rates(&cfg)?,
        Command::Biphoton => commands::biphoton(&cfg)?,
    };
    let format = cli.format.or(cfg.format).unwrap_or(Format::Csv);
    let bytes = output::render(&report, &cfg, format)?;
    let target = cli.out.clone().or_else(|| cfg.path.as_ref().map(PathBuf::from));
    match target {
        Some(p) => std::fs::write(&p, bytes).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        None => std::io::stdout().lock().write_all(&bytes)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
