use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use wittenrate_cli::{
    cmd_evolve, cmd_rates, cmd_scan, cmd_spectrum, cmd_validate, CliError, Outputs, Problem, RunConfig,
};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Spectrum,
    Rates,
    Scan,
    Evolve,
    Validate,
}

/// Spectral gap of the Witten-Schrodinger operator against semiclassical and
/// transition-state rate estimates.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "./out")]
    out: PathBuf,
    /// Overrides `beta` from the config.
    #[arg(long)]
    beta: Option<f64>,
    /// Worker threads for scans (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn run(args: Args) -> Result<(), CliError> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let mut config = RunConfig::load(&args.config)?;
    if args.beta.is_some() {
        config.beta = args.beta;
    }
    let base = args.config.parent().unwrap_or(Path::new("."));
    let problem = Problem::new(config, base)?;
    let mut out = Outputs::new(&args.out)?;
    let stdout = &mut std::io::stdout().lock();
    match args.command {
        Command::Spectrum => cmd_spectrum(&problem, &mut out, stdout),
        Command::Rates => cmd_rates(&problem, &mut out, stdout),
        Command::Scan => cmd_scan(&problem, &mut out, stdout),
        Command::Evolve => cmd_evolve(&problem, &mut out, stdout),
        Command::Validate => cmd_validate(&problem, &mut out, stdout),
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
