use std::path::PathBuf;
use std::process::ExitCode;

use aclab_cli::{run, CliError, Command, ExperimentConfig};
use clap::Parser;
use log::{error, info};

/// Runs one consistency experiment and writes report.csv, fields/*.csv and
/// summary.json.
#[derive(Debug, Parser)]
#[command(name = "aclab", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed; overrides `seed` in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Only log errors.
    #[arg(long)]
    quiet: bool,
}

fn execute(args: &Args) -> Result<bool, CliError> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let out = args
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .ok_or_else(|| CliError::Config("no output directory: pass --out or set output_dir".into()))?;
    let report = run(args.command, &config)?;
    report.write(&out)?;
    info!(
        "{}: {} rows, {} failed, outputs in {}",
        args.command.name(),
        report.rows().len(),
        report.failures(),
        out.display()
    );
    Ok(report.passed())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let level = if args.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            error!("at least one bound was violated");
            ExitCode::from(3)
        }
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
