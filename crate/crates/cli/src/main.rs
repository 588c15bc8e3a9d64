// Negated comparisons are used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::{Artifact, CliError};
use config::RunConfig;

#[derive(Parser)]
#[command(name = "sqvac", version, about = "Qubit decay in a broadband squeezed vacuum")]
struct Cli {
    /// TOML run configuration; the bundled device configuration when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Both)]
    format: Format,
    /// Reserved; every pipeline is currently deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Dressed spectrum and cavity-quadrature matrix elements.
    Polariton,
    /// Ramsey fringes with and without squeezing, plus fitted decay times.
    Ramsey,
    /// Tomography trajectory of a prepared state, optionally driven.
    Trajectory,
    /// Wigner distribution of the reservoir.
    Wigner,
    /// Effective Tx, Ty versus squeezing detuning.
    SweepDetuning,
    /// Axis timescales versus photon number for a fixed efficiency.
    SweepGain,
    /// Infers N, M from decay traces.
    Estimate,
    /// Runs every acceptance criterion and prints a pass/fail table.
    Validate,
    /// Prints the bundled configuration.
    ShowConfig,
}

fn write_artifacts(dir: &Path, format: Format, artifacts: &[Artifact]) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let write = |name: String, body: &str| {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    };
    for a in artifacts {
        // JSON-only artifacts are written whatever the format.
        let want_json = format != Format::Csv || a.csv.is_none();
        if let (Some(csv), true) = (&a.csv, format != Format::Json) {
            write(format!("{}.csv", a.stem), csv)?;
        }
        if let (Some(json), true) = (&a.json, want_json) {
            let mut text = serde_json::to_string_pretty(json).expect("json value serializes");
            text.push('\n');
            write(format!("{}.json", a.stem), &text)?;
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Command::ShowConfig = cli.command {
        print!("{}", config::BUNDLED_CONF);
        return Ok(());
    }
    let cfg = match &cli.config {
        Some(p) => RunConfig::from_path(p).map_err(|e| CliError::Config(e.0))?,
        None => RunConfig::bundled(),
    };
    let (artifacts, failed) = match cli.command {
        Command::Polariton => (commands::polariton(&cfg)?, 0),
        Command::Ramsey => (commands::ramsey_panels(&cfg)?, 0),
        Command::Trajectory => (commands::trajectory(&cfg)?, 0),
        Command::Wigner => (commands::wigner_grid(&cfg)?, 0),
        Command::SweepDetuning => (commands::sweep_detuning(&cfg)?, 0),
        Command::SweepGain => (commands::sweep_gain(&cfg)?, 0),
        Command::Estimate => (commands::estimate(&cfg)?, 0),
        Command::Validate => commands::validate(&cfg)?,
        Command::ShowConfig => unreachable!(),
    };
    write_artifacts(&cli.out, cli.format, &artifacts)?;
    if failed > 0 {
        return Err(CliError::AcceptanceFailed(failed));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
