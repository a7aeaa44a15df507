use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use geoflow_cli::{eoc, load_config, meshgen, run, CliError};

#[derive(Parser)]
#[command(
    name = "geoflow",
    version,
    about = "Parametric finite-element curvature flows"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Source {
    /// Configuration file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Bundled configuration.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Output directory, overriding `dir` in `[output]`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Deterministic single-threaded execution; `--serial false` lets
    /// convergence studies run their levels concurrently.
    #[arg(long, value_name = "BOOL", default_value_t = true, num_args = 0..=1,
          default_missing_value = "true", action = clap::ArgAction::Set)]
    serial: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one flow and write records and snapshots.
    Run(Source),
    /// Run a convergence study against an exact solution.
    Eoc(Source),
    /// Generate a mesh, e.g. `icosphere(2,1)`, and write it to a file.
    Meshgen {
        /// Generator description.
        spec: String,
        /// Output file (`.off` for surfaces).
        path: PathBuf,
    },
}

/// Attributes configuration errors found after parsing to the config file.
fn from_config<T>(s: &Source, r: Result<T, CliError>) -> Result<T, CliError> {
    match (r, &s.config) {
        (Err(CliError::Config(e)), Some(path)) if e.origin.is_none() => {
            Err(CliError::Config(e.in_file(path.display().to_string())))
        }
        (r, _) => r,
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(s) => {
            let config = load_config(s.config.as_deref(), s.preset.as_deref())?;
            let summary = from_config(&s, run::run(&config, s.out.as_deref()))?;
            println!(
                "completed {} steps to t = {} (min edge {:e}); outputs in {}",
                summary.steps,
                summary.final_time,
                summary.min_edge,
                summary.out_dir.display()
            );
            Ok(())
        }
        Command::Eoc(s) => {
            let config = load_config(s.config.as_deref(), s.preset.as_deref())?;
            let spec = config
                .eoc
                .as_ref()
                .ok_or_else(|| geoflow_cli::ConfigError::general("missing `[eoc]` section"))?;
            let rows = from_config(&s, eoc::study(spec, &config.flow, s.serial))?;
            print!("{}", eoc::format_table(spec, &rows));
            if let Some(dir) = s.out.as_deref().or(config.output.dir.as_deref()) {
                eoc::write_csv(dir, &rows)?;
            }
            Ok(())
        }
        Command::Meshgen { spec, path } => meshgen(&spec, &path),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
