//! Configuration-driven runner, mesh generator and convergence-study driver
//! for the `geoflow` library.
//!
//! The binary is a thin layer over [`run::run`], [`eoc::study`] and
//! [`meshgen`]; each maps its failure to an exit status through
//! [`CliError::exit_code`].

pub mod config;
pub mod eoc;
pub mod presets;
pub mod run;

use std::path::{Path, PathBuf};

use geoflow::mesh::{generate_mesh, write_mesh, MeshSpec};

pub use config::{ConfigError, RunConfig};

/// Failures of a subcommand.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// The configuration or the command line is invalid; nothing was written.
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),

    /// A library call failed outside of time stepping.
    #[error(transparent)]
    Library(#[from] geoflow::Error),

    /// A run stopped early; outputs up to the failing step are in `dir`.
    #[error("run aborted at t = {time} (outputs so far in {}): {source}", dir.display())]
    Aborted {
        dir: PathBuf,
        time: f64,
        #[source]
        source: geoflow::Error,
    },
}

impl CliError {
    /// Exit status: 2 for configuration errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

/// Reads a configuration from a file or a preset name.
pub fn load_config(path: Option<&Path>, preset: Option<&str>) -> Result<RunConfig, CliError> {
    match (path, preset) {
        (Some(p), None) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| ConfigError::general(format!("cannot read {}: {e}", p.display())))?;
            RunConfig::parse(&text, p.parent())
                .map_err(|e| CliError::Config(e.in_file(p.display().to_string())))
        }
        (None, Some(name)) => {
            let text = presets::preset(name).ok_or_else(|| {
                ConfigError::general(format!(
                    "unknown preset `{name}` (available: {})",
                    presets::names().join(", ")
                ))
            })?;
            Ok(RunConfig::parse(text, None)?)
        }
        (Some(_), Some(_)) => Err(CliError::Config(ConfigError::general(
            "give either --config or --preset, not both",
        ))),
        (None, None) => Err(CliError::Config(ConfigError::general(
            "one of --config or --preset is required",
        ))),
    }
}

/// Generates the mesh described by `spec` and writes it to `path`.
pub fn meshgen(spec: &str, path: &Path) -> Result<(), CliError> {
    let spec: MeshSpec = spec
        .parse()
        .map_err(|e: geoflow::Error| ConfigError::general(e.to_string()))?;
    let mesh = generate_mesh(&spec).map_err(|e| ConfigError::general(e.to_string()))?;
    write_mesh(&mesh, path)?;
    Ok(())
}
