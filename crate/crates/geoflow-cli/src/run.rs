//! The `run` subcommand: one flow from a configuration to its outputs.
//!
//! A run writes `records.csv` (one diagnostics row per state, starting with
//! the initial one) and mesh snapshots `step_%08d.txt` for curves or
//! `step_%08d.off` for surfaces, at the configured cadence and at the final
//! step. Everything that can be checked without stepping is checked before
//! the output directory is touched.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use geoflow::diagnostics::{format_record, format_vertex_fields, RECORD_HEADER};
use geoflow::flows::{Flow, FlowState};
use geoflow::mesh::{generate_mesh, read_mesh, write_mesh};
use geoflow::Mesh;

use crate::config::{ConfigError, MeshSource, RunConfig};
use crate::CliError;

/// File name of the record stream inside the output directory.
pub const RECORDS_FILE: &str = "records.csv";

/// Snapshot file name for a step of a mesh of the given kind.
pub fn snapshot_name(step: usize, curve: bool) -> String {
    format!("step_{step:08}.{}", if curve { "txt" } else { "off" })
}

/// Loads or generates the initial mesh.
pub fn load_mesh(source: &MeshSource) -> Result<Mesh, CliError> {
    match source {
        MeshSource::Generated(spec) => generate_mesh(spec).map_err(|e| {
            CliError::Config(ConfigError::general(format!(
                "cannot generate `{spec}`: {e}"
            )))
        }),
        MeshSource::File(path) => read_mesh(path)
            .map_err(|e| CliError::Config(ConfigError::general(format!("cannot read mesh: {e}")))),
    }
}

/// Outcome of a completed run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub steps: usize,
    pub final_time: f64,
    pub out_dir: PathBuf,
    pub min_edge: f64,
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| {
        CliError::Library(geoflow::Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

struct Writer {
    dir: PathBuf,
    records: BufWriter<fs::File>,
    vertex_fields: bool,
}

impl Writer {
    fn create(dir: &Path, vertex_fields: bool) -> Result<Writer, CliError> {
        fs::create_dir_all(dir).map_err(io_error(dir))?;
        let path = dir.join(RECORDS_FILE);
        let file = fs::File::create(&path).map_err(io_error(&path))?;
        let mut records = BufWriter::new(file);
        writeln!(records, "{RECORD_HEADER}").map_err(io_error(&path))?;
        Ok(Writer {
            dir: dir.to_path_buf(),
            records,
            vertex_fields,
        })
    }

    fn record(&mut self, line: &str) -> Result<(), CliError> {
        let path = self.dir.join(RECORDS_FILE);
        writeln!(self.records, "{line}").map_err(io_error(&path))
    }

    fn snapshot(&mut self, state: &FlowState) -> Result<(), CliError> {
        let mesh = &state.mesh;
        let path = self.dir.join(snapshot_name(state.step, mesh.is_curve()));
        write_mesh(mesh, &path)?;
        if self.vertex_fields {
            let kappa = state.scalar_curvature();
            let mut cols: Vec<(&str, &[f64])> = Vec::new();
            if let Some(k) = kappa.as_deref() {
                cols.push(("kappa", k));
            }
            let text = format_vertex_fields(mesh, &cols)?;
            let path = path.with_extension("csv");
            fs::write(&path, text).map_err(io_error(&path))?;
        }
        Ok(())
    }

    fn finish(mut self) -> Result<(), CliError> {
        let path = self.dir.join(RECORDS_FILE);
        self.records.flush().map_err(io_error(&path))
    }
}

/// Executes a run. `out` overrides the configured output directory.
///
/// A stepper failure leaves the records and snapshots written so far in
/// place and is returned as [`CliError::Aborted`].
pub fn run(config: &RunConfig, out: Option<&Path>) -> Result<RunSummary, CliError> {
    if config.eoc.is_some() {
        return Err(CliError::Config(ConfigError::general(
            "this configuration describes a convergence study; use `eoc`",
        )));
    }
    let source = config
        .mesh
        .as_ref()
        .ok_or_else(|| CliError::Config(ConfigError::general("missing `[mesh]` section")))?;
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| config.output.dir.clone())
        .ok_or_else(|| {
            CliError::Config(ConfigError::general(
                "no output directory: pass `--out DIR` or set `dir` in `[output]`",
            ))
        })?;
    let (dt, steps) = config.flow.schedule()?;
    let mesh = load_mesh(source)?;
    let flow_config = config.flow.build(mesh.dim(), dt)?;

    let mut flow = Flow::new(flow_config);
    let mut state = flow.initialize(mesh)?;
    let mut writer = Writer::create(&dir, config.output.vertex_fields)?;
    writer.record(&format_record(&flow.record(&state, None)))?;
    writer.snapshot(&state)?;
    let mut min_edge = state.mesh.mesh_quality().min_edge;
    for _ in 0..steps {
        let (next, report) = match flow.step(&state) {
            Ok(r) => r,
            Err(e) => {
                writer.snapshot(&state)?;
                writer.finish()?;
                return Err(CliError::Aborted {
                    dir,
                    time: state.time,
                    source: e,
                });
            }
        };
        state = next;
        min_edge = min_edge.min(state.mesh.mesh_quality().min_edge);
        writer.record(&format_record(&flow.record(&state, Some(&report))))?;
        if state.step % config.output.every == 0 || state.step == steps {
            writer.snapshot(&state)?;
        }
    }
    writer.finish()?;
    Ok(RunSummary {
        steps,
        final_time: state.time,
        out_dir: dir,
        min_edge,
    })
}
