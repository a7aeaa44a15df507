//! The `eoc` subcommand: errors against an exact radial solution under
//! refinement and the experimental orders of convergence between levels.

use std::fmt::Write as _;
use std::path::Path;

use geoflow::flows::Flow;
use geoflow::mesh::{generate_mesh, MeshSpec};
use geoflow::Mesh;

use crate::config::{ConfigError, EocSpec, FlowSpec, Selector};
use crate::CliError;

/// File name of the machine-readable table inside the output directory.
pub const EOC_FILE: &str = "eoc.csv";

/// One refinement level of a study.
#[derive(Debug, Clone, PartialEq)]
pub struct EocRow {
    /// `J` for curves, the subdivision level for spheres.
    pub level: usize,
    pub vertices: usize,
    /// Relative mesh size `h_ℓ / h_0`.
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    /// `max_k | |X_k(T)| − r(T) |`.
    pub error: f64,
    /// `log₂(e_{ℓ−1} / e_ℓ)`, absent on the first level.
    pub eoc: Option<f64>,
}

/// The exact radius at time `t` for initial radius `r0`.
pub fn exact_radius(selector: Selector, r0: f64, t: f64) -> f64 {
    match selector {
        Selector::CircleMcf => (r0 * r0 - 2.0 * t).sqrt(),
        Selector::SphereMcf => (r0 * r0 - 4.0 * t).sqrt(),
        Selector::CircleWillmore => (r0.powi(4) + 2.0 * t).powf(0.25),
    }
}

fn level_mesh(selector: Selector, level: usize, r0: f64) -> Result<Mesh, CliError> {
    let spec = match selector {
        Selector::CircleMcf | Selector::CircleWillmore => MeshSpec::Circle {
            j: level,
            r: r0,
            perturb: 0.0,
            seed: geoflow::mesh::DEFAULT_SEED,
        },
        Selector::SphereMcf => MeshSpec::Icosphere { level, r: r0 },
    };
    generate_mesh(&spec)
        .map_err(|e| CliError::Config(ConfigError::general(format!("level {level}: {e}"))))
}

/// Relative mesh size of a level: `1/J` for curves, `2^{−level}` for spheres.
fn relative_h(selector: Selector, level: usize) -> f64 {
    match selector {
        Selector::CircleMcf | Selector::CircleWillmore => 1.0 / level as f64,
        Selector::SphereMcf => 0.5f64.powi(level as i32),
    }
}

fn run_level(spec: &EocSpec, flow: &FlowSpec, level: usize) -> Result<EocRow, CliError> {
    let h = relative_h(spec.selector, level) / relative_h(spec.selector, spec.levels[0]);
    let dt = spec.dt * h.powf(spec.dt_exponent);
    let steps = (spec.final_time / dt).ceil().max(1.0) as usize;
    let dt = spec.final_time / steps as f64;
    let mesh = level_mesh(spec.selector, level, spec.radius)?;
    let vertices = mesh.n_vertices();
    let mut f = Flow::new(flow.build(mesh.dim(), dt)?);
    let mut state = f.initialize(mesh)?;
    for _ in 0..steps {
        state = f.step(&state)?.0;
    }
    let r = exact_radius(spec.selector, spec.radius, state.time);
    let error = state
        .mesh
        .points()
        .iter()
        .map(|p| (p.norm() - r).abs())
        .fold(0.0, f64::max);
    Ok(EocRow {
        level,
        vertices,
        h,
        dt,
        steps,
        error,
        eoc: None,
    })
}

/// Runs every level, concurrently unless `serial`, and fills in the orders.
///
/// The time step of level `ℓ` is `Δt_0 (h_ℓ/h_0)^p`, shrunk slightly if
/// needed so that a whole number of steps reaches the final time.
pub fn study(spec: &EocSpec, flow: &FlowSpec, serial: bool) -> Result<Vec<EocRow>, CliError> {
    if spec.levels.len() < 2 {
        return Err(CliError::Config(ConfigError::general("need ≥ 2 levels")));
    }
    let results: Vec<Result<EocRow, CliError>> = if serial {
        spec.levels
            .iter()
            .map(|&l| run_level(spec, flow, l))
            .collect()
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = spec
                .levels
                .iter()
                .map(|&l| s.spawn(move || run_level(spec, flow, l)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("level thread does not panic"))
                .collect()
        })
    };
    let mut rows = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    for i in 1..rows.len() {
        let ratio = rows[i - 1].h / rows[i].h;
        rows[i].eoc = Some((rows[i - 1].error / rows[i].error).ln() / ratio.ln());
    }
    Ok(rows)
}

/// The human-readable table.
pub fn format_table(spec: &EocSpec, rows: &[EocRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{}: T = {}, r0 = {}, dt ~ h^{}",
        spec.selector.name(),
        spec.final_time,
        spec.radius,
        spec.dt_exponent
    );
    let _ = writeln!(
        s,
        "{:>6} {:>8} {:>12} {:>9} {:>12} {:>7}",
        "level", "K", "dt", "steps", "error", "eoc"
    );
    for r in rows {
        let eoc = r.eoc.map_or_else(|| "-".to_string(), |e| format!("{e:.3}"));
        let _ = writeln!(
            s,
            "{:>6} {:>8} {:>12.4e} {:>9} {:>12.4e} {:>7}",
            r.level, r.vertices, r.dt, r.steps, r.error, eoc
        );
    }
    s
}

/// The machine-readable table.
pub fn format_csv(rows: &[EocRow]) -> String {
    let mut s = String::from("level,vertices,h,dt,steps,error,eoc\n");
    for r in rows {
        let eoc = r.eoc.map_or_else(String::new, |e| format!("{e:.16e}"));
        let _ = writeln!(
            s,
            "{},{},{:.16e},{:.16e},{},{:.16e},{}",
            r.level, r.vertices, r.h, r.dt, r.steps, r.error, eoc
        );
    }
    s
}

/// Writes [`EOC_FILE`] into `dir`.
pub fn write_csv(dir: &Path, rows: &[EocRow]) -> Result<(), CliError> {
    let io = |source| {
        CliError::Library(geoflow::Error::Io {
            path: dir.to_path_buf(),
            source,
        })
    };
    std::fs::create_dir_all(dir).map_err(io)?;
    let path = dir.join(EOC_FILE);
    std::fs::write(&path, format_csv(rows))
        .map_err(|source| CliError::Library(geoflow::Error::Io { path, source }))
}
