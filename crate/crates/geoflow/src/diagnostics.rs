//! Energies, conserved quantities, stability slacks and the per-step record
//! stream written by runs.

use std::io::{self, Write};

use nalgebra::Vector3;

use crate::aniso::Anisotropy;
use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Relative tolerance applied to stability slacks: a step passes when
/// `slack ≤ STABILITY_TOL · energy_before`.
pub const STABILITY_TOL: f64 = 1e-9;

/// CSV header of the record stream.
pub const RECORD_HEADER: &str =
    "step,time,area,area_gamma,volume,willmore,ade,stab_slack,min_edge,max_edge,ratio,conf_res,iters";

/// Parameters of the spontaneous-curvature and area-difference energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdeParams {
    /// Spontaneous curvature `κ̄`.
    pub kappa_bar: f64,
    /// Area-difference penalty `β ≥ 0`.
    pub beta: f64,
    /// Preferred integrated mean curvature `M₀`.
    pub m0: f64,
}

impl Default for AdeParams {
    fn default() -> Self {
        AdeParams {
            kappa_bar: 0.0,
            beta: 0.0,
            m0: 0.0,
        }
    }
}

/// One row of the record stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub time: f64,
    /// Total measure `|Γ|`.
    pub area: f64,
    /// Anisotropic measure `|Γ|_γ = ⟨1, γ(ν)⟩`.
    pub area_gamma: f64,
    /// Enclosed volume (area for curves).
    pub volume: f64,
    /// Willmore energy `½ (|κ|^h)²`.
    pub willmore: f64,
    /// Spontaneous-curvature and area-difference energy.
    pub ade: f64,
    /// Signed stability slack of the step that produced this state (0 at step 0).
    pub stab_slack: f64,
    pub min_edge: f64,
    pub max_edge: f64,
    pub ratio: f64,
    pub conf_res: f64,
    /// Solver or nonlinear iterations of the step.
    pub iters: usize,
}

/// Which stability inequality a scheme satisfies fully discretely.
///
/// `Monitor` marks schemes for which no fully discrete bound is available;
/// their slack is recorded but never asserted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityKind {
    /// `|Γ^{m+1}| + Δt (|κ|^h)² ≤ |Γ^m|`.
    MeanCurvature,
    /// `|Γ^{m+1}| + Δt |∇_s κ|² ≤ |Γ^m|`.
    SurfaceDiffusion,
    /// `|Γ^{m+1}| + Δt ⟨F(κ), κ⟩^h ≤ |Γ^m|`.
    GenericF,
    /// As [`StabilityKind::GenericF`] plus the tangential penalty term.
    Tangential,
    /// `|Γ^{m+1}| + Δt |Γ^{m+1}| ⟨κ, κ⟩^h_I ≤ |Γ^m|` for the equidistributing scheme.
    Equidistributing,
    /// `|Γ^{m+1}| + Δt ⟨Q δX, δX⟩/Δt² ≤ |Γ^m|` for the velocity-mass schemes.
    VelocityMass,
    /// `|Γ^{m+1}|_γ + Δt · dissipation ≤ |Γ^m|_γ`.
    Anisotropic,
    /// Recorded only.
    Monitor,
}

impl StabilityKind {
    /// Whether the bound is proven and therefore asserted.
    pub fn asserted(self) -> bool {
        self != StabilityKind::Monitor
    }
}

/// The terms of a stability inequality for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stability {
    pub kind: StabilityKind,
    /// Energy before the step.
    pub before: f64,
    /// Energy after the step.
    pub after: f64,
    /// Dissipation term, already multiplied by `Δt`.
    pub dissipation: f64,
}

impl Stability {
    /// The signed slack `after + dissipation − before`.
    pub fn slack(&self) -> f64 {
        stability_residual(self.before, self.after, self.dissipation)
    }

    /// Whether the slack is within [`STABILITY_TOL`] relative to the energy before.
    pub fn holds(&self) -> bool {
        self.slack() <= STABILITY_TOL * self.before.abs()
    }
}

/// Signed slack of an energy inequality `after + dissipation ≤ before`.
pub fn stability_residual(before: f64, after: f64, dissipation: f64) -> f64 {
    after + dissipation - before
}

/// Anisotropic measure `Σ_σ |σ| γ(ν_σ)`; the total measure when `aniso` is `None`.
pub fn anisotropic_area(mesh: &Mesh, aniso: Option<&Anisotropy>) -> f64 {
    match aniso {
        None => mesh.area(),
        Some(a) => mesh
            .normals()
            .iter()
            .zip(mesh.measures())
            .map(|(n, m)| m * a.gamma_unchecked(n))
            .sum(),
    }
}

/// Willmore energy `½ ⟨κ, κ⟩^h`.
pub fn willmore_energy(mesh: &Mesh, kappa: &[f64]) -> f64 {
    let m = mesh.lumped_mass();
    0.5 * m.iter().zip(kappa).map(|(m, k)| m * k * k).sum::<f64>()
}

/// Spontaneous-curvature and area-difference energy
/// `½ ⟨(κ − κ̄)², 1⟩^h + ½ β (⟨κ, 1⟩^h − M₀)²`.
pub fn ade_energy(mesh: &Mesh, kappa: &[f64], p: &AdeParams) -> f64 {
    let m = mesh.lumped_mass();
    let bend: f64 = m
        .iter()
        .zip(kappa)
        .map(|(m, k)| m * (k - p.kappa_bar).powi(2))
        .sum();
    let total: f64 = m.iter().zip(kappa).map(|(m, k)| m * k).sum();
    0.5 * bend + 0.5 * p.beta * (total - p.m0).powi(2)
}

/// Signed scalar curvature of a curvature-vector field: `|κ⃗|` with the sign of `κ⃗ · ω`.
pub fn signed_curvature(mesh: &Mesh, kv: &[Vector3<f64>]) -> Vec<f64> {
    mesh.vertex_normals()
        .iter()
        .zip(kv)
        .map(|(w, k)| {
            let n = k.norm();
            if k.dot(w) < 0.0 {
                -n
            } else {
                n
            }
        })
        .collect()
}

/// Energy part of a record, everything but the step bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energies {
    pub area: f64,
    pub area_gamma: f64,
    pub volume: f64,
    pub willmore: f64,
    pub ade: f64,
}

/// Evaluates the energies of a state. The curvature energies are zero when
/// `kappa` is `None`.
pub fn energies(
    mesh: &Mesh,
    kappa: Option<&[f64]>,
    aniso: Option<&Anisotropy>,
    ade: Option<&AdeParams>,
) -> Energies {
    let (willmore, ade) = match kappa {
        Some(k) => (
            willmore_energy(mesh, k),
            ade_energy(mesh, k, ade.unwrap_or(&AdeParams::default())),
        ),
        None => (0.0, 0.0),
    };
    Energies {
        area: mesh.area(),
        area_gamma: anisotropic_area(mesh, aniso),
        volume: mesh.enclosed_volume(),
        willmore,
        ade,
    }
}

/// Builds a full record for a state.
pub fn record(
    step: usize,
    time: f64,
    mesh: &Mesh,
    kappa: Option<&[f64]>,
    aniso: Option<&Anisotropy>,
    ade: Option<&AdeParams>,
    stab_slack: f64,
    iters: usize,
) -> DiagnosticsRecord {
    let e = energies(mesh, kappa, aniso, ade);
    let q = mesh.mesh_quality();
    DiagnosticsRecord {
        step,
        time,
        area: e.area,
        area_gamma: e.area_gamma,
        volume: e.volume,
        willmore: e.willmore,
        ade: e.ade,
        stab_slack,
        min_edge: q.min_edge,
        max_edge: q.max_edge,
        ratio: q.ratio,
        conf_res: q.conformality_residual,
        iters,
    }
}

/// Formats one record as a CSV line (no newline), floats with 17 significant digits.
pub fn format_record(r: &DiagnosticsRecord) -> String {
    let f = |x: f64| format!("{x:.16e}");
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.step,
        f(r.time),
        f(r.area),
        f(r.area_gamma),
        f(r.volume),
        f(r.willmore),
        f(r.ade),
        f(r.stab_slack),
        f(r.min_edge),
        f(r.max_edge),
        f(r.ratio),
        f(r.conf_res),
        r.iters
    )
}

/// Writes the header and all records.
pub fn write_records<W: Write>(mut out: W, records: &[DiagnosticsRecord]) -> io::Result<()> {
    writeln!(out, "{RECORD_HEADER}")?;
    for r in records {
        writeln!(out, "{}", format_record(r))?;
    }
    Ok(())
}

/// Writes the record stream to a file, reporting the path on failure.
pub fn write_records_file(path: &std::path::Path, records: &[DiagnosticsRecord]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    write_records(io::BufWriter::new(file), records).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Parses a record stream produced by [`write_records`].
pub fn parse_records(text: &str) -> Result<Vec<DiagnosticsRecord>> {
    let mut lines = text.lines().enumerate();
    let parse_err = |line: usize, message: String| Error::Parse {
        origin: "records".into(),
        line,
        message,
    };
    match lines.next() {
        Some((_, h)) if h.trim() == RECORD_HEADER => {}
        _ => return Err(parse_err(1, "missing record header".into())),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 13 {
            return Err(parse_err(
                i + 1,
                format!("expected 13 columns, found {}", cols.len()),
            ));
        }
        let fl = |c: usize| -> Result<f64> {
            cols[c]
                .trim()
                .parse()
                .map_err(|_| parse_err(i + 1, format!("bad number '{}'", cols[c])))
        };
        let int = |c: usize| -> Result<usize> {
            cols[c]
                .trim()
                .parse()
                .map_err(|_| parse_err(i + 1, format!("bad integer '{}'", cols[c])))
        };
        out.push(DiagnosticsRecord {
            step: int(0)?,
            time: fl(1)?,
            area: fl(2)?,
            area_gamma: fl(3)?,
            volume: fl(4)?,
            willmore: fl(5)?,
            ade: fl(6)?,
            stab_slack: fl(7)?,
            min_edge: fl(8)?,
            max_edge: fl(9)?,
            ratio: fl(10)?,
            conf_res: fl(11)?,
            iters: int(12)?,
        });
    }
    Ok(out)
}

/// Per-vertex dump `vertex,x,y[,z],<name>...` for a snapshot.
pub fn format_vertex_fields(mesh: &Mesh, columns: &[(&str, &[f64])]) -> Result<String> {
    for (_, c) in columns {
        if c.len() != mesh.n_vertices() {
            return Err(Error::DimensionMismatch {
                expected: mesh.n_vertices(),
                found: c.len(),
            });
        }
    }
    let mut s = String::from(if mesh.is_curve() {
        "vertex,x,y"
    } else {
        "vertex,x,y,z"
    });
    for (name, _) in columns {
        s.push(',');
        s.push_str(name);
    }
    s.push('\n');
    for (k, p) in mesh.points().iter().enumerate() {
        s.push_str(&format!("{k},{:.16e},{:.16e}", p.x, p.y));
        if !mesh.is_curve() {
            s.push_str(&format!(",{:.16e}", p.z));
        }
        for (_, c) in columns {
            s.push_str(&format!(",{:.16e}", c[k]));
        }
        s.push('\n');
    }
    Ok(s)
}
