//! Plain-text mesh formats.
//!
//! Curves are stored as one `x y` pair per line in traversal order, closed
//! implicitly. Surfaces use the OFF format: a header line `OFF`, a count line
//! `K J 0`, `K` vertex lines and `J` face lines `3 i j k` with 0-based indices.
//! Coordinates are written with 17 significant digits so that files round-trip
//! exactly.

use nalgebra::Vector3;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::Mesh;
use crate::error::{Error, Result};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(origin: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        origin: origin.to_string(),
        line,
        message: message.into(),
    }
}

fn parse_f64(origin: &str, line: usize, tok: &str) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(origin, line, format!("`{tok}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(origin, line, format!("`{tok}` is not finite")));
    }
    Ok(v)
}

/// Parses a curve from text; blank lines and lines starting with `#` are skipped.
pub fn parse_curve(text: &str, origin: &str) -> Result<Mesh> {
    let mut pts = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .collect();
        if toks.len() != 2 {
            return Err(parse_err(origin, i + 1, "expected two coordinates"));
        }
        pts.push([
            parse_f64(origin, i + 1, toks[0])?,
            parse_f64(origin, i + 1, toks[1])?,
        ]);
    }
    Mesh::curve(pts)
}

/// Parses an OFF surface from text.
pub fn parse_off(text: &str, origin: &str) -> Result<Mesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (ln, header) = lines
        .next()
        .ok_or_else(|| parse_err(origin, 1, "empty file"))?;
    if header != "OFF" {
        return Err(parse_err(origin, ln, "expected header `OFF`"));
    }
    let (ln, counts) = lines
        .next()
        .ok_or_else(|| parse_err(origin, ln, "missing count line"))?;
    let counts: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| parse_err(origin, ln, "malformed count line"))?;
    if counts.len() != 3 {
        return Err(parse_err(origin, ln, "count line must read `K J 0`"));
    }
    let (k, j) = (counts[0], counts[1]);
    let mut pts = Vec::with_capacity(k);
    for _ in 0..k {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(origin, ln, "unexpected end of file in vertex list"))?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(parse_err(origin, ln, "expected three coordinates"));
        }
        pts.push(Vector3::new(
            parse_f64(origin, ln, toks[0])?,
            parse_f64(origin, ln, toks[1])?,
            parse_f64(origin, ln, toks[2])?,
        ));
    }
    let mut faces = Vec::with_capacity(j);
    for _ in 0..j {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(origin, ln, "unexpected end of file in face list"))?;
        let toks: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| parse_err(origin, ln, "malformed face line"))?;
        if toks.len() != 4 || toks[0] != 3 {
            return Err(parse_err(origin, ln, "faces must read `3 i j k`"));
        }
        faces.push([toks[1], toks[2], toks[3]]);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(origin, ln, "trailing content after face list"));
    }
    Mesh::surface_from_vectors(pts, faces)
}

/// Formats a curve in the one-pair-per-line format.
pub fn format_curve(mesh: &Mesh) -> String {
    let mut s = String::new();
    for p in mesh.points() {
        let _ = writeln!(s, "{:.16e} {:.16e}", p.x, p.y);
    }
    s
}

/// Formats a surface in the OFF format.
pub fn format_off(mesh: &Mesh) -> String {
    let mut s = String::from("OFF\n");
    let _ = writeln!(s, "{} {} 0", mesh.n_vertices(), mesh.n_elements());
    for p in mesh.points() {
        let _ = writeln!(s, "{:.16e} {:.16e} {:.16e}", p.x, p.y, p.z);
    }
    for j in 0..mesh.n_elements() {
        let e = mesh.element(j);
        let _ = writeln!(s, "3 {} {} {}", e[0], e[1], e[2]);
    }
    s
}

/// Reads a curve file.
pub fn read_curve(path: &Path) -> Result<Mesh> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_curve(&text, &path.display().to_string())
}

/// Reads an OFF surface file.
pub fn read_off(path: &Path) -> Result<Mesh> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_off(&text, &path.display().to_string())
}

/// Reads a mesh, choosing the format from the extension (`.off` for surfaces).
pub fn read_mesh(path: &Path) -> Result<Mesh> {
    let is_off = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("off"))
        .unwrap_or(false);
    if is_off {
        read_off(path)
    } else {
        read_curve(path)
    }
}

/// Writes a curve file.
pub fn write_curve(mesh: &Mesh, path: &Path) -> Result<()> {
    fs::write(path, format_curve(mesh)).map_err(io_err(path))
}

/// Writes an OFF surface file.
pub fn write_off(mesh: &Mesh, path: &Path) -> Result<()> {
    fs::write(path, format_off(mesh)).map_err(io_err(path))
}

/// Writes a mesh in the format matching its kind.
pub fn write_mesh(mesh: &Mesh, path: &Path) -> Result<()> {
    if mesh.is_curve() {
        write_curve(mesh, path)
    } else {
        write_off(mesh, path)
    }
}
