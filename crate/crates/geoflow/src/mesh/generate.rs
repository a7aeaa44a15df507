//! Mesh generators for the standard test shapes.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use super::Mesh;
use crate::error::{Error, Result};

/// Seed used by perturbed generators when none is given.
pub const DEFAULT_SEED: u64 = 20_080_101;

/// Description of a generated mesh.
///
/// The textual form accepted by [`FromStr`] mirrors the variant names, e.g.
/// `circle(128,1,0)`, `circle(64,1,0.2,7)` (with seed), `ellipse(128,2,1)`,
/// `closed_spiral(1024,3)`, `icosphere(3,1)`, `torus(16,8,2,0.5)` and
/// `cube_projected_sphere(2,1)`.
#[derive(Debug, Clone, PartialEq)]
pub enum MeshSpec {
    /// Regular `j`-gon inscribed in a circle of radius `r`, with optional
    /// seeded radial noise of relative amplitude `perturb`.
    Circle {
        j: usize,
        r: f64,
        perturb: f64,
        seed: u64,
    },
    /// Polygon with vertices at equally spaced parameter values on an ellipse.
    Ellipse { j: usize, a: f64, b: f64 },
    /// Closed spiral band with `turns` windings, vertices equidistributed in arc length.
    ClosedSpiral { j: usize, turns: f64 },
    /// Subdivided icosahedron projected onto a sphere.
    Icosphere { level: usize, r: f64 },
    /// Torus with `m` segments around the main circle and `n` around the tube.
    Torus {
        m: usize,
        n: usize,
        big_r: f64,
        small_r: f64,
    },
    /// Subdivided cube (`2^level` cells per edge) projected onto a sphere.
    CubeProjectedSphere { level: usize, r: f64 },
}

impl fmt::Display for MeshSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshSpec::Circle {
                j,
                r,
                perturb,
                seed,
            } => {
                if *seed == DEFAULT_SEED {
                    write!(f, "circle({j},{r},{perturb})")
                } else {
                    write!(f, "circle({j},{r},{perturb},{seed})")
                }
            }
            MeshSpec::Ellipse { j, a, b } => write!(f, "ellipse({j},{a},{b})"),
            MeshSpec::ClosedSpiral { j, turns } => write!(f, "closed_spiral({j},{turns})"),
            MeshSpec::Icosphere { level, r } => write!(f, "icosphere({level},{r})"),
            MeshSpec::Torus {
                m,
                n,
                big_r,
                small_r,
            } => write!(f, "torus({m},{n},{big_r},{small_r})"),
            MeshSpec::CubeProjectedSphere { level, r } => {
                write!(f, "cube_projected_sphere({level},{r})")
            }
        }
    }
}

impl FromStr for MeshSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |msg: &str| Error::InvalidParameter(format!("mesh spec `{s}`: {msg}"));
        let open = s.find('(').ok_or_else(|| bad("expected name(args)"))?;
        if !s.ends_with(')') {
            return Err(bad("missing closing parenthesis"));
        }
        let name = s[..open].trim();
        let args: Vec<&str> = s[open + 1..s.len() - 1]
            .split(',')
            .map(str::trim)
            .filter(|a| !a.is_empty())
            .collect();
        let num = |i: usize| -> Result<f64> {
            args.get(i)
                .ok_or_else(|| bad("too few arguments"))?
                .parse::<f64>()
                .map_err(|_| bad(&format!("argument {} is not a number", i + 1)))
        };
        let int = |i: usize| -> Result<usize> {
            let v = num(i)?;
            if v < 0.0 || v.fract() != 0.0 {
                return Err(bad(&format!(
                    "argument {} must be a nonnegative integer",
                    i + 1
                )));
            }
            Ok(v as usize)
        };
        let arity = |lo: usize, hi: usize| -> Result<()> {
            if args.len() < lo || args.len() > hi {
                Err(bad(&format!(
                    "expected {lo}..={hi} arguments, got {}",
                    args.len()
                )))
            } else {
                Ok(())
            }
        };
        let spec = match name {
            "circle" => {
                arity(2, 4)?;
                MeshSpec::Circle {
                    j: int(0)?,
                    r: num(1)?,
                    perturb: if args.len() > 2 { num(2)? } else { 0.0 },
                    seed: if args.len() > 3 {
                        int(3)? as u64
                    } else {
                        DEFAULT_SEED
                    },
                }
            }
            "ellipse" => {
                arity(3, 3)?;
                MeshSpec::Ellipse {
                    j: int(0)?,
                    a: num(1)?,
                    b: num(2)?,
                }
            }
            "closed_spiral" => {
                arity(2, 2)?;
                MeshSpec::ClosedSpiral {
                    j: int(0)?,
                    turns: num(1)?,
                }
            }
            "icosphere" => {
                arity(1, 2)?;
                MeshSpec::Icosphere {
                    level: int(0)?,
                    r: if args.len() > 1 { num(1)? } else { 1.0 },
                }
            }
            "torus" => {
                arity(4, 4)?;
                MeshSpec::Torus {
                    m: int(0)?,
                    n: int(1)?,
                    big_r: num(2)?,
                    small_r: num(3)?,
                }
            }
            "cube_projected_sphere" => {
                arity(1, 2)?;
                MeshSpec::CubeProjectedSphere {
                    level: int(0)?,
                    r: if args.len() > 1 { num(1)? } else { 1.0 },
                }
            }
            _ => return Err(bad("unknown generator name")),
        };
        Ok(spec)
    }
}

/// Generates the mesh described by `spec`.
pub fn generate_mesh(spec: &MeshSpec) -> Result<Mesh> {
    let positive = |name: &str, v: f64| -> Result<()> {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "{name} must be positive, got {v}"
            )))
        }
    };
    let at_least_3 = |name: &str, v: usize| -> Result<()> {
        if v >= 3 {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "{name} must be at least 3, got {v}"
            )))
        }
    };
    match *spec {
        MeshSpec::Circle {
            j,
            r,
            perturb,
            seed,
        } => {
            at_least_3("J", j)?;
            positive("r", r)?;
            if !(0.0..1.0).contains(&perturb) {
                return Err(Error::InvalidParameter(format!(
                    "perturb must lie in [0, 1), got {perturb}"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts = (0..j)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / j as f64;
                    let rho = if perturb > 0.0 {
                        r * (1.0 + perturb * rng.gen_range(-1.0..=1.0))
                    } else {
                        r
                    };
                    [rho * t.cos(), rho * t.sin()]
                })
                .collect();
            Mesh::curve(pts)
        }
        MeshSpec::Ellipse { j, a, b } => {
            at_least_3("J", j)?;
            positive("a", a)?;
            positive("b", b)?;
            let pts = (0..j)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / j as f64;
                    [a * t.cos(), b * t.sin()]
                })
                .collect();
            Mesh::curve(pts)
        }
        MeshSpec::ClosedSpiral { j, turns } => {
            at_least_3("J", j)?;
            positive("turns", turns)?;
            Mesh::curve(spiral_points(j, turns))
        }
        MeshSpec::Icosphere { level, r } => {
            positive("r", r)?;
            let (pts, faces) = icosphere(level, r);
            Mesh::surface_from_vectors(pts, faces)
        }
        MeshSpec::Torus {
            m,
            n,
            big_r,
            small_r,
        } => {
            at_least_3("m", m)?;
            at_least_3("n", n)?;
            positive("R", big_r)?;
            positive("r", small_r)?;
            if small_r >= big_r {
                return Err(Error::InvalidParameter(format!(
                    "tube radius {small_r} must be smaller than the main radius {big_r}"
                )));
            }
            let (pts, faces) = torus(m, n, big_r, small_r);
            Mesh::surface_from_vectors(pts, faces)
        }
        MeshSpec::CubeProjectedSphere { level, r } => {
            positive("r", r)?;
            if level > 10 {
                return Err(Error::InvalidParameter(format!(
                    "level {level} is too large"
                )));
            }
            let (pts, faces) = cube_sphere(level, r);
            Mesh::surface_from_vectors(pts, faces)
        }
    }
}

/// Orders the face so that its normal points towards the origin.
fn orient_towards_origin(pts: &[Vector3<f64>], f: [usize; 3]) -> [usize; 3] {
    let (a, b, c) = (pts[f[0]], pts[f[1]], pts[f[2]]);
    let n = (b - a).cross(&(c - a));
    if n.dot(&(a + b + c)) > 0.0 {
        [f[0], f[2], f[1]]
    } else {
        f
    }
}

fn icosphere(level: usize, r: f64) -> (Vec<Vector3<f64>>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut pts: Vec<Vector3<f64>> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|p| Vector3::new(p[0], p[1], p[2]).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut midpoint = |a: usize, b: usize, pts: &mut Vec<Vector3<f64>>| -> usize {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                pts.push(((pts[a] + pts[b]) / 2.0).normalize());
                pts.len() - 1
            })
        };
        for f in &faces {
            let ab = midpoint(f[0], f[1], &mut pts);
            let bc = midpoint(f[1], f[2], &mut pts);
            let ca = midpoint(f[2], f[0], &mut pts);
            next.push([f[0], ab, ca]);
            next.push([f[1], bc, ab]);
            next.push([f[2], ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    let faces = faces
        .into_iter()
        .map(|f| orient_towards_origin(&pts, f))
        .collect();
    (pts.into_iter().map(|p| p * r).collect(), faces)
}

fn torus(m: usize, n: usize, big_r: f64, small_r: f64) -> (Vec<Vector3<f64>>, Vec<[usize; 3]>) {
    let mut pts = Vec::with_capacity(m * n);
    for i in 0..m {
        let u = 2.0 * PI * i as f64 / m as f64;
        for j in 0..n {
            let v = 2.0 * PI * j as f64 / n as f64;
            let rho = big_r + small_r * v.cos();
            pts.push(Vector3::new(
                rho * u.cos(),
                rho * u.sin(),
                small_r * v.sin(),
            ));
        }
    }
    let id = |i: usize, j: usize| (i % m) * n + (j % n);
    let mut faces = Vec::with_capacity(2 * m * n);
    for i in 0..m {
        for j in 0..n {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    // Orient so the normal of the first face points towards the tube centre line.
    let (a, b, c) = (pts[faces[0][0]], pts[faces[0][1]], pts[faces[0][2]]);
    let nrm = (b - a).cross(&(c - a));
    let centroid = (a + b + c) / 3.0;
    let axis_pt = {
        let planar = Vector3::new(centroid.x, centroid.y, 0.0);
        planar.normalize() * big_r
    };
    if nrm.dot(&(axis_pt - centroid)) < 0.0 {
        for f in &mut faces {
            f.swap(1, 2);
        }
    }
    (pts, faces)
}

fn cube_sphere(level: usize, r: f64) -> (Vec<Vector3<f64>>, Vec<[usize; 3]>) {
    let n = 1i64 << level;
    let mut index: HashMap<[i64; 3], usize> = HashMap::new();
    let mut grid: Vec<[i64; 3]> = Vec::new();
    let mut faces = Vec::new();
    let mut vid = |p: [i64; 3], grid: &mut Vec<[i64; 3]>| -> usize {
        *index.entry(p).or_insert_with(|| {
            grid.push(p);
            grid.len() - 1
        })
    };
    for axis in 0..3 {
        for side in [-n, n] {
            let (u_ax, v_ax) = ((axis + 1) % 3, (axis + 2) % 3);
            for i in 0..n {
                for j in 0..n {
                    let corner = |di: i64, dj: i64| {
                        let mut p = [0i64; 3];
                        p[axis] = side;
                        p[u_ax] = -n + 2 * (i + di);
                        p[v_ax] = -n + 2 * (j + dj);
                        p
                    };
                    let a = vid(corner(0, 0), &mut grid);
                    let b = vid(corner(1, 0), &mut grid);
                    let c = vid(corner(1, 1), &mut grid);
                    let d = vid(corner(0, 1), &mut grid);
                    faces.push([a, b, c]);
                    faces.push([a, c, d]);
                }
            }
        }
    }
    let pts: Vec<Vector3<f64>> = grid
        .iter()
        .map(|p| Vector3::new(p[0] as f64, p[1] as f64, p[2] as f64).normalize() * r)
        .collect();
    let faces = faces
        .into_iter()
        .map(|f| orient_towards_origin(&pts, f))
        .collect();
    (pts, faces)
}

/// Closed spiral band: an Archimedean centre line `ρ = p φ / 2π` with pitch
/// `p = 1 / (turns + 1)`, thickened to half-width `p / 8` and closed by
/// semicircular caps. The outline is resampled to `j` vertices of equal arc
/// length and traversed counterclockwise.
fn spiral_points(j: usize, turns: f64) -> Vec<[f64; 2]> {
    let pitch = 1.0 / (turns + 1.0);
    let w = pitch / 8.0;
    let phi0 = 2.0 * PI;
    let phi1 = phi0 + 2.0 * PI * turns;
    let centre = |phi: f64| {
        let rho = pitch * phi / (2.0 * PI);
        [rho * phi.cos(), rho * phi.sin()]
    };
    let frame = |phi: f64| {
        let b = pitch / (2.0 * PI);
        let rho = b * phi;
        let d = [
            b * phi.cos() - rho * phi.sin(),
            b * phi.sin() + rho * phi.cos(),
        ];
        let l = (d[0] * d[0] + d[1] * d[1]).sqrt();
        let t = [d[0] / l, d[1] / l];
        (t, [-t[1], t[0]])
    };
    let samples = 4000 * (turns.ceil() as usize).max(1);
    let mut dense: Vec<[f64; 2]> = Vec::new();
    for i in 0..=samples {
        let phi = phi0 + (phi1 - phi0) * i as f64 / samples as f64;
        let (c, (_, nl)) = (centre(phi), frame(phi));
        dense.push([c[0] - w * nl[0], c[1] - w * nl[1]]);
    }
    let cap = 400;
    let (c1, (t1, n1)) = (centre(phi1), frame(phi1));
    for i in 1..cap {
        let th = PI * i as f64 / cap as f64;
        dense.push([
            c1[0] - w * th.cos() * n1[0] + w * th.sin() * t1[0],
            c1[1] - w * th.cos() * n1[1] + w * th.sin() * t1[1],
        ]);
    }
    for i in (0..=samples).rev() {
        let phi = phi0 + (phi1 - phi0) * i as f64 / samples as f64;
        let (c, (_, nl)) = (centre(phi), frame(phi));
        dense.push([c[0] + w * nl[0], c[1] + w * nl[1]]);
    }
    let (c0, (t0, n0)) = (centre(phi0), frame(phi0));
    for i in 1..cap {
        let th = PI * i as f64 / cap as f64;
        dense.push([
            c0[0] + w * th.cos() * n0[0] - w * th.sin() * t0[0],
            c0[1] + w * th.cos() * n0[1] - w * th.sin() * t0[1],
        ]);
    }
    let signed: f64 = (0..dense.len())
        .map(|i| {
            let p = dense[i];
            let q = dense[(i + 1) % dense.len()];
            p[0] * q[1] - q[0] * p[1]
        })
        .sum();
    if signed < 0.0 {
        dense.reverse();
    }
    resample_closed(&dense, j)
}

/// Resamples a closed polyline to `j` points equally spaced in arc length.
fn resample_closed(dense: &[[f64; 2]], j: usize) -> Vec<[f64; 2]> {
    let n = dense.len();
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0.0);
    for i in 0..n {
        let p = dense[i];
        let q = dense[(i + 1) % n];
        let l = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
        cum.push(cum[i] + l);
    }
    let total = cum[n];
    let mut out = Vec::with_capacity(j);
    let mut seg = 0;
    for k in 0..j {
        let s = total * k as f64 / j as f64;
        while cum[seg + 1] < s {
            seg += 1;
        }
        let l = cum[seg + 1] - cum[seg];
        let a = if l > 0.0 { (s - cum[seg]) / l } else { 0.0 };
        let p = dense[seg];
        let q = dense[(seg + 1) % n];
        out.push([p[0] + a * (q[0] - p[0]), p[1] + a * (q[1] - p[1])]);
    }
    out
}
