//! Closed oriented polyhedral hypersurfaces: polygonal curves in the plane and
//! triangulated surfaces in space.
//!
//! Every point is stored as a [`Vector3`]; planar curves keep a zero third
//! component so that all element formulas are shared between the two cases.
//!
//! # Orientation
//!
//! Curve element `j` joins vertex `j` to vertex `j + 1` (periodically) and has
//! unit normal `ν = (−h_y, h_x) / |h|` for the edge vector `h`, i.e. the edge
//! tangent turned by a counterclockwise quarter-turn. A counterclockwise curve
//! therefore has normals pointing into the enclosed region.
//!
//! Triangle `(q0, q1, q2)` has normal `(q1 − q0) × (q2 − q0)` normalized. The
//! generators order the vertices so that this normal points into the enclosed
//! region as well. With these conventions a circle of radius `r` has discrete
//! mean curvature close to `+1/r` and a sphere close to `+2/r`.

mod generate;
mod io;

pub use generate::{generate_mesh, MeshSpec, DEFAULT_SEED};
pub use io::{
    format_curve, format_off, parse_curve, parse_off, read_curve, read_mesh, read_off, write_curve,
    write_mesh, write_off,
};

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Relative factor of the degeneracy threshold, applied to `diam^(d−1)`.
pub const DEGENERACY_FACTOR: f64 = 1e-14;

/// Relative tolerance for the rank test of the vertex-normal span condition.
pub const SPAN_RANK_TOL: f64 = 1e-10;

/// Absolute tolerance below which a vertex normal counts as zero.
pub const ZERO_NORMAL_TOL: f64 = 1e-12;

/// A closed, oriented polygonal curve (`dim == 2`) or triangle mesh (`dim == 3`).
///
/// A mesh is an immutable snapshot: element normals and measures are computed
/// once at construction, and [`Mesh::with_points`] produces a new snapshot that
/// shares the connectivity.
#[derive(Debug, Clone)]
pub struct Mesh {
    dim: usize,
    points: Vec<Vector3<f64>>,
    conn: Arc<Vec<usize>>,
    vertex_elements: Arc<Vec<Vec<(usize, usize)>>>,
    normals: Vec<Vector3<f64>>,
    measures: Vec<f64>,
}

/// Outcome of the vertex-normal condition check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VertexNormalCheck {
    /// The vertex normals are nonzero and span the ambient space.
    Ok,
    /// The vertex normals span only a subspace of the given dimension.
    FailSpan { rank: usize },
    /// The vertex normal at this vertex vanishes.
    FailZero { vertex: usize },
}

impl VertexNormalCheck {
    /// Converts a failed check into an error.
    pub fn into_result(self) -> Result<()> {
        match self {
            VertexNormalCheck::Ok => Ok(()),
            VertexNormalCheck::FailSpan { rank } => Err(Error::VertexNormals(format!(
                "vertex normals span a subspace of dimension {rank}"
            ))),
            VertexNormalCheck::FailZero { vertex } => Err(Error::VertexNormals(format!(
                "vertex normal vanishes at vertex {vertex}"
            ))),
        }
    }
}

/// Summary of mesh quality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshQuality {
    /// Shortest edge length.
    pub min_edge: f64,
    /// Longest edge length.
    pub max_edge: f64,
    /// Max/min edge length for curves, max/min face area for surfaces.
    pub ratio: f64,
    /// Normalized least-squares residual of the conformality condition.
    pub conformality_residual: f64,
}

impl Mesh {
    /// Builds a closed polygonal curve through the given planar points.
    pub fn curve(points: Vec<[f64; 2]>) -> Result<Mesh> {
        let pts = points
            .iter()
            .map(|p| Vector3::new(p[0], p[1], 0.0))
            .collect();
        Mesh::curve_from_vectors(pts)
    }

    /// Builds a closed polygonal curve from points whose third component is ignored.
    pub fn curve_from_vectors(points: Vec<Vector3<f64>>) -> Result<Mesh> {
        let n = points.len();
        if n < 3 {
            return Err(Error::InvalidMesh(format!(
                "a closed curve needs at least 3 vertices, got {n}"
            )));
        }
        let points: Vec<_> = points
            .into_iter()
            .map(|p| Vector3::new(p.x, p.y, 0.0))
            .collect();
        let conn = (0..n).flat_map(|j| [j, (j + 1) % n]).collect();
        Mesh::build(2, points, conn)
    }

    /// Builds a closed triangulated surface.
    ///
    /// Every edge must be shared by exactly two faces that traverse it in
    /// opposite directions, and every vertex must belong to some face.
    pub fn surface(points: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> Result<Mesh> {
        let pts = points
            .iter()
            .map(|p| Vector3::new(p[0], p[1], p[2]))
            .collect();
        Mesh::surface_from_vectors(pts, faces)
    }

    /// Builds a closed triangulated surface from vector-valued points.
    pub fn surface_from_vectors(points: Vec<Vector3<f64>>, faces: Vec<[usize; 3]>) -> Result<Mesh> {
        let k = points.len();
        if faces.len() < 4 {
            return Err(Error::InvalidMesh(format!(
                "a closed surface needs at least 4 faces, got {}",
                faces.len()
            )));
        }
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (j, f) in faces.iter().enumerate() {
            for &v in f {
                if v >= k {
                    return Err(Error::InvalidMesh(format!(
                        "face {j} references vertex {v} but only {k} vertices exist"
                    )));
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidMesh(format!("face {j} repeats a vertex")));
            }
            for a in 0..3 {
                let e = (f[a], f[(a + 1) % 3]);
                if directed.insert(e, j).is_some() {
                    return Err(Error::InvalidMesh(format!(
                        "directed edge {}->{} appears twice; orientation is inconsistent or the edge is shared by more than two faces",
                        e.0, e.1
                    )));
                }
            }
        }
        for &(a, b) in directed.keys() {
            if !directed.contains_key(&(b, a)) {
                return Err(Error::InvalidMesh(format!(
                    "edge {a}-{b} belongs to a single face; the surface is not closed"
                )));
            }
        }
        let conn = faces.iter().flat_map(|f| f.iter().copied()).collect();
        Mesh::build(3, points, conn)
    }

    fn build(dim: usize, points: Vec<Vector3<f64>>, conn: Vec<usize>) -> Result<Mesh> {
        let n_el = conn.len() / dim;
        let mut vertex_elements = vec![Vec::new(); points.len()];
        for j in 0..n_el {
            for a in 0..dim {
                vertex_elements[conn[j * dim + a]].push((j, a));
            }
        }
        if let Some(v) = vertex_elements.iter().position(|s| s.is_empty()) {
            return Err(Error::InvalidMesh(format!(
                "vertex {v} belongs to no element"
            )));
        }
        if points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidMesh("non-finite vertex coordinate".into()));
        }
        let mut mesh = Mesh {
            dim,
            points,
            conn: Arc::new(conn),
            vertex_elements: Arc::new(vertex_elements),
            normals: Vec::with_capacity(n_el),
            measures: Vec::with_capacity(n_el),
        };
        mesh.compute_geometry()?;
        Ok(mesh)
    }

    fn compute_geometry(&mut self) -> Result<()> {
        let threshold = self.degeneracy_threshold();
        self.normals.clear();
        self.measures.clear();
        for j in 0..self.n_elements() {
            let (nu, m) = raw_normal_and_measure(self.dim, &self.element_points(j));
            if !(m >= threshold) {
                return Err(Error::DegenerateElement {
                    index: j,
                    measure: m,
                    threshold,
                });
            }
            self.normals.push(nu);
            self.measures.push(m);
        }
        Ok(())
    }

    /// Returns a new mesh with the same connectivity and the given vertex positions.
    pub fn with_points(&self, points: Vec<Vector3<f64>>) -> Result<Mesh> {
        if points.len() != self.points.len() {
            return Err(Error::DimensionMismatch {
                expected: self.points.len(),
                found: points.len(),
            });
        }
        if points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidMesh("non-finite vertex coordinate".into()));
        }
        let mut mesh = Mesh {
            dim: self.dim,
            points,
            conn: self.conn.clone(),
            vertex_elements: self.vertex_elements.clone(),
            normals: Vec::with_capacity(self.measures.len()),
            measures: Vec::with_capacity(self.measures.len()),
        };
        if mesh.dim == 2 {
            for p in &mut mesh.points {
                p.z = 0.0;
            }
        }
        mesh.compute_geometry()?;
        Ok(mesh)
    }

    /// Ambient dimension `d` (2 for curves, 3 for surfaces).
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Whether this is a planar curve.
    pub fn is_curve(&self) -> bool {
        self.dim == 2
    }

    /// Number of vertices `K`.
    pub fn n_vertices(&self) -> usize {
        self.points.len()
    }

    /// Number of elements `J`.
    pub fn n_elements(&self) -> usize {
        self.conn.len() / self.dim
    }

    /// Vertex positions.
    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    /// Vertex indices of element `j` (2 for curves, 3 for surfaces).
    pub fn element(&self, j: usize) -> &[usize] {
        &self.conn[j * self.dim..(j + 1) * self.dim]
    }

    /// Flat connectivity array with stride `dim`.
    pub fn connectivity(&self) -> &[usize] {
        &self.conn
    }

    /// Faces of a triangulated surface as index triples.
    pub fn faces(&self) -> Vec<[usize; 3]> {
        assert_eq!(self.dim, 3, "faces() is only defined for surfaces");
        self.conn.chunks(3).map(|c| [c[0], c[1], c[2]]).collect()
    }

    /// Elements containing vertex `k`, each with the local index of `k`.
    pub fn vertex_elements(&self, k: usize) -> &[(usize, usize)] {
        &self.vertex_elements[k]
    }

    /// Vertex positions of element `j`.
    pub fn element_points(&self, j: usize) -> Vec<Vector3<f64>> {
        self.element(j).iter().map(|&k| self.points[k]).collect()
    }

    /// Unit normal of element `j`.
    pub fn normal(&self, j: usize) -> Vector3<f64> {
        self.normals[j]
    }

    /// Unit normals of all elements.
    pub fn normals(&self) -> &[Vector3<f64>] {
        &self.normals
    }

    /// Measure (length or area) of element `j`.
    pub fn measure(&self, j: usize) -> f64 {
        self.measures[j]
    }

    /// Measures of all elements.
    pub fn measures(&self) -> &[f64] {
        &self.measures
    }

    /// Unit normal and measure of element `j`.
    pub fn face_normal_and_measure(&self, j: usize) -> (Vector3<f64>, f64) {
        (self.normals[j], self.measures[j])
    }

    /// Total measure `|Γ|`.
    pub fn area(&self) -> f64 {
        self.measures.iter().sum()
    }

    /// Diagonal of the axis-aligned bounding box.
    pub fn diameter(&self) -> f64 {
        let mut lo = self.points[0];
        let mut hi = self.points[0];
        for p in &self.points {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (hi - lo).norm()
    }

    /// Measure below which an element counts as degenerate: `1e−14 · diam^(d−1)`.
    pub fn degeneracy_threshold(&self) -> f64 {
        DEGENERACY_FACTOR * self.diameter().powi(self.dim as i32 - 1)
    }

    /// Gradients of the local basis functions on element `j`.
    ///
    /// Entry `a` is the surface gradient of the hat function of local vertex `a`;
    /// only the first `dim` entries are meaningful.
    pub fn basis_gradients(&self, j: usize) -> [Vector3<f64>; 3] {
        let e = self.element(j);
        let m = self.measures[j];
        if self.dim == 2 {
            let t = (self.points[e[1]] - self.points[e[0]]) / (m * m);
            [-t, t, Vector3::zeros()]
        } else {
            let n = self.normals[j];
            let q = [self.points[e[0]], self.points[e[1]], self.points[e[2]]];
            let s = 1.0 / (2.0 * m);
            [
                n.cross(&(q[2] - q[1])) * s,
                n.cross(&(q[0] - q[2])) * s,
                n.cross(&(q[1] - q[0])) * s,
            ]
        }
    }

    /// Tangential projection `I − ν ⊗ ν` on element `j`.
    pub fn tangent_projection(&self, j: usize) -> Matrix3<f64> {
        let nu = self.normals[j];
        let mut p = Matrix3::identity() - nu * nu.transpose();
        if self.dim == 2 {
            p[(2, 2)] = 0.0;
        }
        p
    }

    /// Diagonal of the lumped mass matrix, `M_kk = Σ_{σ∋k} |σ| / d`.
    pub fn lumped_mass(&self) -> Vec<f64> {
        let w = 1.0 / self.dim as f64;
        self.vertex_elements
            .iter()
            .map(|s| s.iter().map(|&(j, _)| self.measures[j] * w).sum())
            .collect()
    }

    /// Weighted vertex normals `ω_k = Σ_{σ∋k} |σ| ν_σ / Σ_{σ∋k} |σ|`.
    pub fn vertex_normals(&self) -> Vec<Vector3<f64>> {
        self.vertex_elements
            .iter()
            .map(|s| {
                let mut acc = Vector3::zeros();
                let mut tot = 0.0;
                for &(j, _) in s {
                    acc += self.normals[j] * self.measures[j];
                    tot += self.measures[j];
                }
                acc / tot
            })
            .collect()
    }

    /// Mass-lumped inner product of two scalar vertex fields.
    pub fn lumped_ip(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.check_len(u.len())?;
        self.check_len(v.len())?;
        let m = self.lumped_mass();
        Ok(m.iter().zip(u).zip(v).map(|((m, u), v)| m * u * v).sum())
    }

    /// Mass-lumped inner product of two vector vertex fields.
    pub fn lumped_ip_vec(&self, u: &[Vector3<f64>], v: &[Vector3<f64>]) -> Result<f64> {
        self.check_len(u.len())?;
        self.check_len(v.len())?;
        let m = self.lumped_mass();
        Ok(m.iter().zip(u).zip(v).map(|((m, u), v)| m * u.dot(v)).sum())
    }

    /// Mass-lumped norm of a scalar vertex field.
    pub fn lumped_norm(&self, u: &[f64]) -> Result<f64> {
        Ok(self.lumped_ip(u, u)?.sqrt())
    }

    /// Mass-lumped norm of a vector vertex field.
    pub fn lumped_norm_vec(&self, u: &[Vector3<f64>]) -> Result<f64> {
        Ok(self.lumped_ip_vec(u, u)?.sqrt())
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.n_vertices() {
            return Err(Error::DimensionMismatch {
                expected: self.n_vertices(),
                found: n,
            });
        }
        Ok(())
    }

    /// Enclosed volume (area for curves) computed from the divergence theorem,
    /// positive for the standard orientation.
    pub fn signed_volume(&self) -> f64 {
        let d = self.dim as f64;
        let mut acc = 0.0;
        for j in 0..self.n_elements() {
            let c: Vector3<f64> = self
                .element(j)
                .iter()
                .map(|&k| self.points[k])
                .sum::<Vector3<f64>>()
                / d;
            acc += c.dot(&self.normals[j]) * self.measures[j];
        }
        -acc / d
    }

    /// Absolute value of [`Mesh::signed_volume`].
    pub fn enclosed_volume(&self) -> f64 {
        self.signed_volume().abs()
    }

    /// Shoelace area of a curve, positive for counterclockwise traversal.
    pub fn shoelace_area(&self) -> f64 {
        assert!(self.is_curve(), "shoelace area is only defined for curves");
        let n = self.points.len();
        (0..n)
            .map(|j| {
                let p = self.points[j];
                let q = self.points[(j + 1) % n];
                p.x * q.y - q.x * p.y
            })
            .sum::<f64>()
            / 2.0
    }

    /// Checks that the vertex normals are nonzero and span the ambient space.
    pub fn check_vertex_normals(&self) -> VertexNormalCheck {
        let omega = self.vertex_normals();
        if let Some(k) = omega.iter().position(|w| w.norm() <= ZERO_NORMAL_TOL) {
            return VertexNormalCheck::FailZero { vertex: k };
        }
        let rank = normal_span_rank(&omega, self.dim);
        if rank < self.dim {
            VertexNormalCheck::FailSpan { rank }
        } else {
            VertexNormalCheck::Ok
        }
    }

    /// Lengths of all distinct edges (each edge listed once).
    pub fn edge_lengths(&self) -> Vec<f64> {
        if self.dim == 2 {
            return self.measures.clone();
        }
        let mut out = Vec::with_capacity(3 * self.n_elements() / 2);
        for j in 0..self.n_elements() {
            let e = self.element(j);
            for a in 0..3 {
                let (u, v) = (e[a], e[(a + 1) % 3]);
                if u < v {
                    out.push((self.points[u] - self.points[v]).norm());
                }
            }
        }
        out
    }

    /// Edge-length statistics, element-measure ratio and conformality residual.
    pub fn mesh_quality(&self) -> MeshQuality {
        let edges = self.edge_lengths();
        let min_edge = edges.iter().copied().fold(f64::INFINITY, f64::min);
        let max_edge = edges.iter().copied().fold(0.0, f64::max);
        let ratio = if self.dim == 2 {
            max_edge / min_edge
        } else {
            let lo = self.measures.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = self.measures.iter().copied().fold(0.0, f64::max);
            hi / lo
        };
        MeshQuality {
            min_edge,
            max_edge,
            ratio,
            conformality_residual: self.conformality_residual(),
        }
    }

    /// Discrete Laplace–Beltrami curvature vector `κ⃗_k = −(A X)_k / M_kk`.
    pub fn laplace_curvature_vector(&self) -> Vec<Vector3<f64>> {
        let mut ax = vec![Vector3::zeros(); self.n_vertices()];
        for j in 0..self.n_elements() {
            let g = self.basis_gradients(j);
            let e = self.element(j);
            let m = self.measures[j];
            for a in 0..self.dim {
                for b in 0..self.dim {
                    let s = m * g[a].dot(&g[b]);
                    ax[e[a]] += self.points[e[b]] * s;
                }
            }
        }
        let mass = self.lumped_mass();
        ax.iter().zip(&mass).map(|(v, m)| -v / *m).collect()
    }

    /// Least-squares residual of `κ_k ω_k = κ⃗_k` over scalar `κ_k`, measured in
    /// the lumped norm and normalized by the lumped norm of `κ⃗`.
    pub fn conformality_residual(&self) -> f64 {
        let kv = self.laplace_curvature_vector();
        let omega = self.vertex_normals();
        let res: Vec<Vector3<f64>> = kv
            .iter()
            .zip(&omega)
            .map(|(k, w)| {
                let w2 = w.norm_squared();
                if w2 > 0.0 {
                    k - w * (k.dot(w) / w2)
                } else {
                    *k
                }
            })
            .collect();
        let num = self.lumped_norm_vec(&res).unwrap_or(0.0);
        let den = self.lumped_norm_vec(&kv).unwrap_or(0.0);
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }
}

/// Unit normal and measure of a simplex given by its vertices, without any
/// degeneracy check.
pub fn raw_normal_and_measure(dim: usize, q: &[Vector3<f64>]) -> (Vector3<f64>, f64) {
    if dim == 2 {
        let h = q[1] - q[0];
        let m = (h.x * h.x + h.y * h.y).sqrt();
        (Vector3::new(-h.y, h.x, 0.0) / m, m)
    } else {
        let c = (q[1] - q[0]).cross(&(q[2] - q[0]));
        let n = c.norm();
        (c / n, 0.5 * n)
    }
}

/// Numerical rank of `span{ω_k}` using the eigenvalues of `Σ ω_k ω_kᵀ`.
pub fn normal_span_rank(omega: &[Vector3<f64>], dim: usize) -> usize {
    let mut s = Matrix3::zeros();
    for w in omega {
        s += w * w.transpose();
    }
    let block = s.fixed_view::<3, 3>(0, 0).into_owned();
    let eig = SymmetricEigen::new(block);
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let ev = &ev[..dim];
    let largest = ev[0];
    if largest <= 0.0 {
        return 0;
    }
    ev.iter().filter(|&&l| l > SPAN_RANK_TOL * largest).count()
}
