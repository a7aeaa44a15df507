//! Discrete curvature on a fixed mesh: the Laplace–Beltrami curvature vector,
//! the coupled curvature system and approximations of the Weingarten map.

use nalgebra::{Matrix3, Vector3};

use crate::assembly::{consistent_mass, flatten, unflatten, AssembledOperators};
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, SaddleSystem, Solver, SparseLu};
use crate::mesh::{Mesh, ZERO_NORMAL_TOL};

/// Curvature vector `κ⃗` with `⟨κ⃗, η⟩^h = −⟨∇_s id, ∇_s η⟩` for all `η`.
pub fn lb_curvature_vector(mesh: &Mesh) -> Vec<Vector3<f64>> {
    mesh.laplace_curvature_vector()
}

/// Solution of the coupled curvature system.
#[derive(Debug, Clone)]
pub struct CurvatureResult {
    /// Scalar mean curvature `κ` at the vertices.
    pub kappa: Vec<f64>,
    /// Relaxed vertex positions `X`.
    pub x: Vec<Vector3<f64>>,
    /// Max-norm residual of the normal constraint `⟨X − id, χ ν⟩^h = 0`.
    pub constraint_residual: f64,
    /// Max-norm residual of the curvature identity.
    pub curvature_residual: f64,
}

/// Solves `⟨X − id, χ ν⟩^h = 0`, `⟨κ ν, η⟩^h + ⟨∇_s X, ∇_s η⟩ = 0`.
///
/// The system is uniquely solvable when the vertex normals span the ambient
/// space; otherwise the factorization reports a singular matrix.
pub fn bgn_curvature(mesh: &Mesh, solver: &mut Solver) -> Result<CurvatureResult> {
    let d = mesh.dim();
    let k = mesh.n_vertices();
    let ops = AssembledOperators::new(mesh);
    let x0 = flatten(mesh.points(), d);
    let ax = ops.a_vec.mul_vec(&x0);
    let sys = SaddleSystem {
        a11: CsrMatrix::diagonal_matrix(&vec![0.0; k]),
        a12: ops.n.transpose().scaled(-1.0),
        a21: ops.n.clone(),
        a22: ops.a_vec.clone(),
        rhs1: vec![0.0; k],
        rhs2: ax.iter().map(|v| -v).collect(),
    };
    let sol = solver
        .solve_saddle_direct(&sys)
        .map_err(|e| Error::solve("curvature system", e))?;
    let r1 = ops.n.mul_transpose_vec(&sol.x2);
    let nk = ops.n.mul_vec(&sol.x1);
    let adx = ops.a_vec.mul_vec(&sol.x2);
    let r2 = nk
        .iter()
        .zip(&adx)
        .zip(&ax)
        .map(|((a, b), c)| (a + b + c).abs())
        .fold(0.0, f64::max);
    let x: Vec<f64> = x0.iter().zip(&sol.x2).map(|(a, b)| a + b).collect();
    Ok(CurvatureResult {
        kappa: sol.x1,
        x: unflatten(&x, d),
        constraint_residual: r1.iter().fold(0.0, |m, v| m.max(v.abs())),
        curvature_residual: r2,
    })
}

/// Which approximation of the Weingarten map to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeingartenVariant {
    /// Consistent-mass projection of the weak Weingarten identity; needs `κ⃗`.
    Heine04,
    /// Lumped symmetrized projection; needs `κ⃗`.
    Whsym,
    /// Lumped projection with `κ⃗ = κ ν`; needs scalar `κ`.
    Wh,
    /// Piecewise constant `∇_s ω`.
    NablaOmega,
    /// Piecewise constant `∇_s π[ω/|ω|]`.
    NablaOmegaNormalized,
}

impl std::str::FromStr for WeingartenVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "heine04" => WeingartenVariant::Heine04,
            "whsym" => WeingartenVariant::Whsym,
            "wh" => WeingartenVariant::Wh,
            "nabla_omega" => WeingartenVariant::NablaOmega,
            "nabla_omega_normalized" => WeingartenVariant::NablaOmegaNormalized,
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown Weingarten variant '{s}' (expected heine04, whsym, wh, nabla_omega or nabla_omega_normalized)"
                )))
            }
        })
    }
}

impl std::fmt::Display for WeingartenVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WeingartenVariant::Heine04 => "heine04",
            WeingartenVariant::Whsym => "whsym",
            WeingartenVariant::Wh => "wh",
            WeingartenVariant::NablaOmega => "nabla_omega",
            WeingartenVariant::NablaOmegaNormalized => "nabla_omega_normalized",
        })
    }
}

/// Curvature data consumed by [`weingarten`].
#[derive(Debug, Clone, Copy)]
pub enum CurvatureInput<'a> {
    /// No curvature input.
    None,
    /// Scalar mean curvature per vertex.
    Scalar(&'a [f64]),
    /// Curvature vector per vertex.
    Vector(&'a [Vector3<f64>]),
}

/// A Weingarten-map approximation, either per vertex or per face.
#[derive(Debug, Clone)]
pub enum WeingartenField {
    /// One `d × d` matrix per vertex (embedded in 3 × 3).
    Vertex(Vec<Matrix3<f64>>),
    /// One `d × d` matrix per face (embedded in 3 × 3).
    Face(Vec<Matrix3<f64>>),
}

impl WeingartenField {
    /// The matrices, whichever entity they live on.
    pub fn matrices(&self) -> &[Matrix3<f64>] {
        match self {
            WeingartenField::Vertex(m) | WeingartenField::Face(m) => m,
        }
    }

    /// `|W|²` (Frobenius) as a vertex field.
    ///
    /// Face fields are averaged with area weights, which reproduces the lumped
    /// pairing `⟨f |W|², χ⟩^h` of a vertex field `f` exactly.
    pub fn norm_sq_vertex(&self, mesh: &Mesh) -> Vec<f64> {
        match self {
            WeingartenField::Vertex(m) => m.iter().map(|w| w.norm_squared()).collect(),
            WeingartenField::Face(m) => (0..mesh.n_vertices())
                .map(|k| {
                    let (mut num, mut den) = (0.0, 0.0);
                    for &(j, _) in mesh.vertex_elements(k) {
                        num += mesh.measure(j) * m[j].norm_squared();
                        den += mesh.measure(j);
                    }
                    num / den
                })
                .collect(),
        }
    }
}

/// Computes the chosen approximation of the Weingarten map.
pub fn weingarten(
    mesh: &Mesh,
    variant: WeingartenVariant,
    input: CurvatureInput<'_>,
) -> Result<WeingartenField> {
    let k = mesh.n_vertices();
    let need = |what: &str| {
        Error::InvalidParameter(format!("the {variant} Weingarten variant needs {what}"))
    };
    let check = |n: usize| -> Result<()> {
        if n != k {
            Err(Error::DimensionMismatch {
                expected: k,
                found: n,
            })
        } else {
            Ok(())
        }
    };
    match variant {
        WeingartenVariant::Wh => {
            let CurvatureInput::Scalar(kappa) = input else {
                return Err(need("a scalar curvature"));
            };
            check(kappa.len())?;
            Ok(WeingartenField::Vertex(lumped_wh(mesh, kappa)))
        }
        WeingartenVariant::Whsym => {
            let CurvatureInput::Vector(kv) = input else {
                return Err(need("a curvature vector"));
            };
            check(kv.len())?;
            Ok(WeingartenField::Vertex(lumped_whsym(mesh, kv)))
        }
        WeingartenVariant::Heine04 => {
            let CurvatureInput::Vector(kv) = input else {
                return Err(need("a curvature vector"));
            };
            check(kv.len())?;
            heine04(mesh, kv).map(WeingartenField::Vertex)
        }
        WeingartenVariant::NablaOmega => Ok(WeingartenField::Face(face_gradient(
            mesh,
            &mesh.vertex_normals(),
        ))),
        WeingartenVariant::NablaOmegaNormalized => {
            let omega = mesh.vertex_normals();
            let mut unit = Vec::with_capacity(k);
            for (v, w) in omega.iter().enumerate() {
                let n = w.norm();
                if n <= ZERO_NORMAL_TOL {
                    return Err(Error::VertexNormals(format!(
                        "vertex normal vanishes at vertex {v}; the normalized variant needs ω ≠ 0"
                    )));
                }
                unit.push(w / n);
            }
            Ok(WeingartenField::Face(face_gradient(mesh, &unit)))
        }
    }
}

/// `Σ_σ |σ| ν_σ ∇φ_kᵀ` for every vertex `k`.
fn normal_gradient_pairing(mesh: &Mesh) -> Vec<Matrix3<f64>> {
    let mut out = vec![Matrix3::zeros(); mesh.n_vertices()];
    for j in 0..mesh.n_elements() {
        let g = mesh.basis_gradients(j);
        let nu = mesh.normal(j);
        let m = mesh.measure(j);
        for (a, &v) in mesh.element(j).iter().enumerate() {
            out[v] += nu * g[a].transpose() * m;
        }
    }
    out
}

fn lumped_wh(mesh: &Mesh, kappa: &[f64]) -> Vec<Matrix3<f64>> {
    let d = mesh.dim() as f64;
    let mass = mesh.lumped_mass();
    let mut out = normal_gradient_pairing(mesh);
    for j in 0..mesh.n_elements() {
        let nu = mesh.normal(j);
        let s = mesh.measure(j) / d;
        for &v in mesh.element(j) {
            out[v] += nu * nu.transpose() * (kappa[v] * s);
        }
    }
    out.iter().zip(&mass).map(|(w, m)| -w / *m).collect()
}

fn lumped_whsym(mesh: &Mesh, kv: &[Vector3<f64>]) -> Vec<Matrix3<f64>> {
    let d = mesh.dim() as f64;
    let mass = mesh.lumped_mass();
    let ng = normal_gradient_pairing(mesh);
    let mut out: Vec<Matrix3<f64>> = ng.iter().map(|m| m + m.transpose()).collect();
    for j in 0..mesh.n_elements() {
        let nu = mesh.normal(j);
        let s = mesh.measure(j) / d;
        for &v in mesh.element(j) {
            out[v] += (nu * kv[v].transpose() + kv[v] * nu.transpose()) * s;
        }
    }
    out.iter()
        .zip(&mass)
        .map(|(w, m)| -w / (2.0 * *m))
        .collect()
}

fn heine04(mesh: &Mesh, kv: &[Vector3<f64>]) -> Result<Vec<Matrix3<f64>>> {
    let d = mesh.dim();
    let kk = mesh.n_vertices();
    let mut rhs = normal_gradient_pairing(mesh);
    let denom = (d * (d + 1)) as f64;
    for j in 0..mesh.n_elements() {
        let e = mesh.element(j);
        let nu = mesh.normal(j);
        let s = mesh.measure(j) / denom;
        for a in 0..d {
            let mut acc = Vector3::zeros();
            for b in 0..d {
                acc += kv[e[b]] * if a == b { 2.0 * s } else { s };
            }
            rhs[e[a]] += acc * nu.transpose();
        }
    }
    let lu = SparseLu::factor(&consistent_mass(mesh))?;
    let mut out = vec![Matrix3::zeros(); kk];
    for r in 0..d {
        for c in 0..d {
            let b: Vec<f64> = rhs.iter().map(|m| -m[(r, c)]).collect();
            let x = lu.solve(&b)?;
            for (w, v) in out.iter_mut().zip(&x) {
                w[(r, c)] = *v;
            }
        }
    }
    Ok(out)
}

/// Piecewise constant gradient `Σ_a f_a ⊗ ∇φ_a` of a vector vertex field.
pub fn face_gradient(mesh: &Mesh, f: &[Vector3<f64>]) -> Vec<Matrix3<f64>> {
    (0..mesh.n_elements())
        .map(|j| {
            let g = mesh.basis_gradients(j);
            mesh.element(j)
                .iter()
                .enumerate()
                .map(|(a, &v)| f[v] * g[a].transpose())
                .sum()
        })
        .collect()
}
