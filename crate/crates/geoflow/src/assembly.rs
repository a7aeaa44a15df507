//! Element-wise assembly of the finite-element operators used by the schemes.
//!
//! Scalar operators are `K × K`. Vector-valued unknowns are flattened vertex by
//! vertex, component `i` of vertex `k` at position `k·d + i`, so vector
//! operators are `dK × dK` and the normal coupling `N` is `dK × K`.

use nalgebra::{Matrix3, Vector3};

use crate::aniso::Anisotropy;
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::mesh::Mesh;

/// The standard operators of a mesh.
#[derive(Debug, Clone)]
pub struct AssembledOperators {
    /// Lumped mass, diagonal `K × K`.
    pub m: CsrMatrix,
    /// Normal coupling `N`, `dK × K`, with block `k` equal to `M_kk ω_k`.
    pub n: CsrMatrix,
    /// Scalar stiffness, `K × K`.
    pub a: CsrMatrix,
    /// Vector stiffness `A ⊗ I_d`, `dK × dK`.
    pub a_vec: CsrMatrix,
}

impl AssembledOperators {
    /// Assembles `M`, `N`, `A` and `A ⊗ I_d`.
    pub fn new(mesh: &Mesh) -> Self {
        let a = stiffness(mesh, None);
        AssembledOperators {
            m: lumped_mass(mesh, None),
            n: normal_coupling(mesh),
            a_vec: kron_identity(&a, mesh.dim()),
            a,
        }
    }
}

/// Lumped mass and stiffness, optionally weighted by a positive per-face factor.
#[derive(Debug, Clone)]
pub struct ScalarOperators {
    /// Lumped (weighted) mass.
    pub m: CsrMatrix,
    /// (Weighted) stiffness.
    pub a: CsrMatrix,
}

/// Assembles the lumped mass and the stiffness; with `weight` the weighted
/// versions `M_β`, `A_β` for a per-face factor `β(ν_σ)`.
pub fn assemble_scalar(mesh: &Mesh, weight: Option<&[f64]>) -> Result<ScalarOperators> {
    if let Some(w) = weight {
        if w.len() != mesh.n_elements() {
            return Err(Error::DimensionMismatch {
                expected: mesh.n_elements(),
                found: w.len(),
            });
        }
        if let Some(j) = w.iter().position(|&b| !(b > 0.0) || !b.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "weight on element {j} must be positive, got {}",
                w[j]
            )));
        }
    }
    Ok(ScalarOperators {
        m: lumped_mass(mesh, weight),
        a: stiffness(mesh, weight),
    })
}

/// Diagonal lumped mass `M_kk = Σ_{σ∋k} w_σ |σ| / d`.
pub fn lumped_mass(mesh: &Mesh, weight: Option<&[f64]>) -> CsrMatrix {
    CsrMatrix::diagonal_matrix(&lumped_mass_diagonal(mesh, weight))
}

/// Diagonal of [`lumped_mass`].
pub fn lumped_mass_diagonal(mesh: &Mesh, weight: Option<&[f64]>) -> Vec<f64> {
    let d = mesh.dim();
    let mut m = vec![0.0; mesh.n_vertices()];
    for j in 0..mesh.n_elements() {
        let w = weight.map_or(1.0, |w| w[j]);
        let s = w * mesh.measure(j) / d as f64;
        for &k in mesh.element(j) {
            m[k] += s;
        }
    }
    m
}

/// Consistent mass `∫ φ_k φ_l`.
pub fn consistent_mass(mesh: &Mesh) -> CsrMatrix {
    let d = mesh.dim();
    let mut b = TripletBuilder::with_capacity(
        mesh.n_vertices(),
        mesh.n_vertices(),
        d * d * mesh.n_elements(),
    );
    let denom = (d * (d + 1)) as f64;
    for j in 0..mesh.n_elements() {
        let e = mesh.element(j);
        let s = mesh.measure(j) / denom;
        for a in 0..d {
            for c in 0..d {
                b.push(e[a], e[c], if a == c { 2.0 * s } else { s });
            }
        }
    }
    b.build()
}

/// Stiffness `∫ w ∇_s φ_k · ∇_s φ_l`.
pub fn stiffness(mesh: &Mesh, weight: Option<&[f64]>) -> CsrMatrix {
    let d = mesh.dim();
    let k = mesh.n_vertices();
    let mut b = TripletBuilder::with_capacity(k, k, d * d * mesh.n_elements());
    for j in 0..mesh.n_elements() {
        let e = mesh.element(j);
        let g = mesh.basis_gradients(j);
        let s = weight.map_or(1.0, |w| w[j]) * mesh.measure(j);
        for a in 0..d {
            for c in 0..d {
                b.push(e[a], e[c], s * g[a].dot(&g[c]));
            }
        }
    }
    b.build()
}

/// Normal coupling `[N]_{kl} = ∫ π[φ_k φ_l] ν`, stored as a `dK × K` matrix.
///
/// The interpolated product makes `N` vertex-diagonal: block `k` is
/// `Σ_{σ∋k} |σ| ν_σ / d = M_kk ω_k`.
pub fn normal_coupling(mesh: &Mesh) -> CsrMatrix {
    let d = mesh.dim();
    let k = mesh.n_vertices();
    let mut acc = vec![Vector3::zeros(); k];
    for j in 0..mesh.n_elements() {
        let s = mesh.measure(j) / d as f64;
        for &v in mesh.element(j) {
            acc[v] += mesh.normal(j) * s;
        }
    }
    vertex_column_blocks(&acc, d)
}

/// `dK × K` matrix whose column `k` holds the vector `v_k` in rows `k·d .. k·d + d`.
pub fn vertex_column_blocks(v: &[Vector3<f64>], d: usize) -> CsrMatrix {
    let k = v.len();
    let mut b = TripletBuilder::with_capacity(d * k, k, d * k);
    for (i, vi) in v.iter().enumerate() {
        for c in 0..d {
            b.push(i * d + c, i, vi[c]);
        }
    }
    b.build()
}

/// Kronecker product `A ⊗ I_d` in the vertex-major layout.
pub fn kron_identity(a: &CsrMatrix, d: usize) -> CsrMatrix {
    let mut b = TripletBuilder::with_capacity(a.nrows() * d, a.ncols() * d, a.nnz() * d);
    for r in 0..a.nrows() {
        let (idx, val) = a.row(r);
        for (&c, &v) in idx.iter().zip(val) {
            for i in 0..d {
                b.push(r * d + i, c * d + i, v);
            }
        }
    }
    b.build()
}

/// Vertex-block-diagonal `dK × dK` matrix with blocks `w_k B_k`.
pub fn vertex_block_diagonal(blocks: &[Matrix3<f64>], d: usize) -> CsrMatrix {
    let k = blocks.len();
    let mut b = TripletBuilder::with_capacity(d * k, d * k, d * d * k);
    for (v, m) in blocks.iter().enumerate() {
        for r in 0..d {
            for c in 0..d {
                b.push(v * d + r, v * d + c, m[(r, c)]);
            }
        }
    }
    b.build()
}

/// Vector mass with blocks `M_kk ω_k ω_kᵀ` for the given vertex vectors.
pub fn omega_mass(mesh: &Mesh, omega: &[Vector3<f64>]) -> CsrMatrix {
    let m = lumped_mass_diagonal(mesh, None);
    let blocks: Vec<_> = omega
        .iter()
        .zip(&m)
        .map(|(w, mk)| w * w.transpose() * *mk)
        .collect();
    vertex_block_diagonal(&blocks, mesh.dim())
}

/// The θ-weighted vector mass with blocks `M_kk [θ I + (1 − θ) ω̂ ω̂ᵀ]`.
pub fn assemble_qtheta_mass(mesh: &Mesh, theta: f64) -> Result<CsrMatrix> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidParameter(format!(
            "θ must lie in [0, 1], got {theta}"
        )));
    }
    let omega = mesh.vertex_normals();
    let m = lumped_mass_diagonal(mesh, None);
    let d = mesh.dim();
    let mut id = Matrix3::identity();
    if d == 2 {
        id[(2, 2)] = 0.0;
    }
    let mut blocks = Vec::with_capacity(omega.len());
    for (k, (w, mk)) in omega.iter().zip(&m).enumerate() {
        let n = w.norm();
        if n <= crate::mesh::ZERO_NORMAL_TOL {
            return Err(Error::VertexNormals(format!(
                "vertex normal vanishes at vertex {k}; the θ-mass needs ω ≠ 0"
            )));
        }
        let wh = w / n;
        blocks.push((id * theta + wh * wh.transpose() * (1.0 - theta)) * *mk);
    }
    Ok(vertex_block_diagonal(&blocks, d))
}

/// Anisotropic vector stiffness together with the number of renormalized
/// lagged normals.
#[derive(Debug, Clone)]
pub struct AnisoStiffness {
    /// The `dK × dK` matrix.
    pub matrix: CsrMatrix,
    /// How many of the supplied per-face vectors were not of unit length.
    pub renormalized: usize,
}

/// The anisotropic vector stiffness `A_γ(v)`.
///
/// Block `(k, l)` is
/// `Σ_ℓ [γ_ℓ(v)/γ(v)]^{r−1} γ_ℓ(ν) ∫ (∇^ℓ φ_k · ∇^ℓ φ_l)_ℓ  G̃_ℓ`, where the
/// tangential gradient and its inner product are taken in the metric `G̃_ℓ`:
/// on a simplex with edge vectors `e_a = q_a − q_0` and metric
/// `g_ab = e_a · G̃_ℓ e_b`, the pairing of two hat functions is
/// `Dφ_kᵀ g⁻¹ Dφ_l` with `Dφ` the edge differences.
///
/// `v` holds one vector per face (the current face normals for `r = 1`, the
/// lagged iterate normals for `r > 1`); vectors that are not of unit length are
/// normalized and counted.
pub fn assemble_aniso_stiffness(
    mesh: &Mesh,
    aniso: &Anisotropy,
    v: &[Vector3<f64>],
) -> Result<AnisoStiffness> {
    let d = mesh.dim();
    if aniso.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: aniso.dim(),
        });
    }
    if v.len() != mesh.n_elements() {
        return Err(Error::DimensionMismatch {
            expected: mesh.n_elements(),
            found: v.len(),
        });
    }
    let kk = mesh.n_vertices();
    let mut b = TripletBuilder::with_capacity(d * kk, d * kk, d * d * d * d * mesh.n_elements());
    let mut renormalized = 0;
    let r = aniso.r();
    for j in 0..mesh.n_elements() {
        let mut vj = v[j];
        let vn = vj.norm();
        if vn == 0.0 || !vn.is_finite() {
            return Err(Error::Domain(format!("lagged normal on face {j} vanishes")));
        }
        if (vn - 1.0).abs() > 1e-12 {
            renormalized += 1;
            vj /= vn;
        }
        let nu = mesh.normal(j);
        let gl_v = aniso.components(&vj);
        let gam_v = aniso.gamma_unchecked(&vj);
        let gl_nu = aniso.components(&nu);
        let e = mesh.element(j);
        let q = mesh.element_points(j);
        let area = mesh.measure(j);
        for (l, gt) in aniso.g_tilde().iter().enumerate() {
            let weight = if r == 1.0 {
                gl_nu[l]
            } else {
                (gl_v[l] / gam_v).powf(r - 1.0) * gl_nu[l]
            } * area;
            // pair[a][c] = Dφ_aᵀ g⁻¹ Dφ_c for local vertices a, c.
            let pair = metric_pairings(d, &q, gt);
            for a in 0..d {
                for c in 0..d {
                    let s = weight * pair[a][c];
                    for i in 0..d {
                        for k in 0..d {
                            let val = s * gt[(i, k)];
                            if val != 0.0 || (i == k) {
                                b.push(e[a] * d + i, e[c] * d + k, val);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(AnisoStiffness {
        matrix: b.build(),
        renormalized,
    })
}

/// Pairings `Dφ_aᵀ g⁻¹ Dφ_c` of the local hat functions in the metric `gt`.
fn metric_pairings(d: usize, q: &[Vector3<f64>], gt: &Matrix3<f64>) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    if d == 2 {
        let e = q[1] - q[0];
        let g = e.dot(&(gt * e));
        let s = 1.0 / g;
        out[0][0] = s;
        out[1][1] = s;
        out[0][1] = -s;
        out[1][0] = -s;
    } else {
        let e1 = q[1] - q[0];
        let e2 = q[2] - q[0];
        let g11 = e1.dot(&(gt * e1));
        let g12 = e1.dot(&(gt * e2));
        let g22 = e2.dot(&(gt * e2));
        let det = g11 * g22 - g12 * g12;
        let gi = [[g22 / det, -g12 / det], [-g12 / det, g11 / det]];
        // Edge differences of the three hat functions along (e1, e2).
        let dphi = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
        for a in 0..3 {
            for c in 0..3 {
                let mut s = 0.0;
                for x in 0..2 {
                    for y in 0..2 {
                        s += dphi[a][x] * gi[x][y] * dphi[c][y];
                    }
                }
                out[a][c] = s;
            }
        }
    }
    out
}

/// Per-face values `β(ν_σ)` of a mobility evaluated at the face normals.
pub fn face_weights(mesh: &Mesh, beta: impl Fn(&Vector3<f64>) -> f64) -> Vec<f64> {
    mesh.normals().iter().map(beta).collect()
}

/// Flattens a vector vertex field into the vertex-major layout.
pub fn flatten(v: &[Vector3<f64>], d: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len() * d);
    for p in v {
        out.extend((0..d).map(|i| p[i]));
    }
    out
}

/// Inverse of [`flatten`].
pub fn unflatten(x: &[f64], d: usize) -> Vec<Vector3<f64>> {
    x.chunks(d)
        .map(|c| {
            let mut p = Vector3::zeros();
            for i in 0..d {
                p[i] = c[i];
            }
            p
        })
        .collect()
}
