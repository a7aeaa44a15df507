//! Slow dense reference assembler.
//!
//! The reference integrates products of hat functions with Gauss rules on each
//! element, computes tangential gradients from the edge matrix pseudo-inverse,
//! and evaluates anisotropic gradient pairings in a basis that is orthonormal
//! for the `G̃_ℓ` inner product.

#![allow(dead_code)]

use geoflow::aniso::Anisotropy;
use geoflow::linalg::CsrMatrix;
use geoflow::Mesh;
use nalgebra::{DMatrix, DVector, Vector3};

pub const TOL: f64 = 1e-12;

pub type Dense = Vec<Vec<f64>>;

pub fn zeros(r: usize, c: usize) -> Dense {
    vec![vec![0.0; c]; r]
}

pub fn assert_matches(name: &str, got: &CsrMatrix, want: &Dense) {
    let g = got.to_dense();
    assert_eq!(g.len(), want.len(), "{name}: row count");
    let scale = want
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    for (i, (gr, wr)) in g.iter().zip(want).enumerate() {
        assert_eq!(gr.len(), wr.len(), "{name}: column count");
        for (j, (a, b)) in gr.iter().zip(wr).enumerate() {
            assert!(
                (a - b).abs() <= TOL * scale,
                "{name}: entry ({i},{j}) is {a:e}, reference {b:e}"
            );
        }
    }
}

/// Quadrature points on the reference simplex as barycentric coordinates, with
/// weights summing to one. Exact for polynomials of degree two.
pub fn quadrature(dim: usize) -> Vec<(Vec<f64>, f64)> {
    if dim == 2 {
        let s = 0.5 / 3f64.sqrt();
        vec![(vec![0.5 + s, 0.5 - s], 0.5), (vec![0.5 - s, 0.5 + s], 0.5)]
    } else {
        let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
        vec![
            (vec![a, b, b], 1.0 / 3.0),
            (vec![b, a, b], 1.0 / 3.0),
            (vec![b, b, a], 1.0 / 3.0),
        ]
    }
}

/// Element geometry computed from scratch.
pub struct Element {
    verts: Vec<usize>,
    measure: f64,
    normal: Vector3<f64>,
    /// Edge vectors `q_a − q_0`, `a = 1..n`.
    edges: Vec<Vector3<f64>>,
}

pub fn elements(mesh: &Mesh) -> Vec<Element> {
    (0..mesh.n_elements())
        .map(|j| {
            let verts = mesh.element(j).to_vec();
            let q: Vec<Vector3<f64>> = verts.iter().map(|&v| mesh.points()[v]).collect();
            let edges: Vec<Vector3<f64>> = q[1..].iter().map(|p| p - q[0]).collect();
            let (normal, measure) = if mesh.dim() == 2 {
                let h = edges[0];
                let len = h.norm();
                (Vector3::new(-h.y, h.x, 0.0) / len, len)
            } else {
                let c = edges[0].cross(&edges[1]);
                (c.normalize(), 0.5 * c.norm())
            };
            Element {
                verts,
                measure,
                normal,
                edges,
            }
        })
        .collect()
}

/// Differences `φ_k(q_a) − φ_k(q_0)` for local vertex `k`.
pub fn hat_differences(local: usize, n: usize) -> Vec<f64> {
    (1..=n)
        .map(|a| {
            let at_a = if a == local { 1.0 } else { 0.0 };
            let at_0 = if local == 0 { 1.0 } else { 0.0 };
            at_a - at_0
        })
        .collect()
}

/// Tangential gradient of a linear function with given edge differences via
/// the pseudo-inverse of the edge matrix.
pub fn tangential_gradient(edges: &[Vector3<f64>], diffs: &[f64]) -> Vector3<f64> {
    let n = edges.len();
    let e = DMatrix::from_fn(3, n, |i, a| edges[a][i]);
    let gram = e.transpose() * &e;
    let coef =
        gram.try_inverse().expect("nondegenerate element") * DVector::from_column_slice(diffs);
    let g = e * coef;
    Vector3::new(g[0], g[1], g[2])
}

pub fn reference_consistent_mass(mesh: &Mesh) -> Dense {
    let k = mesh.n_vertices();
    let mut m = zeros(k, k);
    for el in elements(mesh) {
        for (lam, w) in quadrature(mesh.dim()) {
            for (a, &va) in el.verts.iter().enumerate() {
                for (b, &vb) in el.verts.iter().enumerate() {
                    m[va][vb] += el.measure * w * lam[a] * lam[b];
                }
            }
        }
    }
    m
}

pub fn reference_lumped_mass(mesh: &Mesh) -> Dense {
    let c = reference_consistent_mass(mesh);
    let k = c.len();
    let mut m = zeros(k, k);
    for (i, row) in c.iter().enumerate() {
        m[i][i] = row.iter().sum();
    }
    m
}

pub fn reference_stiffness(mesh: &Mesh, weight: Option<&[f64]>) -> Dense {
    let k = mesh.n_vertices();
    let n = mesh.dim() - 1;
    let mut a = zeros(k, k);
    for (j, el) in elements(mesh).iter().enumerate() {
        let w = weight.map_or(1.0, |w| w[j]);
        let grads: Vec<Vector3<f64>> = (0..=n)
            .map(|l| tangential_gradient(&el.edges, &hat_differences(l, n)))
            .collect();
        for (a_loc, &va) in el.verts.iter().enumerate() {
            for (b_loc, &vb) in el.verts.iter().enumerate() {
                a[va][vb] += w * el.measure * grads[a_loc].dot(&grads[b_loc]);
            }
        }
    }
    a
}

pub fn reference_normal_coupling(mesh: &Mesh) -> Dense {
    let k = mesh.n_vertices();
    let d = mesh.dim();
    let mut n = zeros(d * k, k);
    for el in elements(mesh) {
        for (lam, w) in quadrature(d) {
            for (a, &va) in el.verts.iter().enumerate() {
                // π[φ_k φ_l] vanishes for k ≠ l, and ∫ π[φ_k²] = ∫ φ_k.
                for i in 0..d {
                    n[va * d + i][va] += el.measure * w * lam[a] * el.normal[i];
                }
            }
        }
    }
    n
}

pub fn reference_vertex_normals(mesh: &Mesh) -> Vec<Vector3<f64>> {
    let mut num = vec![Vector3::zeros(); mesh.n_vertices()];
    let mut den = vec![0.0; mesh.n_vertices()];
    for el in elements(mesh) {
        for &v in &el.verts {
            num[v] += el.normal * el.measure;
            den[v] += el.measure;
        }
    }
    num.iter().zip(&den).map(|(n, d)| n / *d).collect()
}

pub fn reference_qtheta(mesh: &Mesh, theta: f64) -> Dense {
    let d = mesh.dim();
    let k = mesh.n_vertices();
    let m = reference_lumped_mass(mesh);
    let omega = reference_vertex_normals(mesh);
    let mut q = zeros(d * k, d * k);
    for v in 0..k {
        let w = omega[v].normalize();
        for i in 0..d {
            for j in 0..d {
                let id = if i == j { 1.0 } else { 0.0 };
                q[v * d + i][v * d + j] = m[v][v] * (theta * id + (1.0 - theta) * w[i] * w[j]);
            }
        }
    }
    q
}

/// `d × d` blocks of the density matrices and of `det(G)^{1/(d−1)} G⁻¹`.
pub fn density_matrices(aniso: &Anisotropy) -> Vec<(DMatrix<f64>, DMatrix<f64>)> {
    let d = aniso.dim();
    aniso
        .matrices()
        .iter()
        .map(|g3| {
            let g = DMatrix::from_fn(d, d, |i, j| g3[(i, j)]);
            let det = g.determinant();
            let gt = g.clone().try_inverse().expect("SPD") * det.powf(1.0 / (d as f64 - 1.0));
            (g, gt)
        })
        .collect()
}

pub fn quad_form(g: &DMatrix<f64>, p: &Vector3<f64>, q: &Vector3<f64>) -> f64 {
    let d = g.nrows();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            s += p[i] * g[(i, j)] * q[j];
        }
    }
    s
}

pub fn reference_aniso_stiffness(mesh: &Mesh, aniso: &Anisotropy, v: &[Vector3<f64>]) -> Dense {
    let d = mesh.dim();
    let n = d - 1;
    let k = mesh.n_vertices();
    let mats = density_matrices(aniso);
    let r = aniso.r();
    let mut out = zeros(d * k, d * k);
    for (j, el) in elements(mesh).iter().enumerate() {
        let vj = v[j].normalize();
        let gl_v: Vec<f64> = mats
            .iter()
            .map(|(g, _)| quad_form(g, &vj, &vj).sqrt())
            .collect();
        let g_v = gl_v.iter().map(|x| x.powf(r)).sum::<f64>().powf(1.0 / r);
        for (l, (g, gt)) in mats.iter().enumerate() {
            let weight =
                (gl_v[l] / g_v).powf(r - 1.0) * quad_form(g, &el.normal, &el.normal).sqrt();
            // Gram-Schmidt of the edges in the G̃ inner product; row `a` of
            // `coef` expresses the orthonormal direction t_a in the edges.
            let mut coef: Vec<Vec<f64>> = Vec::new();
            let mut dirs: Vec<Vector3<f64>> = Vec::new();
            for a in 0..n {
                let mut t = el.edges[a];
                let mut c = vec![0.0; n];
                c[a] = 1.0;
                for (prev, pc) in dirs.iter().zip(&coef) {
                    let p = quad_form(gt, &t, prev);
                    t -= prev * p;
                    for b in 0..n {
                        c[b] -= p * pc[b];
                    }
                }
                let len = quad_form(gt, &t, &t).sqrt();
                dirs.push(t / len);
                coef.push(c.iter().map(|x| x / len).collect());
            }
            let derivs: Vec<Vec<f64>> = (0..=n)
                .map(|loc| {
                    let diffs = hat_differences(loc, n);
                    coef.iter()
                        .map(|c| c.iter().zip(&diffs).map(|(x, y)| x * y).sum())
                        .collect()
                })
                .collect();
            for (a_loc, &va) in el.verts.iter().enumerate() {
                for (b_loc, &vb) in el.verts.iter().enumerate() {
                    let pairing: f64 = derivs[a_loc]
                        .iter()
                        .zip(&derivs[b_loc])
                        .map(|(x, y)| x * y)
                        .sum();
                    let s = weight * el.measure * pairing;
                    for i in 0..d {
                        for jj in 0..d {
                            out[va * d + i][vb * d + jj] += s * gt[(i, jj)];
                        }
                    }
                }
            }
        }
    }
    out
}
