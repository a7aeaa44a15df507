//! The generalized scheme `⟨δX/Δt, χ ν⟩^h = ⟨F(κ), χ⟩`, its tangential-control
//! extension and the anisotropic scheme.

use nalgebra::Vector3;

use super::{
    coupling, displaced, displacement_converged, neg, quad, unit_vertex_normals, AnisoOrder,
    FChoice, Flow, FlowState, StepReport, TangentialParams,
};
use crate::aniso::Anisotropy;
use crate::assembly::{
    assemble_aniso_stiffness, assemble_scalar, face_weights, flatten, kron_identity,
    normal_coupling, stiffness,
};
use crate::curvature::bgn_curvature;
use crate::diagnostics::{anisotropic_area, Stability, StabilityKind};
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, SaddleSystem, TripletBuilder};
use crate::mesh::{raw_normal_and_measure, Mesh};

/// Curvature-side blocks of a generalized system; the displacement block is
/// always `A ⊗ I` with right-hand side `−(A ⊗ I) X^m`.
struct FBlocks {
    a11: CsrMatrix,
    a12: CsrMatrix,
    a21: CsrMatrix,
    /// Offset of `κ` inside the curvature-side unknowns.
    kappa_at: usize,
}

/// Assembles the curvature-side blocks for `F`. `weights` are the lagged
/// Picard weights of the power law.
fn f_blocks(
    f: FChoice,
    n: &CsrMatrix,
    m: &[f64],
    a: &CsrMatrix,
    dt: f64,
    weights: Option<&[f64]>,
) -> FBlocks {
    let k = m.len();
    let dk = n.nrows();
    match f {
        FChoice::Mcf | FChoice::Sd | FChoice::Power { .. } => {
            let a11 = match (f, weights) {
                (FChoice::Sd, _) => a.scaled(dt),
                (FChoice::Power { .. }, Some(w)) => {
                    let d: Vec<f64> = m.iter().zip(w).map(|(m, w)| dt * m * w).collect();
                    CsrMatrix::diagonal_matrix(&d)
                }
                _ => CsrMatrix::diagonal_matrix(&m.iter().map(|m| dt * m).collect::<Vec<_>>()),
            };
            FBlocks {
                a11,
                a12: n.transpose().scaled(-1.0),
                a21: n.clone(),
                kappa_at: 0,
            }
        }
        FChoice::Conserved => {
            // Unknowns (κ, λ) with λ |Γ| = ⟨κ, 1⟩^h the mean curvature.
            let total: f64 = m.iter().sum();
            let mut b11 = TripletBuilder::with_capacity(k + 1, k + 1, 3 * k + 1);
            for (i, &mi) in m.iter().enumerate() {
                b11.push(i, i, dt * mi);
                b11.push(i, k, -dt * mi);
                b11.push(k, i, -mi);
            }
            b11.push(k, k, total);
            let mut b12 = TripletBuilder::new(k + 1, dk);
            b12.add_transpose(0, 0, n, -1.0);
            let mut b21 = TripletBuilder::new(dk, k + 1);
            b21.add_matrix(0, 0, n, 1.0);
            FBlocks {
                a11: b11.build(),
                a12: b12.build(),
                a21: b21.build(),
                kappa_at: 0,
            }
        }
        FChoice::Salk { alpha, xi } => {
            // Unknowns (Y, κ): Δt A Y − Nᵀ δX = 0, (A/ξ + M/α) Y − M κ = 0.
            let mut b11 = TripletBuilder::new(2 * k, 2 * k);
            b11.add_matrix(0, 0, a, dt);
            b11.add_matrix(k, 0, a, 1.0 / xi);
            for (i, &mi) in m.iter().enumerate() {
                b11.push(k + i, i, mi / alpha);
                b11.push(k + i, k + i, -mi);
            }
            let mut b12 = TripletBuilder::new(2 * k, dk);
            b12.add_transpose(0, 0, n, -1.0);
            let mut b21 = TripletBuilder::new(dk, 2 * k);
            b21.add_matrix(0, k, n, 1.0);
            FBlocks {
                a11: b11.build(),
                a12: b12.build(),
                a21: b21.build(),
                kappa_at: k,
            }
        }
    }
}

/// `⟨F(κ), κ⟩` for the solved curvature-side unknowns.
fn f_dissipation(f: FChoice, x1: &[f64], m: &[f64], a: &CsrMatrix) -> f64 {
    let k = m.len();
    match f {
        FChoice::Mcf => x1.iter().zip(m).map(|(x, m)| m * x * x).sum(),
        FChoice::Sd => quad(x1, a, x1),
        FChoice::Conserved => {
            let lam = x1[k];
            x1[..k].iter().zip(m).map(|(x, m)| m * (x - lam) * x).sum()
        }
        FChoice::Power { exponent } => x1
            .iter()
            .zip(m)
            .map(|(x, m)| m * x.abs().powf(exponent + 1.0))
            .sum(),
        FChoice::Salk { .. } => quad(&x1[..k], a, &x1[k..]),
    }
}

fn stability_kind(f: FChoice, normalized: bool) -> StabilityKind {
    if normalized {
        return StabilityKind::Monitor;
    }
    match f {
        FChoice::Mcf => StabilityKind::MeanCurvature,
        FChoice::Sd => StabilityKind::SurfaceDiffusion,
        _ => StabilityKind::GenericF,
    }
}

/// Orthonormal tangent frames `τ_1, …, τ_{d−1}` completing `ω̂_k` at each vertex.
///
/// Curves use the quarter turn of `ω̂`; surfaces project the coordinate axis
/// least aligned with `ω̂` and complete with a cross product.
pub fn tangent_frames(mesh: &Mesh) -> Result<Vec<[Vector3<f64>; 2]>> {
    let w = unit_vertex_normals(mesh)?;
    Ok(w.iter()
        .map(|n| {
            if mesh.is_curve() {
                [Vector3::new(-n.y, n.x, 0.0), Vector3::zeros()]
            } else {
                let axis = (0..3)
                    .min_by(|&a, &b| n[a].abs().partial_cmp(&n[b].abs()).unwrap())
                    .unwrap();
                let e = Vector3::ith(axis, 1.0);
                let t1 = (e - n * n.dot(&e)).normalize();
                [t1, n.cross(&t1)]
            }
        })
        .collect())
}

/// Average of the vertices sharing an element with each vertex.
fn neighbour_average(mesh: &Mesh) -> Vec<Vector3<f64>> {
    let p = mesh.points();
    (0..mesh.n_vertices())
        .map(|k| {
            let mut nb: Vec<usize> = mesh
                .vertex_elements(k)
                .iter()
                .flat_map(|&(j, _)| mesh.element(j).iter().copied())
                .filter(|&v| v != k)
                .collect();
            nb.sort_unstable();
            nb.dedup();
            nb.iter().map(|&v| p[v]).sum::<Vector3<f64>>() / nb.len() as f64
        })
        .collect()
}

impl Flow {
    pub(super) fn step_generic(
        &mut self,
        state: &FlowState,
        f: FChoice,
    ) -> Result<(FlowState, StepReport)> {
        let mesh = &state.mesh;
        let d = mesh.dim();
        let dt = self.config.dt;
        let normalized = self.config.normalized_normals;
        let m = mesh.lumped_mass();
        let a = stiffness(mesh, None);
        let a_vec = kron_identity(&a, d);
        let n = coupling(mesh, normalized)?;
        let x0 = flatten(mesh.points(), d);
        let rhs2 = neg(a_vec.mul_vec(&x0));

        let exponent = match f {
            FChoice::Power { exponent } => Some(exponent),
            _ => None,
        };
        let mut kappa_guess = match exponent {
            Some(_) => Some(match &state.kappa {
                Some(k) if k.len() == m.len() => k.clone(),
                _ => bgn_curvature(mesh, &mut self.solver)?.kappa,
            }),
            None => None,
        };
        let nl = self.config.nonlinear;
        let mut prev_x: Option<Vec<f64>> = None;
        let mut iterations = 0;
        let mut linear = 0;
        let (x1, dx) = loop {
            iterations += 1;
            let weights: Option<Vec<f64>> = match (exponent, &kappa_guess) {
                (Some(b), Some(kg)) => Some(
                    kg.iter()
                        .map(|k| k.abs().max(1e-12).powf(b - 1.0))
                        .collect(),
                ),
                _ => None,
            };
            let fb = f_blocks(f, &n, &m, &a, dt, weights.as_deref());
            let sys = SaddleSystem {
                rhs1: vec![0.0; fb.a11.nrows()],
                a11: fb.a11,
                a12: fb.a12,
                a21: fb.a21,
                a22: a_vec.clone(),
                rhs2: rhs2.clone(),
            };
            let sol = self.solve_saddle(&sys, &format!("{f} flow system"))?;
            linear += sol.iterations;
            if exponent.is_none() {
                break (sol.x1, sol.x2);
            }
            if let Some(p) = &prev_x {
                let (done, diff) = displacement_converged(p, &sol.x2, nl.tol);
                if done {
                    break (sol.x1, sol.x2);
                }
                if iterations >= nl.maxit {
                    return Err(Error::NotConverged {
                        iterations,
                        residual: diff,
                        history: Vec::new(),
                    });
                }
            }
            kappa_guess = Some(sol.x1.clone());
            prev_x = Some(sol.x2);
        };

        let (new_mesh, disp) = displaced(mesh, &dx)?;
        let k = m.len();
        let stability = Stability {
            kind: stability_kind(f, normalized),
            before: mesh.area(),
            after: new_mesh.area(),
            dissipation: dt * f_dissipation(f, &x1, &m, &a),
        };
        let mut report = StepReport::new(stability);
        report.linear_iterations = linear;
        report.nonlinear_iterations = iterations;
        report.max_displacement = disp;
        let fb_at = match f {
            FChoice::Salk { .. } => k,
            _ => 0,
        };
        let mut next = state.advanced(new_mesh, dt);
        next.kappa = Some(x1[fb_at..fb_at + k].to_vec());
        Ok((next, report))
    }

    /// Generalized scheme with unknown tangential velocities `β_i`:
    /// `α M_kk τ_ik · δX_k − Δt α δ M_kk β_ik = Δt α M_kk c_ik`, and the
    /// displacement equation gains `Σ_i α M_kk β_ik τ_ik`.
    pub(super) fn step_tangential(
        &mut self,
        state: &FlowState,
        f: FChoice,
        params: TangentialParams,
    ) -> Result<(FlowState, StepReport)> {
        let mesh = &state.mesh;
        let d = mesh.dim();
        let k = mesh.n_vertices();
        let dt = self.config.dt;
        let normalized = self.config.normalized_normals;
        let (alpha, delta) = params.effective();
        let m = mesh.lumped_mass();
        let a = stiffness(mesh, None);
        let a_vec = kron_identity(&a, d);
        let n = coupling(mesh, normalized)?;
        let frames = tangent_frames(mesh)?;
        let nt = d - 1;
        let targets: Vec<Vector3<f64>> = if params.has_target() {
            neighbour_average(mesh)
                .iter()
                .zip(mesh.points())
                .map(|(z, q)| (z - q) / dt)
                .collect()
        } else {
            vec![Vector3::zeros(); k]
        };
        let c: Vec<f64> = (0..k * nt)
            .map(|r| frames[r / nt][r % nt].dot(&targets[r / nt]))
            .collect();

        let fb = f_blocks(f, &n, &m, &a, dt, None);
        let n1 = fb.a11.nrows();
        let nb = k * nt;
        let mut b11 = TripletBuilder::new(n1 + nb, n1 + nb);
        b11.add_matrix(0, 0, &fb.a11, 1.0);
        let mut b12 = TripletBuilder::new(n1 + nb, d * k);
        b12.add_matrix(0, 0, &fb.a12, 1.0);
        let mut b21 = TripletBuilder::new(d * k, n1 + nb);
        b21.add_matrix(0, 0, &fb.a21, 1.0);
        let mut rhs1 = vec![0.0; n1 + nb];
        for v in 0..k {
            let am = alpha * m[v];
            for i in 0..nt {
                let r = n1 + v * nt + i;
                if alpha == 0.0 {
                    b11.push(r, r, 1.0);
                    continue;
                }
                let tau = frames[v][i];
                for comp in 0..d {
                    b12.push(r, v * d + comp, am * tau[comp]);
                    b21.push(v * d + comp, r, am * tau[comp]);
                }
                b11.push(r, r, -dt * am * delta);
                rhs1[r] = dt * am * c[v * nt + i];
            }
        }
        let sys = SaddleSystem {
            a11: b11.build(),
            a12: b12.build(),
            a21: b21.build(),
            a22: a_vec.clone(),
            rhs1,
            rhs2: neg(a_vec.mul_vec(&flatten(mesh.points(), d))),
        };
        let sol = self.solve_saddle(&sys, "tangential-control system")?;
        let beta = &sol.x1[n1..];
        let penalty: f64 = (0..nb)
            .map(|r| alpha * m[r / nt] * (delta * beta[r] + c[r]) * beta[r])
            .sum();
        let tangential: f64 = (0..k)
            .map(|v| {
                (0..nt)
                    .map(|i| {
                        let t = frames[v][i];
                        let s: f64 = (0..d).map(|comp| t[comp] * sol.x2[v * d + comp]).sum();
                        m[v] * s * s
                    })
                    .sum::<f64>()
            })
            .sum::<f64>()
            .sqrt();
        let (new_mesh, disp) = displaced(mesh, &sol.x2)?;
        let kind = if params.has_target() || normalized {
            StabilityKind::Monitor
        } else {
            StabilityKind::Tangential
        };
        let stability = Stability {
            kind,
            before: mesh.area(),
            after: new_mesh.area(),
            dissipation: dt * (f_dissipation(f, &sol.x1[..n1], &m, &a) + penalty),
        };
        let mut report = StepReport::new(stability);
        report.linear_iterations = sol.iterations;
        report.max_displacement = disp;
        report.tangential_displacement = Some(tangential);
        report.beta = Some(beta.to_vec());
        let mut next = state.advanced(new_mesh, dt);
        next.kappa = Some(sol.x1[fb.kappa_at..fb.kappa_at + k].to_vec());
        Ok((next, report))
    }

    /// `[[Δt M_β (or Δt A_β), −Nᵀ], [N, A_γ(v)]] (κ_γ, δX) = (0, −A_γ(v) X^m)`,
    /// iterated on `v` for `r > 1`.
    ///
    /// The plain update `v ← ν(X^{i})` has an oscillating unstable mode once
    /// `r` is large (its amplification grows with `r` and does not depend on
    /// `Δt` or `h`), so the lagged normals are under-relaxed,
    /// `v ← normalize(θ ν(X^{i}) + (1 − θ) v)` with `θ = ANISO_RELAXATION`.
    /// Fixed points are unchanged.
    pub(super) fn step_aniso(
        &mut self,
        state: &FlowState,
        order: AnisoOrder,
    ) -> Result<(FlowState, StepReport)> {
        let mesh = &state.mesh;
        let d = mesh.dim();
        let dt = self.config.dt;
        let nl = self.config.nonlinear;
        let gamma = self
            .config
            .aniso
            .clone()
            .unwrap_or_else(|| Anisotropy::iso(d));
        let weights = self
            .config
            .mobility
            .as_ref()
            .map(|b| face_weights(mesh, |nu| b.gamma_unchecked(nu)));
        let so = assemble_scalar(mesh, weights.as_deref())?;
        let dissipation_op = match order {
            AnisoOrder::Second => &so.m,
            AnisoOrder::Fourth => &so.a,
        };
        let a11 = dissipation_op.scaled(dt);
        let n = normal_coupling(mesh);
        let x0 = flatten(mesh.points(), d);
        let mut v: Vec<Vector3<f64>> = mesh.normals().to_vec();
        let mut prev_x: Option<Vec<f64>> = None;
        let mut iterations = 0;
        let mut linear = 0;
        let mut renormalized = 0;
        let sol = loop {
            iterations += 1;
            let ag = assemble_aniso_stiffness(mesh, &gamma, &v)?;
            renormalized += ag.renormalized;
            let sys = SaddleSystem {
                a11: a11.clone(),
                a12: n.transpose().scaled(-1.0),
                a21: n.clone(),
                rhs1: vec![0.0; a11.nrows()],
                rhs2: neg(ag.matrix.mul_vec(&x0)),
                a22: ag.matrix,
            };
            let sol = self.solve_saddle(&sys, "anisotropic flow system")?;
            linear += sol.iterations;
            if gamma.r() == 1.0 {
                break sol;
            }
            let x_new: Vec<f64> = x0.iter().zip(&sol.x2).map(|(a, b)| a + b).collect();
            if let Some(p) = &prev_x {
                let (done, diff) = displacement_converged(p, &x_new, nl.tol);
                if done {
                    break sol;
                }
                if iterations >= nl.maxit {
                    return Err(Error::NotConverged {
                        iterations,
                        residual: diff,
                        history: Vec::new(),
                    });
                }
            }
            let image = image_normals(mesh, &x_new)?;
            for (vj, nj) in v.iter_mut().zip(&image) {
                *vj = (*nj * ANISO_RELAXATION + *vj * (1.0 - ANISO_RELAXATION)).normalize();
            }
            prev_x = Some(x_new);
        };
        let (new_mesh, disp) = displaced(mesh, &sol.x2)?;
        let stability = Stability {
            kind: StabilityKind::Anisotropic,
            before: anisotropic_area(mesh, Some(&gamma)),
            after: anisotropic_area(&new_mesh, Some(&gamma)),
            dissipation: dt * quad(&sol.x1, dissipation_op, &sol.x1),
        };
        debug_assert_eq!(renormalized, 0, "face normals are unit vectors");
        let mut report = StepReport::new(stability);
        report.linear_iterations = linear;
        report.nonlinear_iterations = iterations;
        report.max_displacement = disp;
        let mut next = state.advanced(new_mesh, dt);
        next.kappa = Some(sol.x1);
        Ok((next, report))
    }
}

/// Weight of the newest image normals in the lagged anisotropic iteration.
const ANISO_RELAXATION: f64 = 0.5;

/// Unit normals of the faces of `mesh`'s connectivity placed at `x`.
fn image_normals(mesh: &Mesh, x: &[f64]) -> Result<Vec<Vector3<f64>>> {
    let d = mesh.dim();
    let threshold = mesh.degeneracy_threshold();
    (0..mesh.n_elements())
        .map(|j| {
            let q: Vec<Vector3<f64>> = mesh
                .element(j)
                .iter()
                .map(|&v| {
                    let mut p = Vector3::zeros();
                    for i in 0..d {
                        p[i] = x[v * d + i];
                    }
                    p
                })
                .collect();
            let (nu, meas) = raw_normal_and_measure(d, &q);
            if !(meas >= threshold) {
                return Err(Error::DegenerateElement {
                    index: j,
                    measure: meas,
                    threshold,
                });
            }
            Ok(nu)
        })
        .collect()
}
