//! Willmore-type flows: lagged-curvature Willmore/Helfrich flow, the
//! three-field scheme in `(Y⃗, κ, δX)`, the spontaneous-curvature and
//! area-difference scheme in `(Y⃗, δX)` and Dziuk's scheme in `(κ⃗, δX)`.

use nalgebra::{Matrix3, Vector3};

use super::{displaced, dot, neg, quad, unit_vertex_normals, Flow, FlowState, Scheme, StepReport};
use crate::assembly::{flatten, kron_identity, normal_coupling, omega_mass, stiffness, unflatten};
use crate::curvature::{
    bgn_curvature, lb_curvature_vector, weingarten, CurvatureInput, WeingartenVariant,
};
use crate::diagnostics::{
    ade_energy, signed_curvature, willmore_energy, AdeParams, Stability, StabilityKind,
};
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, SaddleSystem, TripletBuilder};
use crate::mesh::Mesh;

/// Relative determinant below which the multiplier system counts as singular.
pub const MULTIPLIER_SINGULAR_TOL: f64 = 1e-10;

/// Lagrange multipliers `(λ_A, λ_V)` from the symmetric system
/// `[[⟨κ,κ⟩^h, ⟨κ,1⟩], [⟨κ,1⟩, |Γ|]] (λ_A, λ_V) = −(⟨h,κ⟩^h + |∇_s κ|², ⟨h,1⟩^h)`,
/// reduced to one equation when only one constraint is active.
pub fn willmore_multipliers(
    mesh: &Mesh,
    kappa: &[f64],
    h: &[f64],
    grad_sq: f64,
    area: bool,
    volume: bool,
) -> Result<(f64, f64)> {
    let m = mesh.lumped_mass();
    let kk: f64 = m.iter().zip(kappa).map(|(m, k)| m * k * k).sum();
    let k1: f64 = m.iter().zip(kappa).map(|(m, k)| m * k).sum();
    let total: f64 = m.iter().sum();
    let r1 = -(m
        .iter()
        .zip(h)
        .zip(kappa)
        .map(|((m, h), k)| m * h * k)
        .sum::<f64>()
        + grad_sq);
    let r2 = -m.iter().zip(h).map(|(m, h)| m * h).sum::<f64>();
    match (area, volume) {
        (false, false) => Ok((0.0, 0.0)),
        (true, false) => {
            if !(kk > 0.0) {
                return Err(Error::SingularMultiplier("⟨κ, κ⟩^h vanishes".into()));
            }
            Ok((r1 / kk, 0.0))
        }
        (false, true) => Ok((0.0, r2 / total)),
        (true, true) => {
            let det = kk * total - k1 * k1;
            if !(det > MULTIPLIER_SINGULAR_TOL * kk * total) {
                return Err(Error::SingularMultiplier(format!(
                    "κ is constant on the current mesh (determinant {det:e})"
                )));
            }
            Ok(((r1 * total - k1 * r2) / det, (kk * r2 - k1 * r1) / det))
        }
    }
}

/// `⟨∇_s·Y, ∇_s·χ⟩ − 2 ⟨∇_s Y, D_s(χ)⟩` for every `χ = φ_b e_i`, as one vector per vertex,
/// with `D_s(χ) = ½ P (∇_s χ + (∇_s χ)ᵀ) P`.
pub fn elastic_pairing(mesh: &Mesh, y: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
    let d = mesh.dim();
    let mut out = vec![Vector3::zeros(); mesh.n_vertices()];
    for j in 0..mesh.n_elements() {
        let e = mesh.element(j);
        let g = mesh.basis_gradients(j);
        let s = mesh.measure(j);
        let p = mesh.tangent_projection(j);
        let mut grad = Matrix3::zeros();
        let mut div = 0.0;
        for a in 0..d {
            grad += y[e[a]] * g[a].transpose();
            div += y[e[a]].dot(&g[a]);
        }
        let sym = p * (grad + grad.transpose());
        for b in 0..d {
            out[e[b]] += (g[b] * div - sym * g[b]) * s;
        }
    }
    out
}

/// `⟨f, ∇_s·χ⟩^h` for every `χ = φ_b e_i`, with `f` given per element vertex.
fn lumped_divergence_pairing(mesh: &Mesh, f: impl Fn(usize, usize) -> f64) -> Vec<Vector3<f64>> {
    let d = mesh.dim();
    let mut out = vec![Vector3::zeros(); mesh.n_vertices()];
    for j in 0..mesh.n_elements() {
        let e = mesh.element(j);
        let g = mesh.basis_gradients(j);
        let w = mesh.measure(j) / d as f64;
        let sum: f64 = (0..d).map(|a| f(j, e[a])).sum();
        for b in 0..d {
            out[e[b]] += g[b] * (w * sum);
        }
    }
    out
}

/// `⟨u, (∇_s χ)ᵀ ν⟩^h` for every `χ = φ_b e_i`.
fn lumped_normal_pairing(mesh: &Mesh, u: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
    let d = mesh.dim();
    let mut out = vec![Vector3::zeros(); mesh.n_vertices()];
    for j in 0..mesh.n_elements() {
        let e = mesh.element(j);
        let g = mesh.basis_gradients(j);
        let w = mesh.measure(j) / d as f64;
        let nu = mesh.normal(j);
        let sum: Vector3<f64> = (0..d).map(|a| u[e[a]]).sum();
        for b in 0..d {
            out[e[b]] += nu * (w * sum.dot(&g[b]));
        }
    }
    out
}

/// `∫_Γ u · ν` for a piecewise linear `u`, integrated exactly.
fn normal_integral(mesh: &Mesh, u: &[Vector3<f64>]) -> f64 {
    let d = mesh.dim();
    (0..mesh.n_elements())
        .map(|j| {
            let mean: Vector3<f64> =
                mesh.element(j).iter().map(|&v| u[v]).sum::<Vector3<f64>>() / d as f64;
            mesh.measure(j) * mean.dot(&mesh.normal(j))
        })
        .sum()
}

/// `|W|²` at the vertices for the lagged-curvature scheme; `κ²` for curves.
fn weingarten_norm_sq(mesh: &Mesh, variant: WeingartenVariant, kappa: &[f64]) -> Result<Vec<f64>> {
    if mesh.is_curve() {
        return Ok(kappa.iter().map(|k| k * k).collect());
    }
    let kv: Vec<Vector3<f64>>;
    let input = match variant {
        WeingartenVariant::Wh => CurvatureInput::Scalar(kappa),
        WeingartenVariant::Heine04 | WeingartenVariant::Whsym => {
            kv = mesh
                .vertex_normals()
                .iter()
                .zip(kappa)
                .map(|(w, k)| w * *k)
                .collect();
            CurvatureInput::Vector(&kv)
        }
        WeingartenVariant::NablaOmega | WeingartenVariant::NablaOmegaNormalized => {
            CurvatureInput::None
        }
    };
    Ok(weingarten(mesh, variant, input)?.norm_sq_vertex(mesh))
}

fn missing(what: &str) -> Error {
    Error::InvalidParameter(format!(
        "state carries no {what}; initialize it with Flow::initialize"
    ))
}

impl Flow {
    /// `κ^0` from the coupled curvature system, and `Y⃗^0 = π[κ^0 ω̂^0]` for the three-field scheme.
    pub(super) fn init_scalar_willmore(&mut self, state: &mut FlowState) -> Result<()> {
        let kappa = bgn_curvature(&state.mesh, &mut self.solver)?.kappa;
        if self.config.scheme == Scheme::WillmoreStable {
            let w = unit_vertex_normals(&state.mesh)?;
            state.y = Some(w.iter().zip(&kappa).map(|(w, k)| w * *k).collect());
        }
        state.kappa = Some(kappa);
        Ok(())
    }

    /// `κ⃗^0` from the Laplace–Beltrami identity; for the area-difference scheme
    /// also `A^0 = ∫ κ⃗^0 · ν − M₀` and `Y⃗^0 = κ⃗^0 + (β A^0 − κ̄) ω^0`.
    pub(super) fn init_vector_willmore(&mut self, state: &mut FlowState) -> Result<()> {
        let kv = lb_curvature_vector(&state.mesh);
        if self.config.scheme == Scheme::WillmoreAde {
            let p = self.config.willmore.effective_ade();
            let a0 = normal_integral(&state.mesh, &kv) - p.m0;
            let c = p.beta * a0 - p.kappa_bar;
            let w = state.mesh.vertex_normals();
            state.y = Some(kv.iter().zip(&w).map(|(k, w)| k + w * c).collect());
            state.ade_a = Some(a0);
        }
        state.kappa_vec = Some(kv);
        Ok(())
    }

    pub(super) fn step_willmore(&mut self, state: &FlowState) -> Result<(FlowState, StepReport)> {
        let mesh = &state.mesh;
        let d = mesh.dim();
        let dt = self.config.dt;
        let wp = self.config.willmore;
        let p = wp.effective_ade();
        let kappa = state.kappa.as_ref().ok_or_else(|| missing("curvature"))?;
        let m = mesh.lumped_mass();
        let a = stiffness(mesh, None);
        let a_vec = kron_identity(&a, d);
        let n = normal_coupling(mesh);
        let w2 = weingarten_norm_sq(mesh, wp.weingarten, kappa)?;
        let a_m = dot(&m, kappa) - p.m0;
        let g: Vec<f64> = kappa
            .iter()
            .zip(&w2)
            .map(|(k, w)| -(k - p.kappa_bar) * w - p.beta * a_m * (w - k * k))
            .collect();
        let h: Vec<f64> = g
            .iter()
            .zip(kappa)
            .map(|(g, k)| g + 0.5 * (k - p.kappa_bar).powi(2) * k)
            .collect();
        let (lambda_a, lambda_v) =
            willmore_multipliers(mesh, kappa, &h, quad(kappa, &a, kappa), wp.area, wp.volume)?;
        let lp = lambda_a.max(0.0);
        let lm = lambda_a.min(0.0);
        let diag: Vec<f64> = m
            .iter()
            .zip(kappa)
            .map(|(m, k)| dt * m * (0.5 * (k - p.kappa_bar).powi(2) + lp))
            .collect();
        let a11 = a
            .scaled(dt)
            .add(1.0, &CsrMatrix::diagonal_matrix(&diag), 1.0);
        let rhs1: Vec<f64> = (0..m.len())
            .map(|i| -dt * m[i] * (g[i] + lm * kappa[i] + lambda_v))
            .collect();
        let sys = SaddleSystem {
            a11,
            a12: n.transpose().scaled(-1.0),
            a21: n,
            rhs1,
            rhs2: neg(a_vec.mul_vec(&flatten(mesh.points(), d))),
            a22: a_vec,
        };
        let sol = self.solve_saddle(&sys, "Willmore system")?;
        let (new_mesh, disp) = displaced(mesh, &sol.x2)?;
        let stability = Stability {
            kind: StabilityKind::Monitor,
            before: ade_energy(mesh, kappa, &p),
            after: ade_energy(&new_mesh, &sol.x1, &p),
            dissipation: 0.0,
        };
        let mut report = StepReport::new(stability);
        report.linear_iterations = sol.iterations;
        report.max_displacement = disp;
        report.multipliers = Some((lambda_a, lambda_v));
        let mut next = state.advanced(new_mesh, dt);
        next.kappa = Some(sol.x1);
        Ok((next, report))
    }

    /// `[[A⊗I, 0, −𝓜/Δt], [−Nᵀ, M, 0], [0, N, A⊗I]] (Y⃗, κ, δX) = (−R, 0, −(A⊗I) X^m)`.
    pub(super) fn step_willmore_stable(
        &mut self,
        state: &FlowState,
    ) -> Result<(FlowState, StepReport)> {
        let mesh = &state.mesh;
        let d = mesh.dim();
        let k = mesh.n_vertices();
        let dk = d * k;
        let dt = self.config.dt;
        let kappa = state.kappa.as_ref().ok_or_else(|| missing("curvature"))?;
        let y = state
            .y
            .as_ref()
            .ok_or_else(|| missing("auxiliary field Y"))?;
        let m = mesh.lumped_mass();
        let a_vec = kron_identity(&stiffness(mesh, None), d);
        let n = normal_coupling(mesh);
        let big_m = omega_mass(mesh, &mesh.vertex_normals());

        let elastic = elastic_pairing(mesh, y);
        let normals = mesh.normals();
        let div = lumped_divergence_pairing(mesh, |j, v| {
            kappa[v] * (0.5 * kappa[v] - y[v].dot(&normals[j]))
        });
        let ky: Vec<Vector3<f64>> = y.iter().zip(kappa).map(|(y, k)| y * *k).collect();
        let nrm = lumped_normal_pairing(mesh, &ky);
        let r: Vec<Vector3<f64>> = (0..k).map(|v| elastic[v] - div[v] - nrm[v]).collect();

        let mut b11 = TripletBuilder::new(dk + k, dk + k);
        b11.add_matrix(0, 0, &a_vec, 1.0);
        b11.add_transpose(dk, 0, &n, -1.0);
        for (i, mi) in m.iter().enumerate() {
            b11.push(dk + i, dk + i, *mi);
        }
        let mut b12 = TripletBuilder::new(dk + k, dk);
        b12.add_matrix(0, 0, &big_m, -1.0 / dt);
        let mut b21 = TripletBuilder::new(dk, dk + k);
        b21.add_matrix(0, dk, &n, 1.0);
        let mut rhs1 = neg(flatten(&r, d));
        rhs1.extend(std::iter::repeat(0.0).take(k));
        let sys = SaddleSystem {
            a11: b11.build(),
            a12: b12.build(),
            a21: b21.build(),
            rhs1,
            rhs2: neg(a_vec.mul_vec(&flatten(mesh.points(), d))),
            a22: a_vec,
        };
        let sol = self.solve_saddle(&sys, "three-field Willmore system")?;
        let (new_mesh, disp) = displaced(mesh, &sol.x2)?;
        let new_kappa = sol.x1[dk..].to_vec();
        let stability = Stability {
            kind: StabilityKind::Monitor,
            before: willmore_energy(mesh, kappa),
            after: willmore_energy(&new_mesh, &new_kappa),
            dissipation: 0.0,
        };
        let mut report = StepReport::new(stability);
        report.linear_iterations = sol.iterations;
        report.max_displacement = disp;
        let mut next = state.advanced(new_mesh, dt);
        next.y = Some(unflatten(&sol.x1[..dk], d));
        next.kappa = Some(new_kappa);
        Ok((next, report))
    }

    /// Vector Willmore schemes in `(Y⃗, δX)`:
    /// `M Y⃗ + (A⊗I) δX = −(A⊗I) X^m + c M ω`, `−(A⊗I) Y⃗ + M δX/Δt = R`.
    ///
    /// With `dziuk`, `Y⃗ = κ⃗`, `c = 0` and
    /// `R(χ) = ⟨∇_s·κ⃗, ∇_s·χ⟩ − 2⟨∇_s κ⃗, D_s(χ)⟩ + ⟨½|κ⃗|², ∇_s·χ⟩^h`;
    /// otherwise `c = β A^m − κ̄` and `R` carries the spontaneous-curvature and
    /// area-difference terms.
    pub(super) fn step_willmore_ade(
        &mut self,
        state: &FlowState,
        dziuk: bool,
    ) -> Result<(FlowState, StepReport)> {
        let mesh = &state.mesh;
        let d = mesh.dim();
        let k = mesh.n_vertices();
        let dt = self.config.dt;
        let p = if dziuk {
            AdeParams::default()
        } else {
            self.config.willmore.effective_ade()
        };
        let kv = state
            .kappa_vec
            .as_ref()
            .ok_or_else(|| missing("curvature vector"))?;
        let omega = mesh.vertex_normals();
        let (r, c) = if dziuk {
            let elastic = elastic_pairing(mesh, kv);
            let half = lumped_divergence_pairing(mesh, |_, v| 0.5 * kv[v].norm_squared());
            let r: Vec<Vector3<f64>> = (0..k).map(|v| elastic[v] + half[v]).collect();
            (r, 0.0)
        } else {
            let y = state
                .y
                .as_ref()
                .ok_or_else(|| missing("auxiliary field Y"))?;
            let a_m = state
                .ade_a
                .ok_or_else(|| missing("area-difference variable"))?;
            let c = p.beta * a_m - p.kappa_bar;
            let normals = mesh.normals();
            let elastic = elastic_pairing(mesh, y);
            let nrm = lumped_normal_pairing(mesh, kv);
            let div = lumped_divergence_pairing(mesh, |j, v| {
                let nu = normals[j];
                0.5 * (kv[v] - nu * p.kappa_bar).norm_squared()
                    - kv[v].dot(&(y[v] - nu * (p.beta * a_m)))
            });
            let r: Vec<Vector3<f64>> = (0..k).map(|v| elastic[v] + nrm[v] * c - div[v]).collect();
            (r, c)
        };

        let m = mesh.lumped_mass();
        let a_vec = kron_identity(&stiffness(mesh, None), d);
        let mass_vec = kron_identity(&CsrMatrix::diagonal_matrix(&m), d);
        let mw: Vec<Vector3<f64>> = omega.iter().zip(&m).map(|(w, m)| w * (*m * c)).collect();
        let ax = a_vec.mul_vec(&flatten(mesh.points(), d));
        let rhs1: Vec<f64> = flatten(&mw, d)
            .iter()
            .zip(&ax)
            .map(|(a, b)| a - b)
            .collect();
        let sys = SaddleSystem {
            a11: mass_vec.clone(),
            a12: a_vec.clone(),
            a21: a_vec.scaled(-1.0),
            a22: mass_vec.scaled(1.0 / dt),
            rhs1,
            rhs2: flatten(&r, d),
        };
        let context = if dziuk {
            "Dziuk Willmore system"
        } else {
            "area-difference Willmore system"
        };
        let sol = self.solve_saddle(&sys, context)?;
        let y_new = unflatten(&sol.x1, d);
        let kv_new: Vec<Vector3<f64>> = y_new.iter().zip(&omega).map(|(y, w)| y - w * c).collect();
        let (new_mesh, disp) = displaced(mesh, &sol.x2)?;
        let stability = Stability {
            kind: StabilityKind::Monitor,
            before: ade_energy(mesh, &signed_curvature(mesh, kv), &p),
            after: ade_energy(&new_mesh, &signed_curvature(&new_mesh, &kv_new), &p),
            dissipation: 0.0,
        };
        let mut report = StepReport::new(stability);
        report.linear_iterations = sol.iterations;
        report.max_displacement = disp;
        let mut next = state.advanced(new_mesh, dt);
        if !dziuk {
            next.ade_a = Some(normal_integral(mesh, &kv_new) - p.m0);
            next.y = Some(y_new);
        }
        next.kappa_vec = Some(kv_new);
        Ok((next, report))
    }
}
