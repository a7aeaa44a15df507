//! Mean curvature flow variants that are not instances of the generalized
//! scheme: the velocity-mass schemes (eliminated κ, Dziuk, θ-weighted), the
//! parametric scheme with speed weighting, and the equidistributing scheme.

use nalgebra::Vector3;

use super::{
    displaced, displacement_converged, dot, neg, quad, unit_vertex_normals, Flow, FlowState,
    StepReport,
};
use crate::assembly::{
    assemble_qtheta_mass, consistent_mass, flatten, kron_identity, lumped_mass, omega_mass,
    stiffness, unflatten,
};
use crate::diagnostics::{Stability, StabilityKind};
use crate::error::Result;
use crate::linalg::{CsrMatrix, SaddleSystem, TripletBuilder};
use crate::mesh::Mesh;

impl Flow {
    /// Solves `(Q/Δt + A ⊗ I) δX = −(A ⊗ I) X^m` and reports the velocity-mass
    /// stability terms. With `normals`, `κ_k = n_k · δX_k / Δt` is returned.
    fn velocity_mass_step(
        &mut self,
        state: &FlowState,
        q: &CsrMatrix,
        normals: Option<&[Vector3<f64>]>,
        context: &str,
    ) -> Result<(FlowState, StepReport)> {
        let mesh = &state.mesh;
        let d = mesh.dim();
        let dt = self.config.dt;
        let a_vec = kron_identity(&stiffness(mesh, None), d);
        let lhs = q.scaled(1.0 / dt).add(1.0, &a_vec, 1.0);
        let rhs = neg(a_vec.mul_vec(&flatten(mesh.points(), d)));
        let (dx, iters) = self.solve_spd(&lhs, &rhs, context)?;
        let (new_mesh, disp) = displaced(mesh, &dx)?;
        let stability = Stability {
            kind: StabilityKind::VelocityMass,
            before: mesh.area(),
            after: new_mesh.area(),
            dissipation: quad(&dx, q, &dx) / dt,
        };
        let mut next = state.advanced(new_mesh, dt);
        next.kappa = normals.map(|w| {
            w.iter()
                .enumerate()
                .map(|(k, n)| (0..d).map(|i| n[i] * dx[k * d + i]).sum::<f64>() / dt)
                .collect()
        });
        let mut report = StepReport::new(stability);
        report.linear_iterations = iters;
        report.max_displacement = disp;
        Ok((next, report))
    }

    pub(super) fn step_elimkappa(
        &mut self,
        state: &FlowState,
        normalized: bool,
    ) -> Result<(FlowState, StepReport)> {
        let w = if normalized {
            unit_vertex_normals(&state.mesh)?
        } else {
            state.mesh.vertex_normals()
        };
        let q = omega_mass(&state.mesh, &w);
        self.velocity_mass_step(state, &q, Some(&w), "eliminated mean curvature system")
    }

    pub(super) fn step_dziuk(
        &mut self,
        state: &FlowState,
        lumped: bool,
    ) -> Result<(FlowState, StepReport)> {
        let mass = if lumped {
            lumped_mass(&state.mesh, None)
        } else {
            consistent_mass(&state.mesh)
        };
        let q = kron_identity(&mass, state.mesh.dim());
        self.velocity_mass_step(state, &q, None, "Dziuk system")
    }

    pub(super) fn step_theta(
        &mut self,
        state: &FlowState,
        theta: f64,
    ) -> Result<(FlowState, StepReport)> {
        let q = assemble_qtheta_mass(&state.mesh, theta)?;
        self.velocity_mass_step(state, &q, None, "θ-scheme system")
    }

    /// `(M_w/Δt + J L) X^{m+1} = M_w X^m / Δt` on the parameter domain `[0, 1)`
    /// with element weights `w_j = (J |h_j|)²`.
    pub(super) fn step_dd95(&mut self, state: &FlowState) -> Result<(FlowState, StepReport)> {
        let mesh = &state.mesh;
        let dt = self.config.dt;
        let j = mesh.n_elements() as f64;
        let k = mesh.n_vertices();
        let mut mw = vec![0.0; k];
        for (e, &h) in mesh.measures().iter().enumerate() {
            let w = (j * h).powi(2) / (2.0 * j);
            for &v in mesh.element(e) {
                mw[v] += w;
            }
        }
        let l = parameter_laplacian(mesh);
        let mw_dt: Vec<f64> = mw.iter().map(|m| m / dt).collect();
        let lhs = kron_identity(&CsrMatrix::diagonal_matrix(&mw_dt).add(1.0, &l, j), 2);
        let x0 = flatten(mesh.points(), 2);
        let rhs: Vec<f64> = x0
            .iter()
            .enumerate()
            .map(|(i, x)| mw_dt[i / 2] * x)
            .collect();
        let (x, iters) = self.solve_spd(&lhs, &rhs, "parametric speed-weighted system")?;
        let dx: Vec<f64> = x.iter().zip(&x0).map(|(a, b)| a - b).collect();
        let (new_mesh, disp) = displaced(mesh, &dx)?;
        let stability = Stability {
            kind: StabilityKind::Monitor,
            before: mesh.area(),
            after: new_mesh.area(),
            dissipation: 0.0,
        };
        let mut report = StepReport::new(stability);
        report.linear_iterations = iters;
        report.max_displacement = disp;
        Ok((state.advanced(new_mesh, dt), report))
    }

    /// Equidistributing scheme, solved by lagged iteration on the normal and the length.
    ///
    /// Iterate `i` solves `[[Δt |Γ^i|/J I, −Ñᵀ], [Ñ, (J/|Γ^i|) L ⊗ I]] (κ, δX) =
    /// (0, −(J/|Γ^i|) (L ⊗ I) X^m)` with `Ñ_k = ½ (X^i_{k+1} − X^i_{k−1})` rotated
    /// by a quarter turn towards the inside.
    pub(super) fn step_fdfi(&mut self, state: &FlowState) -> Result<(FlowState, StepReport)> {
        let mesh = &state.mesh;
        let dt = self.config.dt;
        let nl = self.config.nonlinear;
        let k = mesh.n_vertices();
        let j = mesh.n_elements() as f64;
        let l_vec = kron_identity(&parameter_laplacian(mesh), 2);
        let x0 = flatten(mesh.points(), 2);
        let l_x0 = l_vec.mul_vec(&x0);
        let mut xi = x0.clone();
        let mut kappa = vec![0.0; k];
        let mut converged = false;
        let mut iterations = 0;
        let mut linear = 0;
        for _ in 0..nl.maxit {
            iterations += 1;
            let pts = unflatten(&xi, 2);
            let (n_tilde, length) = chord_normals(mesh, &pts);
            let s = j / length;
            let sys = SaddleSystem {
                a11: CsrMatrix::diagonal_matrix(&vec![dt / s; k]),
                a12: n_tilde.transpose().scaled(-1.0),
                a21: n_tilde,
                a22: l_vec.scaled(s),
                rhs1: vec![0.0; k],
                rhs2: l_x0.iter().map(|v| -s * v).collect(),
            };
            let sol = self.solve_saddle(&sys, "equidistributing system")?;
            linear += sol.iterations;
            let x_new: Vec<f64> = x0.iter().zip(&sol.x2).map(|(a, b)| a + b).collect();
            let (done, _) = displacement_converged(&xi, &x_new, nl.tol);
            xi = x_new;
            kappa = sol.x1;
            if done {
                converged = true;
                break;
            }
        }
        let dx: Vec<f64> = xi.iter().zip(&x0).map(|(a, b)| a - b).collect();
        let (new_mesh, disp) = displaced(mesh, &dx)?;
        let after = new_mesh.area();
        let stability = Stability {
            kind: StabilityKind::Equidistributing,
            before: mesh.area(),
            after,
            dissipation: dt * after * dot(&kappa, &kappa) / j,
        };
        let q = new_mesh.mesh_quality();
        let mut report = StepReport::new(stability);
        report.linear_iterations = linear;
        report.nonlinear_iterations = iterations;
        report.converged = converged;
        report.max_displacement = disp;
        report.equidistribution = Some(q.max_edge / q.min_edge - 1.0);
        let mut next = state.advanced(new_mesh, dt);
        next.kappa = Some(kappa);
        Ok((next, report))
    }
}

/// Periodic parameter-domain Laplacian: `+1` on the diagonal and `−1` off it
/// for each element, so that `J L` is the stiffness for `h_ρ = 1/J`.
fn parameter_laplacian(mesh: &Mesh) -> CsrMatrix {
    let k = mesh.n_vertices();
    let mut b = TripletBuilder::with_capacity(k, k, 4 * mesh.n_elements());
    for e in 0..mesh.n_elements() {
        let v = mesh.element(e);
        b.push(v[0], v[0], 1.0);
        b.push(v[1], v[1], 1.0);
        b.push(v[0], v[1], -1.0);
        b.push(v[1], v[0], -1.0);
    }
    b.build()
}

/// Normal coupling `Ñ_k = Σ_{j∋k} ½ h_j^⊥` of a polygon with the connectivity of
/// `mesh`, evaluated without degeneracy checks, and its length.
fn chord_normals(mesh: &Mesh, pts: &[Vector3<f64>]) -> (CsrMatrix, f64) {
    let mut acc = vec![Vector3::zeros(); pts.len()];
    let mut length = 0.0;
    for e in 0..mesh.n_elements() {
        let v = mesh.element(e);
        let h = pts[v[1]] - pts[v[0]];
        length += (h.x * h.x + h.y * h.y).sqrt();
        let half = Vector3::new(-h.y, h.x, 0.0) * 0.5;
        acc[v[0]] += half;
        acc[v[1]] += half;
    }
    (crate::assembly::vertex_column_blocks(&acc, 2), length)
}
