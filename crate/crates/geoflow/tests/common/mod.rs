//! Helpers shared by the integration tests.

#![allow(dead_code)]

use geoflow::diagnostics::Stability;
use geoflow::flows::{Flow, FlowConfig, FlowState, StepReport};
use geoflow::mesh::{generate_mesh, MeshSpec};
use geoflow::Mesh;
use nalgebra::Vector3;

/// Generates a mesh from its textual description.
pub fn mesh(spec: &str) -> Mesh {
    let spec: MeshSpec = spec.parse().expect("valid mesh spec");
    generate_mesh(&spec).expect("mesh generation succeeds")
}

/// One entry of a run: the state after the step and its report.
pub struct Run {
    pub initial: FlowState,
    pub states: Vec<FlowState>,
    pub reports: Vec<StepReport>,
}

impl Run {
    pub fn last(&self) -> &FlowState {
        self.states.last().unwrap_or(&self.initial)
    }

    pub fn stabilities(&self) -> impl Iterator<Item = &Stability> {
        self.reports.iter().map(|r| &r.stability)
    }
}

/// Runs `steps` steps of the configured flow from `start`.
pub fn run(config: FlowConfig, start: Mesh, steps: usize) -> Run {
    let mut flow = Flow::new(config);
    let initial = flow.initialize(start).expect("initialization succeeds");
    let mut states = Vec::with_capacity(steps);
    let mut reports = Vec::with_capacity(steps);
    let mut state = initial.clone();
    for _ in 0..steps {
        let (next, report) = flow.step(&state).expect("step succeeds");
        states.push(next.clone());
        reports.push(report);
        state = next;
    }
    Run {
        initial,
        states,
        reports,
    }
}

/// Distance of every vertex from the origin.
pub fn radii(mesh: &Mesh) -> Vec<f64> {
    mesh.points().iter().map(|p| p.norm()).collect()
}

/// Largest deviation of the vertex radii from `r`.
pub fn max_radius_error(mesh: &Mesh, r: f64) -> f64 {
    radii(mesh)
        .iter()
        .map(|x| (x - r).abs())
        .fold(0.0, f64::max)
}

/// Largest vertex-position difference between two meshes of equal size.
pub fn max_point_diff(a: &Mesh, b: &Mesh) -> f64 {
    a.points()
        .iter()
        .zip(b.points())
        .map(|(p, q)| (p - q).norm())
        .fold(0.0, f64::max)
}

/// Largest absolute entrywise difference of two equally long slices.
pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// A random star-shaped closed curve with `j` vertices: radius
/// `1 + Σ_k a_k cos(kθ + φ_k)` with small random Fourier coefficients,
/// sampled at jittered angles.
pub fn random_curve(j: usize, seed: u64) -> Mesh {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(f64, f64)> = (2..6)
        .map(|_| {
            (
                rng.gen_range(-0.08..0.08),
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let pts = (0..j)
        .map(|i| {
            let t = (i as f64 + rng.gen_range(-0.3..0.3)) * std::f64::consts::TAU / j as f64;
            let r = 1.0
                + modes
                    .iter()
                    .enumerate()
                    .map(|(k, (a, ph))| a * ((k as f64 + 2.0) * t + ph).cos())
                    .sum::<f64>();
            Vector3::new(r * t.cos(), r * t.sin(), 0.0)
        })
        .collect();
    Mesh::curve_from_vectors(pts).expect("random curve is valid")
}

/// A surface mesh whose vertices are moved radially by a seeded random factor
/// in `[1 − amp, 1 + amp]`.
pub fn jitter_surface(mesh: &Mesh, amp: f64, seed: u64) -> Mesh {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let pts = mesh
        .points()
        .iter()
        .map(|p| p * (1.0 + rng.gen_range(-amp..=amp)))
        .collect();
    mesh.with_points(pts).expect("jittered surface is valid")
}
