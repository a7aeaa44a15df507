//! Acceptance checks for the whole library, one line per criterion.
//!
//! Every criterion prints `PASS` or `FAIL` with the measured quantities and
//! the pinned tolerance it was compared against. The process exits with a
//! nonzero status if any criterion fails.

#[path = "../../geoflow/tests/reference/mod.rs"]
mod reference;

use std::process::ExitCode;
use std::time::Instant;

use geoflow::aniso::Anisotropy;
use geoflow::assembly::{
    assemble_aniso_stiffness, assemble_qtheta_mass, consistent_mass, lumped_mass, normal_coupling,
    stiffness,
};
use geoflow::diagnostics::{anisotropic_area, StabilityKind};
use geoflow::flows::{
    AnisoOrder, FChoice, Flow, FlowConfig, FlowState, Scheme, StepReport, Strategy,
    TangentialParams,
};
use geoflow::linalg::{CsrMatrix, SolveMethod};
use geoflow::mesh::{generate_mesh, MeshSpec};
use geoflow::{Error, Mesh};
use geoflow_cli::config::RunConfig;
use geoflow_cli::{eoc, presets};
use nalgebra::{Matrix3, Vector3};

/// Relative slack allowed in every asserted stability inequality.
const STABILITY_REL: f64 = 1e-9;
/// Shrinking circle: maximal vertex-radius error at `T`.
const CIRCLE_RADIUS_TOL: f64 = 1e-3;
/// Admissible experimental orders of convergence.
const EOC_RANGE: (f64, f64) = (1.7, 2.3);
/// Shrinking sphere: mean vertex-radius error at `T`.
const SPHERE_RADIUS_TOL: f64 = 1e-2;
/// Surface diffusion: relative enclosed-volume drift at the coarser step.
const SD_DRIFT_TOL: f64 = 1e-3;
/// Surface diffusion: admissible drift ratio between `Δt` and `Δt/2`.
const SD_RATIO_RANGE: (f64, f64) = (1.6, 2.4);
/// Stationary shapes: per-step displacement relative to the diameter.
const STATIONARY_REL: f64 = 1e-9;
/// Equidistribution: bound on `max/min edge length − 1`.
const EQUIDISTRIBUTION_TOL: f64 = 1e-7;
/// Spiral run: smallest edge length the coupled scheme must keep.
const SPIRAL_MIN_EDGE: f64 = 1e-6;
/// Lagged anisotropic iteration budget per step.
const ANISO_MAX_ITERATIONS: usize = 100;
/// Wulff attraction: Hausdorff distance relative to the diameter.
const WULFF_HAUSDORFF_REL: f64 = 0.02;
/// Willmore circle: maximal vertex-radius error over the run.
const WILLMORE_RADIUS_TOL: f64 = 5e-3;
/// Helfrich flow: relative drift of area and of enclosed volume.
const HELFRICH_DRIFT_TOL: f64 = 5e-3;
/// Direct and Schur-complement positions, relative to the mesh size.
const SOLVER_AGREEMENT_REL: f64 = 1e-8;
/// Assembled operators against the dense reference, relative to the largest entry.
const REFERENCE_TOL: f64 = 1e-12;
/// Collapsed schemes: per-step vertex difference.
const COLLAPSE_TOL: f64 = 1e-12;

type Outcome = Result<(bool, String), String>;

fn mesh(spec: &str) -> Mesh {
    let spec: MeshSpec = spec.parse().expect("valid mesh spec");
    generate_mesh(&spec).expect("mesh generation succeeds")
}

fn perturbed_circle(j: usize, perturb: f64, seed: u64) -> Mesh {
    generate_mesh(&MeshSpec::Circle {
        j,
        r: 1.0,
        perturb,
        seed,
    })
    .expect("mesh generation succeeds")
}

/// Runs `steps` steps, handing every state after a step and its report to `each`.
fn simulate(
    cfg: FlowConfig,
    start: Mesh,
    steps: usize,
    mut each: impl FnMut(&FlowState, &FlowState, &StepReport),
) -> Result<FlowState, Error> {
    let mut flow = Flow::new(cfg);
    let mut state = flow.initialize(start)?;
    for _ in 0..steps {
        let (next, report) = flow.step(&state)?;
        each(&state, &next, &report);
        state = next;
    }
    Ok(state)
}

/// All states of a run, starting with the initial one.
fn trajectory(cfg: FlowConfig, start: Mesh, steps: usize) -> Result<Vec<FlowState>, Error> {
    let mut flow = Flow::new(cfg);
    let mut states = vec![flow.initialize(start)?];
    for _ in 0..steps {
        let next = flow.step(states.last().unwrap())?.0;
        states.push(next);
    }
    Ok(states)
}

fn max_point_diff(a: &Mesh, b: &Mesh) -> f64 {
    a.points()
        .iter()
        .zip(b.points())
        .map(|(p, q)| (p - q).norm())
        .fold(0.0, f64::max)
}

fn trajectory_difference(
    a: FlowConfig,
    b: FlowConfig,
    start: &Mesh,
    steps: usize,
) -> Result<f64, Error> {
    let ta = trajectory(a, start.clone(), steps)?;
    let tb = trajectory(b, start.clone(), steps)?;
    Ok(ta
        .iter()
        .zip(&tb)
        .map(|(x, y)| max_point_diff(&x.mesh, &y.mesh))
        .fold(0.0, f64::max))
}

fn max_radius_error(mesh: &Mesh, r: f64) -> f64 {
    mesh.points()
        .iter()
        .map(|p| (p.norm() - r).abs())
        .fold(0.0, f64::max)
}

fn tangential(f: FChoice, alpha: f64) -> Scheme {
    Scheme::Tangential {
        f,
        params: TangentialParams {
            strategy: Strategy::S1,
            alpha,
            delta: 1.0,
        },
    }
}

fn within(x: f64, range: (f64, f64)) -> bool {
    (range.0..=range.1).contains(&x)
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Largest stability slack relative to `|Γ^m|` over a run, or an error if a
/// step reports an unasserted bound.
fn worst_slack(cfg: FlowConfig, start: Mesh, steps: usize) -> Result<f64, String> {
    let mut worst = f64::NEG_INFINITY;
    let mut kind_ok = true;
    simulate(cfg, start, steps, |_, _, rep| {
        kind_ok &= rep.stability.kind.asserted();
        worst = worst.max(rep.stability.slack() / rep.stability.before.abs());
    })
    .map_err(err)?;
    if kind_ok {
        Ok(worst)
    } else {
        Err("a step reported an unasserted stability bound".into())
    }
}

fn mcf_stability() -> Outcome {
    let mut worst_curve = f64::NEG_INFINITY;
    for seed in 0..10 {
        let s = worst_slack(
            FlowConfig::new(Scheme::Mcf, 1e-3),
            perturbed_circle(64, 0.3, seed),
            50,
        )?;
        worst_curve = worst_curve.max(s);
    }
    let mut worst_surface = f64::NEG_INFINITY;
    let mut faces = Vec::new();
    for spec in [
        "icosphere(3,1)",
        "torus(32,16,2,0.5)",
        "cube_projected_sphere(3,1)",
    ] {
        let m = mesh(spec);
        faces.push(m.n_elements());
        if m.n_elements() > 2000 {
            return Err(format!("{spec} has {} faces", m.n_elements()));
        }
        worst_surface = worst_surface.max(worst_slack(FlowConfig::new(Scheme::Mcf, 1e-3), m, 20)?);
    }
    let pass = worst_curve <= STABILITY_REL && worst_surface <= STABILITY_REL;
    Ok((
        pass,
        format!(
            "worst relative slack: curves {worst_curve:.2e}, surfaces {worst_surface:.2e} (faces {faces:?}); limit {STABILITY_REL:e}"
        ),
    ))
}

fn eoc_rows(preset: &str) -> Result<Vec<eoc::EocRow>, String> {
    let text = presets::preset(preset).ok_or("missing preset")?;
    let config = RunConfig::parse(text, None).map_err(err)?;
    let spec = config.eoc.as_ref().ok_or("preset has no study")?;
    eoc::study(spec, &config.flow, false).map_err(err)
}

fn shrinking_circle() -> Outcome {
    let dt = 1e-4;
    let s = simulate(
        FlowConfig::new(Scheme::Mcf, dt),
        mesh("circle(128,1,0)"),
        2500,
        |_, _, _| {},
    )
    .map_err(err)?;
    let e = max_radius_error(&s.mesh, (1.0 - 2.0 * s.time).sqrt());
    let rows = eoc_rows("circle_mcf")?;
    let orders: Vec<f64> = rows.iter().filter_map(|r| r.eoc).collect();
    let pass = e < CIRCLE_RADIUS_TOL && orders.iter().all(|&o| within(o, EOC_RANGE));
    Ok((
        pass,
        format!(
            "radius error {e:.2e} at t = {:.3} (limit {CIRCLE_RADIUS_TOL:e}); orders {} for J = 32..256 (range {EOC_RANGE:?})",
            s.time,
            orders.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>().join(", ")
        ),
    ))
}

fn shrinking_sphere() -> Outcome {
    let mut cfg = FlowConfig::new(Scheme::Mcf, 1e-4);
    cfg.solver = SolveMethod::SchurCg {
        tol: 1e-12,
        maxit: 0,
    };
    let s = simulate(cfg, mesh("icosphere(3,1)"), 2000, |_, _, _| {}).map_err(err)?;
    let r = (1.0 - 4.0 * s.time).sqrt();
    let p = s.mesh.points();
    let e = p.iter().map(|q| (q.norm() - r).abs()).sum::<f64>() / p.len() as f64;
    Ok((
        e < SPHERE_RADIUS_TOL,
        format!(
            "mean radius error {e:.2e} at t = {:.3} (limit {SPHERE_RADIUS_TOL:e})",
            s.time
        ),
    ))
}

fn sd_volume_drift(dt: f64, final_time: f64) -> Result<(f64, bool), String> {
    let start = mesh("ellipse(128,2,1)");
    let v0 = start.enclosed_volume();
    let mut monotone = true;
    let steps = (final_time / dt).round() as usize;
    let s = simulate(
        FlowConfig::new(Scheme::Generic { f: FChoice::Sd }, dt),
        start,
        steps,
        |a, b, _| {
            monotone &= b.mesh.area() <= a.mesh.area();
        },
    )
    .map_err(err)?;
    Ok(((s.mesh.enclosed_volume() - v0).abs() / v0, monotone))
}

fn sd_conservation() -> Outcome {
    let (coarse, mono_c) = sd_volume_drift(1e-5, 0.05)?;
    let (fine, mono_f) = sd_volume_drift(5e-6, 0.05)?;
    let ratio = coarse / fine;
    let pass = coarse < SD_DRIFT_TOL && within(ratio, SD_RATIO_RANGE) && mono_c && mono_f;
    Ok((
        pass,
        format!(
            "volume drift {coarse:.2e} at Δt = 1e-5 (limit {SD_DRIFT_TOL:e}), {fine:.2e} at 5e-6, ratio {ratio:.3} (range {SD_RATIO_RANGE:?}); area monotone {}",
            mono_c && mono_f
        ),
    ))
}

fn sd_stationarity() -> Outcome {
    let mut worst = 0.0f64;
    for spec in ["circle(64,1,0)", "icosphere(0,1)"] {
        let m = mesh(spec);
        let diam = m.diameter();
        simulate(
            FlowConfig::new(Scheme::Generic { f: FChoice::Sd }, 1e-3),
            m,
            3,
            |_, _, rep| {
                worst = worst.max(rep.max_displacement / diam);
            },
        )
        .map_err(err)?;
    }
    Ok((
        worst < STATIONARY_REL,
        format!("largest displacement / diameter {worst:.2e} (limit {STATIONARY_REL:e})"),
    ))
}

fn full_equidistribution() -> Outcome {
    let mut cfg = FlowConfig::new(Scheme::Fdfi, 1e-2);
    cfg.nonlinear.maxit = 200;
    let (mut ratio, mut slack) = (0.0f64, f64::NEG_INFINITY);
    let mut ok = true;
    simulate(
        cfg,
        perturbed_circle(64, 0.2, geoflow::mesh::DEFAULT_SEED),
        10,
        |_, b, rep| {
            let q = b.mesh.mesh_quality();
            ratio = ratio.max(q.ratio - 1.0);
            slack = slack.max(rep.stability.slack() / rep.stability.before);
            ok &= rep.converged && rep.stability.kind == StabilityKind::Equidistributing;
        },
    )
    .map_err(err)?;
    Ok((
        ok && ratio < EQUIDISTRIBUTION_TOL && slack <= STABILITY_REL,
        format!(
            "max edge ratio − 1 {ratio:.2e} (limit {EQUIDISTRIBUTION_TOL:e}); relative slack {slack:.2e} (limit {STABILITY_REL:e})"
        ),
    ))
}

/// Runs a preset through the stepper, returning the smallest edge seen and
/// the error that stopped it, if any.
fn spiral_run(name: &str) -> Result<(f64, f64, Option<Error>), String> {
    let config =
        RunConfig::parse(presets::preset(name).ok_or("missing preset")?, None).map_err(err)?;
    let (dt, steps) = config.flow.schedule().map_err(err)?;
    let start = geoflow_cli::run::load_mesh(config.mesh.as_ref().ok_or("no mesh")?).map_err(err)?;
    let mut flow = Flow::new(config.flow.build(start.dim(), dt).map_err(err)?);
    let mut state = flow.initialize(start).map_err(err)?;
    let mut min_edge = state.mesh.mesh_quality().min_edge;
    for _ in 0..steps {
        match flow.step(&state) {
            Ok((next, _)) => state = next,
            Err(e) => return Ok((min_edge, state.time, Some(e))),
        }
        min_edge = min_edge.min(state.mesh.mesh_quality().min_edge);
    }
    Ok((min_edge, state.time, None))
}

fn spiral_contrast() -> Outcome {
    let (bgn_edge, bgn_time, bgn_err) = spiral_run("spiral")?;
    let (dziuk_edge, dziuk_time, dziuk_err) = spiral_run("spiral-dziuk")?;
    let bgn_ok = bgn_err.is_none() && bgn_edge > SPIRAL_MIN_EDGE;
    let dziuk_ok = matches!(
        dziuk_err.as_ref().map(Error::root),
        Some(Error::DegenerateElement { .. })
    ) && dziuk_time < 0.024;
    let describe = |e: &Option<Error>| {
        e.as_ref()
            .map_or_else(|| "completed".to_string(), |e| e.to_string())
    };
    Ok((
        bgn_ok && dziuk_ok,
        format!(
            "coupled scheme: {} at t = {bgn_time:.4}, min edge {bgn_edge:.2e} (limit {SPIRAL_MIN_EDGE:e}); Dziuk: {} at t = {dziuk_time:.4}, min edge {dziuk_edge:.2e}",
            describe(&bgn_err),
            describe(&dziuk_err)
        ),
    ))
}

fn aniso_stability() -> Outcome {
    let mut slack = f64::NEG_INFINITY;
    let mut iterations = 0;
    let mut ok = true;
    let mut observe = |_: &FlowState, _: &FlowState, rep: &StepReport| {
        slack = slack.max(rep.stability.slack() / rep.stability.before);
        iterations = iterations.max(rep.nonlinear_iterations);
        ok &= rep.converged && rep.stability.kind == StabilityKind::Anisotropic;
    };
    let mut weighted = FlowConfig::new(
        Scheme::Aniso {
            order: AnisoOrder::Second,
        },
        1e-3,
    );
    weighted.aniso = Some(Anisotropy::weighted(&[1.0, 0.25]).map_err(err)?);
    simulate(weighted, mesh("ellipse(128,2,1)"), 50, &mut observe).map_err(err)?;
    let mut cubic = FlowConfig::new(
        Scheme::Aniso {
            order: AnisoOrder::Second,
        },
        1e-3,
    );
    cubic.aniso = Some(Anisotropy::cubic(3, 0.01, 30.0).map_err(err)?);
    cubic.solver = SolveMethod::SchurCg {
        tol: 1e-12,
        maxit: 0,
    };
    simulate(cubic, mesh("icosphere(3,1)"), 10, &mut observe).map_err(err)?;
    Ok((
        ok && slack <= STABILITY_REL && iterations <= ANISO_MAX_ITERATIONS,
        format!(
            "relative slack {slack:.2e} (limit {STABILITY_REL:e}); most lagged iterations {iterations} (limit {ANISO_MAX_ITERATIONS})"
        ),
    ))
}

/// Area and area centroid of a closed polygon.
fn polygon_moments(p: &[Vector3<f64>]) -> (f64, Vector3<f64>) {
    let (mut a, mut c) = (0.0, Vector3::zeros());
    for i in 0..p.len() {
        let (u, v) = (p[i], p[(i + 1) % p.len()]);
        let cross = u.x * v.y - v.x * u.y;
        a += cross / 2.0;
        c += (u + v) * cross / 6.0;
    }
    (a, c / a)
}

fn distance_to_polygon(q: &Vector3<f64>, p: &[Vector3<f64>]) -> f64 {
    (0..p.len())
        .map(|i| {
            let (u, v) = (p[i], p[(i + 1) % p.len()]);
            let e = v - u;
            let s = ((q - u).dot(&e) / e.norm_squared()).clamp(0.0, 1.0);
            (q - (u + e * s)).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

fn hausdorff(a: &[Vector3<f64>], b: &[Vector3<f64>]) -> f64 {
    let one = |x: &[Vector3<f64>], y: &[Vector3<f64>]| {
        x.iter()
            .map(|q| distance_to_polygon(q, y))
            .fold(0.0, f64::max)
    };
    one(a, b).max(one(b, a))
}

fn wulff_attraction() -> Outcome {
    let gamma = Anisotropy::weighted(&[1.0, 0.25]).map_err(err)?;
    let mut cfg = FlowConfig::new(
        Scheme::Aniso {
            order: AnisoOrder::Second,
        },
        1e-4,
    );
    cfg.aniso = Some(gamma.clone());
    cfg.mobility = Some(gamma.clone());
    let start = mesh("ellipse(128,1,2)");
    let v0 = start.enclosed_volume();
    let gamma_area0 = anisotropic_area(&start, Some(&gamma));
    let mut flow = Flow::new(cfg);
    let mut state = flow.initialize(start).map_err(err)?;
    while state.mesh.enclosed_volume() > v0 / 32.0 {
        state = flow.step(&state).map_err(err)?.0;
        if state.step > 1_000_000 {
            return Err("volume did not shrink".into());
        }
    }
    let curve = state.mesh.points().to_vec();
    let (area, centroid) = polygon_moments(&curve);
    let wulff = gamma.sample_shapes(2048).map_err(err)?.wulff;
    let (w_area, w_centroid) = polygon_moments(&wulff);
    let scale = (area / w_area).sqrt();
    let target: Vec<Vector3<f64>> = wulff
        .iter()
        .map(|w| centroid + (w - w_centroid) * scale)
        .collect();
    let rel = hausdorff(&curve, &target) / state.mesh.diameter();
    let decreased = anisotropic_area(&state.mesh, Some(&gamma)) < gamma_area0;
    Ok((
        rel < WULFF_HAUSDORFF_REL && decreased,
        format!(
            "Hausdorff distance / diameter {rel:.4} at t = {:.4} (limit {WULFF_HAUSDORFF_REL})",
            state.time
        ),
    ))
}

fn willmore_circle() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for scheme in [Scheme::Willmore, Scheme::WillmoreStable] {
        let mut worst = 0.0f64;
        simulate(
            FlowConfig::new(scheme, 1e-5),
            mesh("circle(128,1,0)"),
            10_000,
            |_, b, _| {
                worst = worst.max(max_radius_error(&b.mesh, (1.0 + 2.0 * b.time).powf(0.25)));
            },
        )
        .map_err(err)?;
        pass &= worst < WILLMORE_RADIUS_TOL;
        parts.push(format!("{scheme} {worst:.2e}"));
    }
    Ok((
        pass,
        format!(
            "max radius error {} (limit {WILLMORE_RADIUS_TOL:e})",
            parts.join(", ")
        ),
    ))
}

fn helfrich() -> Outcome {
    let start = mesh("ellipse(128,2,1)");
    let (a0, v0) = (start.area(), start.enclosed_volume());
    let mut cfg = FlowConfig::new(Scheme::Willmore, 1e-5);
    cfg.willmore.area = true;
    cfg.willmore.volume = true;
    let (mut da, mut dv) = (0.0f64, 0.0f64);
    simulate(cfg.clone(), start, 10_000, |_, b, _| {
        da = da.max((b.mesh.area() - a0).abs() / a0);
        dv = dv.max((b.mesh.enclosed_volume() - v0).abs() / v0);
    })
    .map_err(err)?;
    let mut flow = Flow::new(cfg);
    let circle = flow.initialize(mesh("circle(32,1,0)")).map_err(err)?;
    let singular = match flow.step(&circle) {
        Err(e) => matches!(e.root(), Error::SingularMultiplier(_)),
        Ok(_) => false,
    };
    Ok((
        da < HELFRICH_DRIFT_TOL && dv < HELFRICH_DRIFT_TOL && singular,
        format!(
            "area drift {da:.2e}, volume drift {dv:.2e} (limit {HELFRICH_DRIFT_TOL:e}); circle rejected as singular: {singular}"
        ),
    ))
}

/// Pairs of configuration and start mesh run through both solver paths.
fn solver_suite() -> Result<Vec<(String, FlowConfig, Mesh)>, String> {
    let curve = perturbed_circle(48, 0.2, 13);
    let surface = mesh("cube_projected_sphere(2,1)");
    let torus = mesh("torus(12,6,2,0.5)");
    let mut aniso = FlowConfig::new(
        Scheme::Aniso {
            order: AnisoOrder::Second,
        },
        1e-3,
    );
    aniso.aniso = Some(Anisotropy::weighted(&[1.0, 0.25]).map_err(err)?);
    let mut aniso3 = FlowConfig::new(
        Scheme::Aniso {
            order: AnisoOrder::Second,
        },
        1e-3,
    );
    aniso3.aniso = Some(Anisotropy::cubic(3, 0.1, 3.0).map_err(err)?);
    let mut fdfi = FlowConfig::new(Scheme::Fdfi, 1e-2);
    fdfi.nonlinear.maxit = 200;
    let tangential_s2 = Scheme::Tangential {
        f: FChoice::Mcf,
        params: TangentialParams {
            strategy: Strategy::S2,
            alpha: 1.0,
            delta: 0.5,
        },
    };
    let mut suite = vec![
        ("aniso".into(), aniso, curve.clone()),
        ("aniso".into(), aniso3, surface.clone()),
        ("fdfi".into(), fdfi, perturbed_circle(48, 0.1, 3)),
    ];
    let plain = [
        (Scheme::Mcf, 1e-3),
        (Scheme::Elimkappa { normalized: true }, 1e-3),
        (Scheme::Elimkappa { normalized: false }, 1e-3),
        (Scheme::Dziuk { lumped: true }, 1e-3),
        (Scheme::Dziuk { lumped: false }, 1e-3),
        (Scheme::Theta { theta: 0.5 }, 1e-3),
        (Scheme::Generic { f: FChoice::Mcf }, 1e-3),
        (
            Scheme::Generic {
                f: FChoice::Power { exponent: 2.0 },
            },
            1e-3,
        ),
        (tangential_s2, 1e-3),
        (Scheme::WillmoreAde, 1e-5),
        (Scheme::DziukWillmore, 1e-5),
    ];
    for (scheme, dt) in plain {
        for m in [&curve, &surface, &torus] {
            suite.push((scheme.to_string(), FlowConfig::new(scheme, dt), m.clone()));
        }
    }
    suite.push(("dd95".into(), FlowConfig::new(Scheme::Dd95, 1e-3), curve));
    Ok(suite)
}

fn dense_difference(got: &CsrMatrix, want: &[Vec<f64>]) -> f64 {
    let scale = want
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    got.to_dense()
        .iter()
        .flatten()
        .zip(want.iter().flatten())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / scale
}

fn reference_difference() -> Result<f64, String> {
    let meshes = [
        perturbed_circle(16, 0.2, 1),
        mesh("ellipse(24,2,1)"),
        mesh("icosphere(1,1)"),
        mesh("torus(8,4,2,0.5)"),
        mesh("cube_projected_sphere(1,1)"),
    ];
    let mut worst = 0.0f64;
    for m in &meshes {
        if m.n_vertices() > 64 {
            return Err(format!("reference mesh has {} vertices", m.n_vertices()));
        }
        let w: Vec<f64> = (0..m.n_elements())
            .map(|j| 1.0 + 0.1 * (j % 7) as f64)
            .collect();
        let mut pairs = vec![
            dense_difference(&lumped_mass(m, None), &reference::reference_lumped_mass(m)),
            dense_difference(
                &consistent_mass(m),
                &reference::reference_consistent_mass(m),
            ),
            dense_difference(
                &stiffness(m, None),
                &reference::reference_stiffness(m, None),
            ),
            dense_difference(
                &stiffness(m, Some(&w)),
                &reference::reference_stiffness(m, Some(&w)),
            ),
            dense_difference(
                &normal_coupling(m),
                &reference::reference_normal_coupling(m),
            ),
        ];
        for theta in [0.0, 0.3, 1.0] {
            let q = assemble_qtheta_mass(m, theta).map_err(err)?;
            pairs.push(dense_difference(&q, &reference::reference_qtheta(m, theta)));
        }
        let anisos = if m.dim() == 2 {
            vec![
                Anisotropy::weighted(&[1.0, 0.25]).map_err(err)?,
                Anisotropy::hexagonal(2, 0.3, 0.1).map_err(err)?,
                Anisotropy::new(
                    2,
                    2.5,
                    vec![
                        Matrix3::from_diagonal(&Vector3::new(1.0, 0.25, 1.0)),
                        Matrix3::new(0.5, 0.2, 0.0, 0.2, 1.5, 0.0, 0.0, 0.0, 1.0),
                    ],
                )
                .map_err(err)?,
            ]
        } else {
            vec![
                Anisotropy::l1reg(3, 0.1).map_err(err)?,
                Anisotropy::cubic(3, 0.01, 30.0).map_err(err)?,
            ]
        };
        for a in &anisos {
            let v = m.normals().to_vec();
            let got = assemble_aniso_stiffness(m, a, &v).map_err(err)?;
            pairs.push(dense_difference(
                &got.matrix,
                &reference::reference_aniso_stiffness(m, a, &v),
            ));
        }
        worst = pairs.into_iter().fold(worst, f64::max);
    }
    Ok(worst)
}

fn linear_algebra_oracles() -> Outcome {
    let mut worst = 0.0f64;
    let suite = solver_suite()?;
    let pairs = suite.len();
    for (name, cfg, start) in suite {
        let mut schur = cfg.clone();
        schur.solver = SolveMethod::schur_cg();
        let a = trajectory(cfg, start.clone(), 3).map_err(|e| format!("{name} direct: {e}"))?;
        let b = trajectory(schur, start, 3).map_err(|e| format!("{name} Schur: {e}"))?;
        for (x, y) in a.iter().zip(&b) {
            let scale = x.mesh.points().iter().map(|p| p.norm()).fold(0.0, f64::max);
            worst = worst.max(max_point_diff(&x.mesh, &y.mesh) / scale);
        }
    }
    let mut unsupported = Vec::new();
    for scheme in [
        Scheme::Generic { f: FChoice::Sd },
        Scheme::Generic {
            f: FChoice::Conserved,
        },
        Scheme::Generic {
            f: FChoice::Salk {
                alpha: 1.0,
                xi: 1.0,
            },
        },
        Scheme::Willmore,
        Scheme::WillmoreStable,
    ] {
        let mut cfg = FlowConfig::new(scheme, 1e-5);
        cfg.solver = SolveMethod::schur_cg();
        let mut flow = Flow::new(cfg);
        let state = flow
            .initialize(perturbed_circle(32, 0.1, 14))
            .map_err(err)?;
        match flow.step(&state) {
            Err(e) if matches!(e.root(), Error::Unsupported(_)) => unsupported.push(match scheme {
                Scheme::Generic { f } => format!("generic({f})"),
                other => other.to_string(),
            }),
            Err(e) => return Err(format!("{scheme}: {e}")),
            Ok(_) => {
                return Err(format!(
                    "{scheme}: the Schur path accepted a full leading block"
                ))
            }
        }
    }
    let reference = reference_difference()?;
    Ok((
        worst <= SOLVER_AGREEMENT_REL && reference <= REFERENCE_TOL,
        format!(
            "direct vs Schur-CG {worst:.2e} over {pairs} pairs (limit {SOLVER_AGREEMENT_REL:e}), Schur path undefined for [{}]; reference assembler {reference:.2e} (limit {REFERENCE_TOL:e})",
            unsupported.join(", ")
        ),
    ))
}

fn collapse_checks() -> Outcome {
    let starts = [
        perturbed_circle(40, 0.2, 21),
        mesh("cube_projected_sphere(1,1)"),
    ];
    let mut results: Vec<(&str, f64)> = Vec::new();
    let mut record =
        |name: &'static str, diff: f64| match results.iter_mut().find(|(n, _)| *n == name) {
            Some(entry) => entry.1 = entry.1.max(diff),
            None => results.push((name, diff)),
        };
    for start in &starts {
        let d = start.dim();
        let c = |s: Scheme, dt: f64| FlowConfig::new(s, dt);
        record(
            "θ=1/lumped Dziuk",
            trajectory_difference(
                c(Scheme::Theta { theta: 1.0 }, 1e-3),
                c(Scheme::Dziuk { lumped: true }, 1e-3),
                start,
                5,
            )
            .map_err(err)?,
        );
        record(
            "θ=0/normalized elimination",
            trajectory_difference(
                c(Scheme::Theta { theta: 0.0 }, 1e-3),
                c(Scheme::Elimkappa { normalized: true }, 1e-3),
                start,
                5,
            )
            .map_err(err)?,
        );
        let mut second = c(
            Scheme::Aniso {
                order: AnisoOrder::Second,
            },
            1e-3,
        );
        second.aniso = Some(Anisotropy::iso(d));
        record(
            "isotropic second order/MCF",
            trajectory_difference(second, c(Scheme::Mcf, 1e-3), start, 5).map_err(err)?,
        );
        let mut fourth = c(
            Scheme::Aniso {
                order: AnisoOrder::Fourth,
            },
            1e-4,
        );
        fourth.aniso = Some(Anisotropy::iso(d));
        record(
            "isotropic fourth order/SD",
            trajectory_difference(
                fourth,
                c(Scheme::Generic { f: FChoice::Sd }, 1e-4),
                start,
                5,
            )
            .map_err(err)?,
        );
        for (f, dt) in [
            (FChoice::Mcf, 1e-3),
            (FChoice::Sd, 1e-5),
            (FChoice::Conserved, 1e-3),
            (
                FChoice::Salk {
                    alpha: 2.0,
                    xi: 3.0,
                },
                1e-4,
            ),
        ] {
            record(
                "α=0 tangential/generic",
                trajectory_difference(
                    c(tangential(f, 0.0), dt),
                    c(Scheme::Generic { f }, dt),
                    start,
                    5,
                )
                .map_err(err)?,
            );
        }
    }
    record(
        "ADE κ̄=β=0/Dziuk Willmore",
        trajectory_difference(
            FlowConfig::new(Scheme::WillmoreAde, 1e-5),
            FlowConfig::new(Scheme::DziukWillmore, 1e-5),
            &mesh("ellipse(64,2,1)"),
            5,
        )
        .map_err(err)?,
    );
    let pass = results.iter().all(|(_, d)| *d <= COLLAPSE_TOL);
    let text = results
        .iter()
        .map(|(n, d)| format!("{n} {d:.1e}"))
        .collect::<Vec<_>>()
        .join(", ");
    Ok((pass, format!("{text} (limit {COLLAPSE_TOL:e})")))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("MCF stability", mcf_stability),
        ("shrinking circle", shrinking_circle),
        ("shrinking sphere", shrinking_sphere),
        ("surface diffusion volume conservation", sd_conservation),
        ("surface diffusion stationarity", sd_stationarity),
        ("full equidistribution", full_equidistribution),
        ("spiral mesh quality", spiral_contrast),
        ("anisotropic stability", aniso_stability),
        ("Wulff attraction", wulff_attraction),
        ("Willmore circle", willmore_circle),
        ("Helfrich constraints", helfrich),
        ("linear algebra oracles", linear_algebra_oracles),
        ("collapse identities", collapse_checks),
    ];
    let filter = std::env::var("ACCEPTANCE_ONLY").ok();
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let number = i + 1;
        if let Some(only) = &filter {
            if !only.split(',').any(|s| s.trim() == number.to_string()) {
                continue;
            }
        }
        let start = Instant::now();
        let (pass, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "{} {number:>2} {name}: {detail} [{:.1} s]",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
