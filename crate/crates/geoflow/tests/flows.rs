//! Behaviour of the time-stepping schemes: exact-solution oracles, stability,
//! conservation, collapse between schemes, solver-path agreement and errors.

mod common;

use common::{max_point_diff, max_radius_error, mesh, random_curve, run};
use geoflow::aniso::Anisotropy;
use geoflow::diagnostics::{AdeParams, StabilityKind};
use geoflow::flows::{
    tangent_frames, AnisoOrder, FChoice, Flow, FlowConfig, Scheme, Strategy, TangentialParams,
};
use geoflow::linalg::SolveMethod;
use geoflow::{Error, Mesh};
use nalgebra::Vector3;

fn config(scheme: Scheme, dt: f64) -> FlowConfig {
    FlowConfig::new(scheme, dt)
}

fn tangential(f: FChoice, strategy: Strategy, alpha: f64, delta: f64) -> Scheme {
    Scheme::Tangential {
        f,
        params: TangentialParams {
            strategy,
            alpha,
            delta,
        },
    }
}

/// Runs two configurations side by side and returns the largest per-step
/// vertex difference.
fn trajectory_difference(a: FlowConfig, b: FlowConfig, start: &Mesh, steps: usize) -> f64 {
    let ra = run(a, start.clone(), steps);
    let rb = run(b, start.clone(), steps);
    ra.states
        .iter()
        .zip(&rb.states)
        .map(|(x, y)| max_point_diff(&x.mesh, &y.mesh))
        .fold(0.0, f64::max)
}

fn assert_stability_holds(name: &str, cfg: FlowConfig, start: Mesh, steps: usize) {
    let r = run(cfg, start, steps);
    for (i, s) in r.stabilities().enumerate() {
        assert!(
            s.kind.asserted(),
            "{name}: stability kind {:?} is not asserted",
            s.kind
        );
        assert!(
            s.holds(),
            "{name}: step {} slack {:e} exceeds tolerance (|Γ| = {})",
            i + 1,
            s.slack(),
            s.before
        );
    }
}

#[test]
fn mcf_circle_tracks_shrinking_radius() {
    let dt = 1e-4;
    let r = run(config(Scheme::Mcf, dt), mesh("circle(128,1,0)"), 1000);
    let mut worst = 0.0f64;
    for s in &r.states {
        worst = worst.max(max_radius_error(&s.mesh, (1.0 - 2.0 * s.time).sqrt()));
    }
    assert!(worst < 1e-3, "max radius error {worst:e}");
}

#[test]
fn dd95_circle_matches_mcf_oracle() {
    let dt = 1e-4;
    let r = run(config(Scheme::Dd95, dt), mesh("circle(128,1,0)"), 1000);
    let s = r.last();
    let err = max_radius_error(&s.mesh, (1.0 - 2.0 * s.time).sqrt());
    assert!(err < 1e-3, "radius error {err:e}");
}

#[test]
fn mcf_improves_edge_ratio_of_perturbed_circle() {
    let r = run(config(Scheme::Mcf, 1e-5), mesh("circle(64,1,0.1)"), 100);
    let mut prev = r.initial.mesh.mesh_quality().ratio;
    for (i, s) in r.states.iter().enumerate() {
        let q = s.mesh.mesh_quality().ratio;
        assert!(q <= prev + 1e-12, "step {}: ratio {q} after {prev}", i + 1);
        prev = q;
    }
    assert!(prev < r.initial.mesh.mesh_quality().ratio);
}

#[test]
fn stability_bounds_hold_on_random_curves() {
    let schemes: Vec<(&str, FlowConfig)> = vec![
        ("mcf", config(Scheme::Mcf, 1e-3)),
        ("sd", config(Scheme::Generic { f: FChoice::Sd }, 1e-5)),
        (
            "conserved",
            config(
                Scheme::Generic {
                    f: FChoice::Conserved,
                },
                1e-3,
            ),
        ),
        (
            "power",
            config(
                Scheme::Generic {
                    f: FChoice::Power { exponent: 2.0 },
                },
                1e-3,
            ),
        ),
        (
            "salk",
            config(
                Scheme::Generic {
                    f: FChoice::Salk {
                        alpha: 2.0,
                        xi: 3.0,
                    },
                },
                1e-4,
            ),
        ),
        (
            "tangential",
            config(tangential(FChoice::Mcf, Strategy::S1, 0.5, 1.0), 1e-3),
        ),
        (
            "elimkappa",
            config(Scheme::Elimkappa { normalized: false }, 1e-3),
        ),
        ("dziuk", config(Scheme::Dziuk { lumped: false }, 1e-3)),
        ("theta", config(Scheme::Theta { theta: 0.4 }, 1e-3)),
        ("fdfi", config(Scheme::Fdfi, 1e-2)),
    ];
    for seed in 0..5 {
        for (name, cfg) in &schemes {
            assert_stability_holds(
                &format!("{name} on curve {seed}"),
                cfg.clone(),
                random_curve(64, seed),
                10,
            );
        }
    }
}

#[test]
fn stability_bounds_hold_on_surfaces() {
    let start = common::jitter_surface(&mesh("icosphere(2,1)"), 0.05, 1);
    assert_stability_holds("mcf", config(Scheme::Mcf, 1e-3), start.clone(), 5);
    assert_stability_holds(
        "sd",
        config(Scheme::Generic { f: FChoice::Sd }, 1e-4),
        start.clone(),
        5,
    );
    let mut cfg = config(
        Scheme::Aniso {
            order: AnisoOrder::Second,
        },
        1e-3,
    );
    cfg.aniso = Some(Anisotropy::l1reg(3, 0.1).unwrap());
    assert_stability_holds("aniso", cfg, start, 5);
}

#[test]
fn anisotropic_energy_decreases_for_weighted_norm_and_lagged_iteration() {
    let mut cfg = config(
        Scheme::Aniso {
            order: AnisoOrder::Second,
        },
        1e-3,
    );
    cfg.aniso = Some(Anisotropy::weighted(&[1.0, 0.25]).unwrap());
    assert_stability_holds("weighted", cfg, mesh("ellipse(64,2,1)"), 20);

    let mut cfg = config(
        Scheme::Aniso {
            order: AnisoOrder::Second,
        },
        1e-3,
    );
    cfg.aniso = Some(Anisotropy::cubic(2, 0.1, 4.0).unwrap());
    let r = run(cfg, mesh("ellipse(64,2,1)"), 10);
    for rep in &r.reports {
        assert!(rep.stability.holds(), "slack {:e}", rep.stability.slack());
        assert!(rep.nonlinear_iterations > 1 && rep.nonlinear_iterations < 100);
    }
}

#[test]
fn surface_diffusion_fixes_circles_and_spheres() {
    for (name, m) in [
        ("circle", mesh("circle(64,1,0)")),
        ("sphere", mesh("icosphere(0,1)")),
    ] {
        let diam = m.diameter();
        let r = run(config(Scheme::Generic { f: FChoice::Sd }, 1e-3), m, 3);
        for rep in &r.reports {
            assert!(
                rep.max_displacement < 1e-9 * diam,
                "{name}: displacement {:e}",
                rep.max_displacement
            );
        }
    }
}

#[test]
fn volume_preserving_steps_have_no_mean_normal_motion() {
    for f in [FChoice::Sd, FChoice::Conserved] {
        for start in [
            random_curve(48, 4),
            common::jitter_surface(&mesh("icosphere(1,1)"), 0.1, 2),
        ] {
            let dt = if f == FChoice::Sd { 1e-4 } else { 1e-3 };
            let r = run(config(Scheme::Generic { f }, dt), start.clone(), 1);
            let old = &r.initial.mesh;
            let new = &r.states[0].mesh;
            let d = old.dim() as f64;
            let mut s = 0.0;
            for j in 0..old.n_elements() {
                for &k in old.element(j) {
                    s += old.measure(j) / d
                        * (new.points()[k] - old.points()[k]).dot(&old.normal(j));
                }
            }
            assert!(s.abs() < 1e-10, "{f}: mean normal displacement {s:e}");
        }
    }
}

#[test]
fn conserved_mcf_keeps_volume_and_rounds_the_ellipse() {
    let start = mesh("ellipse(128,2,1)");
    let v0 = start.enclosed_volume();
    let a0 = start.area();
    let radius = (v0 / std::f64::consts::PI).sqrt();
    let spread = |m: &Mesh| {
        let centre: Vector3<f64> = m.points().iter().sum::<Vector3<f64>>() / m.n_vertices() as f64;
        m.points()
            .iter()
            .map(|p| ((p - centre).norm() - radius).abs())
            .fold(0.0, f64::max)
    };
    let initial_spread = spread(&start);
    let r = run(
        config(
            Scheme::Generic {
                f: FChoice::Conserved,
            },
            1e-3,
        ),
        start,
        500,
    );
    let mut prev_area = a0;
    for s in &r.states {
        let drift = (s.mesh.enclosed_volume() - v0).abs() / v0;
        assert!(drift < 1e-3, "volume drift {drift:e} at t = {}", s.time);
        assert!(s.mesh.area() <= prev_area + 1e-12);
        prev_area = s.mesh.area();
    }
    let final_spread = spread(&r.last().mesh);
    assert!(
        final_spread < 0.5 * initial_spread,
        "distance from the circle of equal area {final_spread} after {initial_spread}"
    );
}

#[test]
fn collapse_theta_one_is_lumped_dziuk() {
    for start in [
        mesh("circle(32,1,0)"),
        random_curve(40, 7),
        mesh("icosphere(1,1)"),
    ] {
        let diff = trajectory_difference(
            config(Scheme::Theta { theta: 1.0 }, 1e-3),
            config(Scheme::Dziuk { lumped: true }, 1e-3),
            &start,
            5,
        );
        assert!(diff <= 1e-12, "difference {diff:e}");
    }
}

#[test]
fn collapse_theta_zero_is_normalized_elimkappa() {
    for start in [
        mesh("circle(32,1,0)"),
        random_curve(40, 8),
        mesh("icosphere(1,1)"),
    ] {
        let diff = trajectory_difference(
            config(Scheme::Theta { theta: 0.0 }, 1e-3),
            config(Scheme::Elimkappa { normalized: true }, 1e-3),
            &start,
            5,
        );
        assert!(diff <= 1e-12, "difference {diff:e}");
    }
}

#[test]
fn collapse_elimkappa_is_coupled_mcf() {
    for start in [
        random_curve(40, 9),
        common::jitter_surface(&mesh("icosphere(1,1)"), 0.1, 3),
    ] {
        let diff = trajectory_difference(
            config(Scheme::Elimkappa { normalized: false }, 1e-3),
            config(Scheme::Mcf, 1e-3),
            &start,
            5,
        );
        assert!(diff <= 1e-12, "difference {diff:e}");
    }
}

#[test]
fn collapse_isotropic_anisotropy() {
    for start in [
        random_curve(40, 10),
        common::jitter_surface(&mesh("icosphere(1,1)"), 0.1, 4),
    ] {
        let d = start.dim();
        let mut second = config(
            Scheme::Aniso {
                order: AnisoOrder::Second,
            },
            1e-3,
        );
        second.aniso = Some(Anisotropy::iso(d));
        let diff = trajectory_difference(second, config(Scheme::Mcf, 1e-3), &start, 5);
        assert!(diff <= 1e-12, "second order difference {diff:e}");
        let mut fourth = config(
            Scheme::Aniso {
                order: AnisoOrder::Fourth,
            },
            1e-4,
        );
        fourth.aniso = Some(Anisotropy::iso(d));
        let diff = trajectory_difference(
            fourth,
            config(Scheme::Generic { f: FChoice::Sd }, 1e-4),
            &start,
            5,
        );
        assert!(diff <= 1e-12, "fourth order difference {diff:e}");
    }
}

#[test]
fn collapse_power_one_is_mcf() {
    let start = random_curve(40, 11);
    let diff = trajectory_difference(
        config(
            Scheme::Generic {
                f: FChoice::Power { exponent: 1.0 },
            },
            1e-3,
        ),
        config(Scheme::Mcf, 1e-3),
        &start,
        5,
    );
    assert!(diff <= 1e-12, "difference {diff:e}");
}

#[test]
fn collapse_tangential_alpha_zero_is_generic() {
    let fs = [
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
    ];
    for start in [
        random_curve(40, 12),
        common::jitter_surface(&mesh("icosphere(1,1)"), 0.1, 5),
    ] {
        for (f, dt) in fs {
            let diff = trajectory_difference(
                config(tangential(f, Strategy::S1, 0.0, 1.0), dt),
                config(Scheme::Generic { f }, dt),
                &start,
                5,
            );
            assert!(diff <= 1e-12, "{f}: difference {diff:e}");
        }
    }
}

#[test]
fn collapse_ade_without_spontaneous_terms_is_dziuk_willmore() {
    let start = mesh("ellipse(64,2,1)");
    let dt = 1e-5;
    let ra = run(config(Scheme::WillmoreAde, dt), start.clone(), 5);
    let rb = run(config(Scheme::DziukWillmore, dt), start, 5);
    for (a, b) in ra.states.iter().zip(&rb.states) {
        assert!(max_point_diff(&a.mesh, &b.mesh) <= 1e-12);
        let ka = a.kappa_vec.as_ref().unwrap();
        let kb = b.kappa_vec.as_ref().unwrap();
        let dk = ka
            .iter()
            .zip(kb)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(
            dk <= 1e-12 * (1.0 + kb.iter().map(|v| v.norm()).fold(0.0, f64::max)),
            "curvature difference {dk:e}"
        );
    }
}

#[test]
fn strong_tangential_penalty_reduces_tangential_motion() {
    let start = mesh("circle(64,1,0.1)");
    let dt = 1e-3;
    let free = run(
        config(tangential(FChoice::Mcf, Strategy::S1, 0.0, 1.0), dt),
        start.clone(),
        1,
    );
    let damped = run(
        config(tangential(FChoice::Mcf, Strategy::S1, 1e3, 1.0), dt),
        start,
        1,
    );
    let a = free.reports[0].tangential_displacement.unwrap();
    let b = damped.reports[0].tangential_displacement.unwrap();
    assert!(b < a, "α = 10³ gives {b:e}, α = 0 gives {a:e}");
}

#[test]
fn strategy_three_hits_neighbour_averages() {
    for start in [
        mesh("circle(64,1,0.1)"),
        common::jitter_surface(&mesh("icosphere(1,1)"), 0.1, 6),
    ] {
        let r = run(
            config(tangential(FChoice::Mcf, Strategy::S3, 0.0, 0.0), 1e-3),
            start,
            3,
        );
        let mut prev = r.initial.clone();
        for s in &r.states {
            let frames = tangent_frames(&prev.mesh).unwrap();
            let p = prev.mesh.points();
            for k in 0..p.len() {
                let mut nb: Vec<usize> = prev
                    .mesh
                    .vertex_elements(k)
                    .iter()
                    .flat_map(|&(j, _)| prev.mesh.element(j).to_vec())
                    .filter(|&v| v != k)
                    .collect();
                nb.sort_unstable();
                nb.dedup();
                let z: Vector3<f64> =
                    nb.iter().map(|&v| p[v]).sum::<Vector3<f64>>() / nb.len() as f64;
                let diff = s.mesh.points()[k] - z;
                for t in frames[k].iter().take(prev.mesh.dim() - 1) {
                    assert!(
                        diff.dot(t).abs() < 1e-10,
                        "vertex {k}: tangential offset {:e}",
                        diff.dot(t)
                    );
                }
            }
            prev = s.clone();
        }
    }
}

#[test]
fn fdfi_keeps_an_equidistributed_circle_on_the_mcf_trajectory() {
    let dt = 1e-4;
    let r = run(config(Scheme::Fdfi, dt), mesh("circle(128,1,0)"), 200);
    for rep in &r.reports {
        assert!(
            rep.converged && rep.nonlinear_iterations <= 3,
            "{} iterations",
            rep.nonlinear_iterations
        );
    }
    let s = r.last();
    assert!(max_radius_error(&s.mesh, (1.0 - 2.0 * s.time).sqrt()) < 1e-3);
}

#[test]
fn fdfi_equidistributes_a_perturbed_circle_in_one_step() {
    let mut cfg = config(Scheme::Fdfi, 1e-2);
    cfg.nonlinear.maxit = 200;
    let r = run(cfg, mesh("circle(64,1,0.2)"), 3);
    for rep in &r.reports {
        assert!(rep.converged);
        assert!(
            rep.equidistribution.unwrap() < 1e-7,
            "ratio − 1 = {:e}",
            rep.equidistribution.unwrap()
        );
        assert!(rep.stability.holds());
        assert_eq!(rep.stability.kind, StabilityKind::Equidistributing);
    }
}

#[test]
fn willmore_schemes_expand_circles() {
    let dt = 1e-5;
    for scheme in [
        Scheme::Willmore,
        Scheme::WillmoreStable,
        Scheme::DziukWillmore,
    ] {
        let r = run(config(scheme, dt), mesh("circle(64,1,0)"), 500);
        let s = r.last();
        let err = max_radius_error(&s.mesh, (1.0 + 2.0 * s.time).powf(0.25));
        assert!(err < 5e-3, "{scheme}: radius error {err:e}");
    }
}

#[test]
fn stable_willmore_keeps_curvature_constant_on_regular_polygons() {
    let r = run(
        config(Scheme::WillmoreStable, 1e-5),
        mesh("circle(32,1,0)"),
        50,
    );
    for s in &r.states {
        let k = s.kappa.as_ref().unwrap();
        let (lo, hi) = k
            .iter()
            .fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
        assert!(hi - lo < 1e-8, "curvature spread {:e}", hi - lo);
    }
}

#[test]
fn matching_spontaneous_curvature_makes_the_circle_stationary() {
    let start = mesh("circle(64,1,0)");
    let mut flow = Flow::new(config(Scheme::Willmore, 1e-4));
    let kappa0 = flow.initialize(start.clone()).unwrap().kappa.unwrap()[0];
    let mut cfg = config(Scheme::Willmore, 1e-4);
    cfg.willmore.ade = AdeParams {
        kappa_bar: kappa0,
        beta: 0.0,
        m0: 0.0,
    };
    let r = run(cfg, start, 10);
    for rep in &r.reports {
        assert!(
            rep.max_displacement < 1e-10,
            "displacement {:e}",
            rep.max_displacement
        );
    }
}

#[test]
fn spontaneous_curvature_equilibrium_radius_matches_root_find() {
    // For a circle of radius ρ the energy ½∫(κ − κ̄)² with κ = 1/ρ is
    // π ρ (1/ρ − κ̄)²; its derivative vanishes where the radial velocity does.
    let kappa_bar = 2.0;
    let de = |rho: f64| -std::f64::consts::PI * (1.0 / rho - kappa_bar) * (1.0 / rho + kappa_bar);
    let (mut lo, mut hi) = (0.2, 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if de(lo) * de(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let oracle = 0.5 * (lo + hi);
    let mut cfg = config(Scheme::WillmoreAde, 1e-3);
    cfg.willmore.ade.kappa_bar = kappa_bar;
    let r = run(cfg, mesh("circle(64,1,0)"), 1500);
    let radii = common::radii(&r.last().mesh);
    let mean = radii.iter().sum::<f64>() / radii.len() as f64;
    assert!(
        (mean - oracle).abs() < 1e-3,
        "radius {mean}, oracle {oracle}"
    );
}

#[test]
fn helfrich_flow_keeps_area_and_volume() {
    let start = mesh("ellipse(128,2,1)");
    let (a0, v0) = (start.area(), start.enclosed_volume());
    let mut cfg = config(Scheme::Willmore, 1e-5);
    cfg.willmore.area = true;
    cfg.willmore.volume = true;
    let r = run(cfg, start, 200);
    let e0 = r
        .initial
        .kappa
        .as_ref()
        .map(|k| r.initial.mesh.lumped_norm(k).unwrap().powi(2))
        .unwrap();
    let last = r.last();
    assert!((last.mesh.area() - a0).abs() / a0 < 5e-3);
    assert!((last.mesh.enclosed_volume() - v0).abs() / v0 < 5e-3);
    let e1 = last
        .mesh
        .lumped_norm(last.kappa.as_ref().unwrap())
        .unwrap()
        .powi(2);
    assert!(e1 < e0, "Willmore energy {e1} after {e0}");
    assert!(r.reports.iter().all(|rep| rep.multipliers.is_some()));
}

#[test]
fn helfrich_flow_rejects_constant_curvature() {
    let mut cfg = config(Scheme::Willmore, 1e-5);
    cfg.willmore.area = true;
    cfg.willmore.volume = true;
    let mut flow = Flow::new(cfg);
    let state = flow.initialize(mesh("circle(32,1,0)")).unwrap();
    let err = flow.step(&state).unwrap_err();
    assert!(matches!(err.root(), Error::SingularMultiplier(_)), "{err}");
}

/// Schemes whose leading block is diagonal, so that the Schur path applies.
fn schur_capable() -> Vec<(&'static str, FlowConfig, Mesh)> {
    let curve = random_curve(48, 13);
    let surface = common::jitter_surface(&mesh("icosphere(1,1)"), 0.1, 7);
    let mut aniso = config(
        Scheme::Aniso {
            order: AnisoOrder::Second,
        },
        1e-3,
    );
    aniso.aniso = Some(Anisotropy::weighted(&[1.0, 0.25]).unwrap());
    let mut aniso3 = config(
        Scheme::Aniso {
            order: AnisoOrder::Second,
        },
        1e-3,
    );
    aniso3.aniso = Some(Anisotropy::cubic(3, 0.1, 3.0).unwrap());
    vec![
        ("mcf curve", config(Scheme::Mcf, 1e-3), curve.clone()),
        ("mcf surface", config(Scheme::Mcf, 1e-3), surface.clone()),
        (
            "power",
            config(
                Scheme::Generic {
                    f: FChoice::Power { exponent: 2.0 },
                },
                1e-3,
            ),
            curve.clone(),
        ),
        ("aniso curve", aniso, curve.clone()),
        ("aniso surface", aniso3, surface.clone()),
        ("fdfi", config(Scheme::Fdfi, 1e-2), mesh("circle(48,1,0.1)")),
        (
            "tangential S2",
            config(tangential(FChoice::Mcf, Strategy::S2, 1.0, 0.5), 1e-3),
            curve.clone(),
        ),
        (
            "elimkappa",
            config(Scheme::Elimkappa { normalized: true }, 1e-3),
            surface.clone(),
        ),
        (
            "dziuk",
            config(Scheme::Dziuk { lumped: false }, 1e-3),
            curve.clone(),
        ),
        ("theta", config(Scheme::Theta { theta: 0.5 }, 1e-3), surface),
        ("dd95", config(Scheme::Dd95, 1e-3), curve.clone()),
        ("ade", config(Scheme::WillmoreAde, 1e-5), curve.clone()),
        ("dziuk willmore", config(Scheme::DziukWillmore, 1e-5), curve),
    ]
}

#[test]
fn direct_and_schur_paths_agree() {
    for (name, cfg, start) in schur_capable() {
        let mut schur = cfg.clone();
        schur.solver = SolveMethod::schur_cg();
        let a = run(cfg, start.clone(), 3);
        let b = run(schur, start, 3);
        for (x, y) in a.states.iter().zip(&b.states) {
            let scale = x.mesh.points().iter().map(|p| p.norm()).fold(0.0, f64::max);
            let diff = max_point_diff(&x.mesh, &y.mesh);
            assert!(
                diff <= 1e-8 * scale,
                "{name}: relative difference {:e}",
                diff / scale
            );
        }
    }
}

#[test]
fn schur_path_reports_unsupported_for_full_leading_blocks() {
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
        let mut cfg = config(scheme, 1e-5);
        cfg.solver = SolveMethod::schur_cg();
        let mut flow = Flow::new(cfg);
        let state = flow.initialize(random_curve(32, 14)).unwrap();
        let err = flow.step(&state).unwrap_err();
        assert!(
            matches!(err.root(), Error::Unsupported(_)),
            "{scheme}: {err}"
        );
    }
}

#[test]
fn runs_are_bit_for_bit_deterministic() {
    for (name, cfg, start) in schur_capable().into_iter().take(6) {
        let a = run(cfg.clone(), start.clone(), 3);
        let b = run(cfg, start, 3);
        for (x, y) in a.states.iter().zip(&b.states) {
            for (p, q) in x.mesh.points().iter().zip(y.mesh.points()) {
                assert!(
                    p.iter()
                        .zip(q.iter())
                        .all(|(u, v)| u.to_bits() == v.to_bits()),
                    "{name}"
                );
            }
        }
    }
}

#[test]
fn failing_vertex_normals_are_reported() {
    // A folded curve whose vertex normals vanish at the turning points.
    let folded = Mesh::curve(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [1.0, 1e-9]]);
    if let Ok(m) = folded {
        let mut flow = Flow::new(config(Scheme::Mcf, 1e-3));
        let state = flow.initialize(m).unwrap();
        assert!(flow.step(&state).is_err());
    }
    let flat = Mesh::curve(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [1.0, 0.0]]);
    assert!(
        flat.is_err() || {
            let mut flow = Flow::new(config(Scheme::Mcf, 1e-3));
            let state = flow.initialize(flat.unwrap()).unwrap();
            flow.step(&state).is_err()
        }
    );
}

#[test]
fn curve_schemes_reject_surfaces() {
    for scheme in [Scheme::Fdfi, Scheme::Dd95] {
        let mut flow = Flow::new(config(scheme, 1e-3));
        assert!(flow.initialize(mesh("icosphere(0,1)")).is_err());
    }
}

#[test]
fn step_errors_carry_the_step_index() {
    let mut flow = Flow::new(config(Scheme::Mcf, 1e-3));
    let mut state = flow.initialize(mesh("circle(8,1,0)")).unwrap();
    state.step = 41;
    let bad = Mesh::curve(vec![[0.0, 0.0], [1.0, 0.0], [0.5, 1e-300]]);
    if let Ok(m) = bad {
        state.mesh = m;
        match flow.step(&state) {
            Err(Error::StepAborted { step, .. }) => assert_eq!(step, 42),
            other => panic!("expected an aborted step, got {other:?}"),
        }
    }
}
