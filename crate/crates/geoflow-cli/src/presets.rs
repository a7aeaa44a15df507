//! Bundled configurations, selected with `--preset NAME`.

/// Preset names with their configuration text.
pub const PRESETS: &[(&str, &str)] = &[
    (
        "shrinking-circle",
        "\
# Regular 128-gon shrinking under mean curvature flow until t = 0.25.
[mesh]
spec = circle(128,1,0)

[flow]
scheme = mcf
dt = 1e-4
final_time = 0.25

[output]
every = 500
",
    ),
    (
        "spiral",
        "\
# Closed spiral band under the coupled mean curvature scheme.
[mesh]
spec = closed_spiral(1024,3)

[flow]
scheme = mcf
dt = 1e-7
final_time = 0.024

[output]
every = 10000
",
    ),
    (
        "spiral-dziuk",
        "\
# The spiral input under Dziuk's scheme, for comparison of mesh quality.
[mesh]
spec = closed_spiral(1024,3)

[flow]
scheme = dziuk
dt = 1e-7
final_time = 0.024

[output]
every = 10000
",
    ),
    (
        "circle_mcf",
        "\
# Convergence of a shrinking circle under mean curvature flow.
[eoc]
selector = circle_mcf
levels = 32,64,128,256
final_time = 0.25
dt = 1.6e-3
",
    ),
    (
        "sphere_mcf",
        "\
# Convergence of a shrinking sphere under mean curvature flow.
[eoc]
selector = sphere_mcf
levels = 1,2,3,4
final_time = 0.1
dt = 1.6e-2

[solver]
method = schur_cg
tol = 1e-12
",
    ),
    (
        "circle_willmore",
        "\
# Convergence of an expanding circle under Willmore flow.
[eoc]
selector = circle_willmore
levels = 16,32,64
final_time = 0.1
dt = 1e-3
dt_exponent = 4
",
    ),
];

/// The configuration text of a preset.
pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// All preset names.
pub fn names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}
