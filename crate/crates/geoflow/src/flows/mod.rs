//! Fully discrete time-stepping schemes.
//!
//! A [`Flow`] owns a configuration and a solver; [`Flow::initialize`] turns a
//! mesh into a [`FlowState`] carrying the lagged fields the chosen scheme
//! needs, and [`Flow::step`] advances the state by one uniform time step,
//! returning a [`StepReport`] with the stability terms of that step.

mod generic;
mod mcf;
mod willmore;

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;

use crate::aniso::Anisotropy;
use crate::assembly::{flatten, unflatten, vertex_column_blocks};
use crate::curvature::WeingartenVariant;
use crate::diagnostics::{self, AdeParams, DiagnosticsRecord, Stability};
use crate::error::{Error, Result};
use crate::linalg::{
    cg_solve, jacobi, CsrMatrix, SaddleSolution, SaddleSystem, SolveMethod, Solver,
};
use crate::mesh::{Mesh, ZERO_NORMAL_TOL};

pub use generic::tangent_frames;

/// Choice of `F` in the generalized scheme `⟨(X^{m+1} − id)/Δt, χ ν⟩^h = ⟨F(κ), χ⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FChoice {
    /// `F(κ) = κ` with the lumped pairing: mean curvature flow.
    Mcf,
    /// `F(κ) = −Δ_s κ`: surface diffusion.
    Sd,
    /// `F(κ) = κ − ⨍κ`: volume-conserving mean curvature flow.
    Conserved,
    /// `F(κ) = |κ|^{exponent − 1} κ`, solved by lagged Picard iteration.
    Power { exponent: f64 },
    /// `F(κ) = −Δ_s Y` with `−Δ_s Y / ξ + Y / α = κ`.
    Salk { alpha: f64, xi: f64 },
}

impl FChoice {
    /// Whether `F` is linear, so that one linear solve completes a step.
    pub fn is_linear(&self) -> bool {
        !matches!(self, FChoice::Power { .. })
    }
}

impl fmt::Display for FChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FChoice::Mcf => f.write_str("mcf"),
            FChoice::Sd => f.write_str("sd"),
            FChoice::Conserved => f.write_str("conserved"),
            FChoice::Power { exponent } => write!(f, "power({exponent})"),
            FChoice::Salk { alpha, xi } => write!(f, "salk({alpha},{xi})"),
        }
    }
}

fn parse_call(s: &str) -> Option<(&str, Vec<f64>)> {
    let s = s.trim();
    match s.find('(') {
        None => Some((s, Vec::new())),
        Some(open) => {
            let inner = s[open + 1..].strip_suffix(')')?;
            let args: Option<Vec<f64>> = inner.split(',').map(|a| a.trim().parse().ok()).collect();
            Some((s[..open].trim(), args?))
        }
    }
}

impl FromStr for FChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidParameter(format!(
                "unknown F choice '{s}' (expected mcf, sd, conserved, power(b) or salk(alpha,xi))"
            ))
        };
        let (name, args) = parse_call(s).ok_or_else(bad)?;
        Ok(match (name, args.as_slice()) {
            ("mcf", []) => FChoice::Mcf,
            ("sd", []) => FChoice::Sd,
            ("conserved", []) => FChoice::Conserved,
            ("power", [b]) => FChoice::Power { exponent: *b },
            ("salk", [a, x]) => FChoice::Salk { alpha: *a, xi: *x },
            _ => return Err(bad()),
        })
    }
}

/// Tangential-control strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Penalize tangential motion: `c = 0`.
    S1,
    /// Relax towards the neighbour average with `δ > 0`.
    S2,
    /// Move tangentially onto the neighbour average exactly (`α = 1`, `δ = 0`).
    S3,
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "s1" => Ok(Strategy::S1),
            "s2" => Ok(Strategy::S2),
            "s3" => Ok(Strategy::S3),
            _ => Err(Error::InvalidParameter(format!(
                "unknown tangential strategy '{s}' (expected S1, S2 or S3)"
            ))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::S1 => "S1",
            Strategy::S2 => "S2",
            Strategy::S3 => "S3",
        })
    }
}

/// Parameters of the tangential-control scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentialParams {
    pub strategy: Strategy,
    /// Penalty weight `α ≥ 0`; forced to 1 by [`Strategy::S3`].
    pub alpha: f64,
    /// Relaxation `δ ≥ 0`; forced to 1 by [`Strategy::S1`] and to 0 by [`Strategy::S3`].
    pub delta: f64,
}

impl TangentialParams {
    /// The `(α, δ)` actually used by the strategy.
    pub fn effective(&self) -> (f64, f64) {
        match self.strategy {
            Strategy::S1 => (self.alpha, 1.0),
            Strategy::S2 => (self.alpha, self.delta),
            Strategy::S3 => (1.0, 0.0),
        }
    }

    /// Whether the target term `c` is nonzero.
    pub fn has_target(&self) -> bool {
        self.strategy != Strategy::S1
    }
}

/// Order of the anisotropic flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnisoOrder {
    /// Anisotropic mean curvature flow `β V = κ_γ`.
    Second,
    /// Anisotropic surface diffusion `V = −Δ_s (β κ_γ)` with the mobility in the stiffness.
    Fourth,
}

/// A time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    /// Coupled mean curvature flow with the lumped normal coupling.
    Mcf,
    /// Mean curvature flow with `κ` eliminated, optionally with normalized vertex normals.
    Elimkappa { normalized: bool },
    /// Dziuk's scheme `⟨δX/Δt, η⟩ + ⟨∇_s X^{m+1}, ∇_s η⟩ = 0`, consistent or lumped mass.
    Dziuk { lumped: bool },
    /// θ-weighted velocity mass interpolating between lumped Dziuk (θ = 1) and
    /// the normalized eliminated scheme (θ = 0).
    Theta { theta: f64 },
    /// Curves only: parametric scheme with the squared parametrization speed as weight.
    Dd95,
    /// Curves only: intrinsically equidistributing scheme, solved by Picard iteration.
    Fdfi,
    /// Generalized scheme for the chosen `F`.
    Generic { f: FChoice },
    /// Generalized scheme with tangential control.
    Tangential {
        f: FChoice,
        params: TangentialParams,
    },
    /// Anisotropic flow with the configured density and mobility.
    Aniso { order: AnisoOrder },
    /// Willmore / Helfrich flow with lagged curvature and optional area and volume constraints.
    Willmore,
    /// Three-field Willmore scheme in `(Y, κ, δX)`.
    WillmoreStable,
    /// Spontaneous-curvature and area-difference flow in `(Y, δX)`.
    WillmoreAde,
    /// Dziuk's Willmore scheme in `(κ⃗, δX)`.
    DziukWillmore,
}

impl Scheme {
    /// Whether the scheme is only defined for curves.
    pub fn curves_only(&self) -> bool {
        matches!(self, Scheme::Dd95 | Scheme::Fdfi)
    }

    fn name(&self) -> &'static str {
        match self {
            Scheme::Mcf => "mcf",
            Scheme::Elimkappa { .. } => "elimkappa",
            Scheme::Dziuk { .. } => "dziuk",
            Scheme::Theta { .. } => "theta",
            Scheme::Dd95 => "dd95",
            Scheme::Fdfi => "fdfi",
            Scheme::Generic { .. } => "generic",
            Scheme::Tangential { .. } => "tangential",
            Scheme::Aniso { .. } => "aniso",
            Scheme::Willmore => "willmore",
            Scheme::WillmoreStable => "willmore_stable",
            Scheme::WillmoreAde => "willmore_ade",
            Scheme::DziukWillmore => "dziuk_willmore",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameters of the Willmore family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WillmoreParams {
    /// Spontaneous curvature, area-difference penalty and preferred total curvature.
    pub ade: AdeParams,
    /// Enforce conservation of `|Γ|`.
    pub area: bool,
    /// Enforce conservation of the enclosed volume.
    pub volume: bool,
    /// Weingarten approximation used for `|W|²` when `d = 3`.
    pub weingarten: WeingartenVariant,
    /// Interprets `κ̄` in the opposite orientation (`κ̄ ↦ −κ̄`).
    pub flip_kappa_sign: bool,
}

impl Default for WillmoreParams {
    fn default() -> Self {
        WillmoreParams {
            ade: AdeParams::default(),
            area: false,
            volume: false,
            weingarten: WeingartenVariant::Wh,
            flip_kappa_sign: false,
        }
    }
}

impl WillmoreParams {
    /// The energy parameters with the orientation convention applied to `κ̄`.
    pub fn effective_ade(&self) -> AdeParams {
        let mut p = self.ade;
        if self.flip_kappa_sign {
            p.kappa_bar = -p.kappa_bar;
        }
        p
    }
}

/// Stopping rule of the nonlinear (Picard and lagged) iterations:
/// `‖X^{i+1} − X^i‖∞ < tol · (1 + ‖X^i‖∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlinearParams {
    pub tol: f64,
    pub maxit: usize,
}

impl Default for NonlinearParams {
    fn default() -> Self {
        NonlinearParams {
            tol: 1e-10,
            maxit: 100,
        }
    }
}

/// Configuration of a flow run.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub scheme: Scheme,
    /// Uniform time step `Δt > 0`.
    pub dt: f64,
    /// Anisotropic density for [`Scheme::Aniso`]; isotropic when `None`.
    pub aniso: Option<Anisotropy>,
    /// Kinetic mobility `β(ν)`, given as a density evaluated on unit normals; 1 when `None`.
    pub mobility: Option<Anisotropy>,
    pub willmore: WillmoreParams,
    pub solver: SolveMethod,
    pub nonlinear: NonlinearParams,
    /// Use `ω̂ = ω/|ω|` in place of `ω` in the normal coupling of the
    /// generalized and tangential schemes.
    pub normalized_normals: bool,
}

impl FlowConfig {
    /// A configuration with defaults for everything but the scheme and `Δt`.
    pub fn new(scheme: Scheme, dt: f64) -> Self {
        FlowConfig {
            scheme,
            dt,
            aniso: None,
            mobility: None,
            willmore: WillmoreParams::default(),
            solver: SolveMethod::Direct,
            nonlinear: NonlinearParams::default(),
            normalized_normals: false,
        }
    }

    /// Checks parameter ranges and compatibility with a mesh of dimension `dim`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad(format!("Δt must be positive, got {}", self.dt));
        }
        if self.scheme.curves_only() && dim != 2 {
            return bad(format!(
                "the {} scheme is only available for curves",
                self.scheme
            ));
        }
        if !(self.nonlinear.tol > 0.0) || self.nonlinear.maxit == 0 {
            return bad("nonlinear tolerance and iteration budget must be positive".into());
        }
        for (name, a) in [("anisotropy", &self.aniso), ("mobility", &self.mobility)] {
            if let Some(a) = a {
                if a.dim() != dim {
                    return bad(format!(
                        "{name} has dimension {} but the mesh has {dim}",
                        a.dim()
                    ));
                }
            }
        }
        let check_f = |f: &FChoice| match *f {
            FChoice::Power { exponent } if !(exponent > 0.0) => bad(format!(
                "power-law exponent must be positive, got {exponent}"
            )),
            FChoice::Salk { alpha, xi } if !(alpha > 0.0 && xi > 0.0) => bad(format!(
                "SALK parameters must be positive, got α = {alpha}, ξ = {xi}"
            )),
            _ => Ok(()),
        };
        match &self.scheme {
            Scheme::Theta { theta } if !(0.0..=1.0).contains(theta) => {
                return bad(format!("θ must lie in [0, 1], got {theta}"))
            }
            Scheme::Generic { f } => check_f(f)?,
            Scheme::Tangential { f, params } => {
                check_f(f)?;
                if !f.is_linear() {
                    return Err(Error::Unsupported(
                        "tangential control is available for linear F only".into(),
                    ));
                }
                if !(params.alpha >= 0.0) || !(params.delta >= 0.0) {
                    return bad(format!(
                        "α and δ must be nonnegative, got α = {}, δ = {}",
                        params.alpha, params.delta
                    ));
                }
                if params.strategy == Strategy::S2 && !(params.delta > 0.0) {
                    return bad("strategy S2 needs δ > 0".into());
                }
            }
            _ => {}
        }
        let w = &self.willmore;
        for (name, v) in [("κ̄", w.ade.kappa_bar), ("β", w.ade.beta), ("M₀", w.ade.m0)] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        if w.ade.beta < 0.0 {
            return bad(format!("β must be nonnegative, got {}", w.ade.beta));
        }
        Ok(())
    }
}

/// The evolving state of a run.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub mesh: Mesh,
    /// Scalar curvature `κ^m` where the scheme carries or produces one.
    pub kappa: Option<Vec<f64>>,
    /// Curvature vector `κ⃗^m` for the vector Willmore schemes.
    pub kappa_vec: Option<Vec<Vector3<f64>>>,
    /// Auxiliary field `Y⃗^m` of the Willmore schemes.
    pub y: Option<Vec<Vector3<f64>>>,
    /// Area-difference variable `A^m`.
    pub ade_a: Option<f64>,
    pub step: usize,
    pub time: f64,
}

impl FlowState {
    /// A state holding only a mesh, at step 0.
    pub fn new(mesh: Mesh) -> Self {
        FlowState {
            mesh,
            kappa: None,
            kappa_vec: None,
            y: None,
            ade_a: None,
            step: 0,
            time: 0.0,
        }
    }

    /// Scalar curvature for diagnostics: `κ` when present, otherwise the
    /// signed magnitude of `κ⃗`.
    pub fn scalar_curvature(&self) -> Option<Vec<f64>> {
        match (&self.kappa, &self.kappa_vec) {
            (Some(k), _) => Some(k.clone()),
            (None, Some(kv)) => Some(diagnostics::signed_curvature(&self.mesh, kv)),
            _ => None,
        }
    }

    fn advanced(&self, mesh: Mesh, dt: f64) -> FlowState {
        FlowState {
            mesh,
            kappa: None,
            kappa_vec: None,
            y: None,
            ade_a: None,
            step: self.step + 1,
            time: (self.step + 1) as f64 * dt,
        }
    }
}

/// What one step produced besides the new state.
#[derive(Debug, Clone)]
pub struct StepReport {
    /// Terms of the stability inequality of the step.
    pub stability: Stability,
    /// Linear solver iterations (CG), summed over nonlinear iterations.
    pub linear_iterations: usize,
    /// Nonlinear iterations (1 for linear schemes).
    pub nonlinear_iterations: usize,
    /// False when an iteration that flags rather than fails ran out of budget.
    pub converged: bool,
    /// `‖X^{m+1} − X^m‖∞`.
    pub max_displacement: f64,
    /// `(Σ_k M_kk Σ_i (τ_ik · δX_k)²)^{1/2}` for the tangential scheme.
    pub tangential_displacement: Option<f64>,
    /// Tangential velocities `β_i` flattened vertex by vertex.
    pub beta: Option<Vec<f64>>,
    /// Lagrange multipliers `(λ_A, λ_V)` of the constrained Willmore scheme.
    pub multipliers: Option<(f64, f64)>,
    /// Max/min edge length minus one after an equidistributing step.
    pub equidistribution: Option<f64>,
}

impl StepReport {
    fn new(stability: Stability) -> Self {
        StepReport {
            stability,
            linear_iterations: 0,
            nonlinear_iterations: 1,
            converged: true,
            max_displacement: 0.0,
            tangential_displacement: None,
            beta: None,
            multipliers: None,
            equidistribution: None,
        }
    }

    /// The iteration count written to the record stream.
    pub fn iterations(&self) -> usize {
        if self.nonlinear_iterations > 1 {
            self.nonlinear_iterations
        } else {
            self.linear_iterations
        }
    }
}

/// A configured stepper.
#[derive(Debug, Clone)]
pub struct Flow {
    config: FlowConfig,
    solver: Solver,
}

impl Flow {
    /// Creates a stepper; the configuration is validated against each mesh in
    /// [`Flow::initialize`].
    pub fn new(config: FlowConfig) -> Self {
        let solver = Solver::new(config.solver);
        Flow { config, solver }
    }

    pub fn config(&self) -> &FlowConfig {
        &self.config
    }

    /// Builds the initial state, computing the lagged fields the scheme needs.
    pub fn initialize(&mut self, mesh: Mesh) -> Result<FlowState> {
        self.config.validate(mesh.dim())?;
        let mut state = FlowState::new(mesh);
        match self.config.scheme {
            Scheme::Willmore | Scheme::WillmoreStable => self.init_scalar_willmore(&mut state)?,
            Scheme::WillmoreAde | Scheme::DziukWillmore => self.init_vector_willmore(&mut state)?,
            _ => {}
        }
        Ok(state)
    }

    /// Advances the state by one step; failures carry the index of the step.
    pub fn step(&mut self, state: &FlowState) -> Result<(FlowState, StepReport)> {
        self.step_inner(state)
            .map_err(|e| Error::at_step(state.step + 1, e))
    }

    fn step_inner(&mut self, state: &FlowState) -> Result<(FlowState, StepReport)> {
        match self.config.scheme {
            Scheme::Mcf => self.step_generic(state, FChoice::Mcf),
            Scheme::Elimkappa { normalized } => self.step_elimkappa(state, normalized),
            Scheme::Dziuk { lumped } => self.step_dziuk(state, lumped),
            Scheme::Theta { theta } => self.step_theta(state, theta),
            Scheme::Dd95 => self.step_dd95(state),
            Scheme::Fdfi => self.step_fdfi(state),
            Scheme::Generic { f } => self.step_generic(state, f),
            Scheme::Tangential { f, params } => self.step_tangential(state, f, params),
            Scheme::Aniso { order } => self.step_aniso(state, order),
            Scheme::Willmore => self.step_willmore(state),
            Scheme::WillmoreStable => self.step_willmore_stable(state),
            Scheme::WillmoreAde => self.step_willmore_ade(state, false),
            Scheme::DziukWillmore => self.step_willmore_ade(state, true),
        }
    }

    /// Energy-bearing scalar curvature of a state for the record stream.
    pub fn record(&self, state: &FlowState, report: Option<&StepReport>) -> DiagnosticsRecord {
        let kappa = state.scalar_curvature();
        let ade = self.config.willmore.effective_ade();
        let iso;
        let aniso = match &self.config.aniso {
            Some(a) => a,
            None => {
                iso = Anisotropy::iso(state.mesh.dim());
                &iso
            }
        };
        diagnostics::record(
            state.step,
            state.time,
            &state.mesh,
            kappa.as_deref(),
            Some(aniso),
            Some(&ade),
            report.map_or(0.0, |r| r.stability.slack()),
            report.map_or(0, StepReport::iterations),
        )
    }

    /// Solves a block system with the configured method, naming it on failure.
    fn solve_saddle(&mut self, sys: &SaddleSystem, context: &str) -> Result<SaddleSolution> {
        self.solver
            .solve_saddle(sys)
            .map_err(|e| Error::solve(context, e))
    }

    /// Solves a symmetric positive definite system: LU on the direct path,
    /// Jacobi-preconditioned CG otherwise. Returns the solution and CG iterations.
    fn solve_spd(&mut self, a: &CsrMatrix, b: &[f64], context: &str) -> Result<(Vec<f64>, usize)> {
        let out = match self.config.solver {
            SolveMethod::Direct => self.solver.solve(a, b).map(|x| (x, 0)),
            SolveMethod::SchurCg { tol, maxit } => {
                let maxit = if maxit == 0 {
                    20 * a.nrows() + 100
                } else {
                    maxit
                };
                cg_solve(a, b, tol, maxit, Some(&jacobi(a)), None).map(|o| (o.x, o.iterations))
            }
        };
        out.map_err(|e| Error::solve(context, e))
    }
}

/// Unit vertex normals `ω̂_k = ω_k / |ω_k|`; fails at a vanishing `ω_k`.
pub(crate) fn unit_vertex_normals(mesh: &Mesh) -> Result<Vec<Vector3<f64>>> {
    mesh.vertex_normals()
        .into_iter()
        .enumerate()
        .map(|(k, w)| {
            let n = w.norm();
            if n <= ZERO_NORMAL_TOL {
                Err(Error::VertexNormals(format!("ω vanishes at vertex {k}")))
            } else {
                Ok(w / n)
            }
        })
        .collect()
}

/// Normal coupling with blocks `M_kk ω_k`, or `M_kk ω̂_k` when `normalized`.
fn coupling(mesh: &Mesh, normalized: bool) -> Result<CsrMatrix> {
    let m = mesh.lumped_mass();
    let w = if normalized {
        unit_vertex_normals(mesh)?
    } else {
        mesh.vertex_normals()
    };
    let blocks: Vec<_> = w.iter().zip(&m).map(|(w, m)| w * *m).collect();
    Ok(vertex_column_blocks(&blocks, mesh.dim()))
}

/// `X^m + δX` as a new mesh over the same connectivity.
fn displaced(mesh: &Mesh, dx: &[f64]) -> Result<(Mesh, f64)> {
    let d = mesh.dim();
    let x0 = flatten(mesh.points(), d);
    let x: Vec<f64> = x0.iter().zip(dx).map(|(a, b)| a + b).collect();
    Ok((mesh.with_points(unflatten(&x, d))?, max_abs(dx)))
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn neg(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(|x| -x).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `aᵀ B c`.
fn quad(a: &[f64], b: &CsrMatrix, c: &[f64]) -> f64 {
    dot(a, &b.mul_vec(c))
}

/// The stopping test `‖new − old‖∞ < tol · (1 + ‖old‖∞)`.
fn displacement_converged(old: &[f64], new: &[f64], tol: f64) -> (bool, f64) {
    let diff = old
        .iter()
        .zip(new)
        .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
    (diff < tol * (1.0 + max_abs(old)), diff)
}
