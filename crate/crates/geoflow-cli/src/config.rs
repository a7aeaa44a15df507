//! Run configuration: a sectioned `key = value` text format.
//!
//! ```text
//! # comment
//! [mesh]
//! spec = circle(128,1,0)
//!
//! [flow]
//! scheme = mcf
//! dt = 1e-4
//! final_time = 0.25
//!
//! [output]
//! every = 100
//! ```
//!
//! Every key is checked against the keys its section accepts, and keys that
//! the selected scheme does not read are rejected as well, so a typo never
//! silently falls back to a default. Errors carry the line they refer to.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use geoflow::aniso::Anisotropy;
use geoflow::curvature::WeingartenVariant;
use geoflow::diagnostics::AdeParams;
use geoflow::flows::{
    AnisoOrder, FChoice, FlowConfig, NonlinearParams, Scheme, Strategy, TangentialParams,
    WillmoreParams,
};
use geoflow::linalg::SolveMethod;
use geoflow::mesh::MeshSpec;
use nalgebra::Matrix3;

/// A configuration error, optionally tied to a line of the input.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ConfigError {
    /// File the configuration was read from, when there is one.
    pub origin: Option<String>,
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        ConfigError {
            origin: None,
            line: Some(line),
            message: message.into(),
        }
    }

    /// An error not tied to a line.
    pub fn general(message: impl Into<String>) -> Self {
        ConfigError {
            origin: None,
            line: None,
            message: message.into(),
        }
    }

    /// The same error attributed to a file.
    pub fn in_file(mut self, origin: impl Into<String>) -> Self {
        self.origin = Some(origin.into());
        self
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.origin, self.line) {
            (Some(o), Some(l)) => write!(f, "{o}:{l}: {}", self.message),
            (None, Some(l)) => write!(f, "line {l}: {}", self.message),
            (Some(o), None) => write!(f, "{o}: {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

type Result<T> = std::result::Result<T, ConfigError>;

/// A value with the line it was read from.
#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    line: usize,
}

/// The raw `section → key → entries` content of a configuration text.
#[derive(Debug, Default)]
struct Document {
    sections: BTreeMap<String, Section>,
}

#[derive(Debug, Default)]
struct Section {
    line: usize,
    keys: BTreeMap<String, Vec<Entry>>,
}

/// Sections and the keys each accepts; `matrix` is the only repeatable key.
const SCHEMA: &[(&str, &[&str])] = &[
    ("mesh", &["spec", "file"]),
    (
        "flow",
        &[
            "scheme",
            "dt",
            "final_time",
            "steps",
            "f",
            "theta",
            "normalized",
            "lumped",
            "order",
            "strategy",
            "alpha",
            "delta",
            "normalized_normals",
        ],
    ),
    ("anisotropy", &["preset", "r", "matrix"]),
    ("mobility", &["preset", "r", "matrix"]),
    (
        "willmore",
        &[
            "kappa_bar",
            "beta",
            "m0",
            "area",
            "volume",
            "weingarten",
            "flip_kappa_sign",
        ],
    ),
    (
        "solver",
        &["method", "tol", "maxit", "nonlinear_tol", "nonlinear_maxit"],
    ),
    ("output", &["dir", "every", "vertex_fields"]),
    (
        "eoc",
        &[
            "selector",
            "levels",
            "final_time",
            "dt",
            "dt_exponent",
            "radius",
        ],
    ),
];

fn parse_document(text: &str) -> Result<Document> {
    let mut doc = Document::default();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::at(line, "section header must end with `]`"))?
                .trim();
            if !SCHEMA.iter().any(|(s, _)| *s == name) {
                let known: Vec<&str> = SCHEMA.iter().map(|(s, _)| *s).collect();
                return Err(ConfigError::at(
                    line,
                    format!(
                        "unknown section `[{name}]` (expected one of {})",
                        known.join(", ")
                    ),
                ));
            }
            if doc.sections.contains_key(name) {
                return Err(ConfigError::at(
                    line,
                    format!("section `[{name}]` appears twice"),
                ));
            }
            doc.sections.insert(
                name.to_string(),
                Section {
                    line,
                    keys: BTreeMap::new(),
                },
            );
            current = Some(name.to_string());
            continue;
        }
        let section = current
            .as_ref()
            .ok_or_else(|| ConfigError::at(line, "key outside of any section"))?;
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::at(line, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        let allowed = SCHEMA
            .iter()
            .find(|(s, _)| s == section)
            .map(|(_, k)| *k)
            .unwrap_or(&[]);
        if !allowed.contains(&key) {
            return Err(ConfigError::at(
                line,
                format!(
                    "unknown key `{key}` in `[{section}]` (expected one of {})",
                    allowed.join(", ")
                ),
            ));
        }
        if value.is_empty() {
            return Err(ConfigError::at(line, format!("key `{key}` has no value")));
        }
        let entries = doc
            .sections
            .get_mut(section)
            .expect("current section exists")
            .keys
            .entry(key.to_string())
            .or_default();
        if !entries.is_empty() && key != "matrix" {
            return Err(ConfigError::at(
                line,
                format!(
                    "key `{key}` repeated (first given on line {})",
                    entries[0].line
                ),
            ));
        }
        entries.push(Entry {
            value: value.to_string(),
            line,
        });
    }
    Ok(doc)
}

/// Typed access to one section, tracking which keys were consumed.
struct Reader<'a> {
    name: &'a str,
    section: Option<&'a Section>,
    used: Vec<&'static str>,
}

impl<'a> Reader<'a> {
    fn new(doc: &'a Document, name: &'a str) -> Self {
        Reader {
            name,
            section: doc.sections.get(name),
            used: Vec::new(),
        }
    }

    fn present(&self) -> bool {
        self.section.is_some()
    }

    fn entries(&mut self, key: &'static str) -> &'a [Entry] {
        self.used.push(key);
        self.section
            .and_then(|s| s.keys.get(key))
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    fn entry(&mut self, key: &'static str) -> Option<&'a Entry> {
        self.entries(key).first()
    }

    fn string(&mut self, key: &'static str) -> Option<(String, usize)> {
        self.entry(key).map(|e| (e.value.clone(), e.line))
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &'static str, what: &str) -> Result<Option<T>> {
        match self.entry(key) {
            None => Ok(None),
            Some(e) => e.value.parse().map(Some).map_err(|_| {
                ConfigError::at(e.line, format!("`{key}` must be {what}, got `{}`", e.value))
            }),
        }
    }

    fn float(&mut self, key: &'static str) -> Result<Option<f64>> {
        let line = self.entry(key).map(|e| e.line);
        let v: Option<f64> = self.parsed(key, "a number")?;
        match (v, line) {
            (Some(x), Some(l)) if !x.is_finite() => Err(ConfigError::at(
                l,
                format!("`{key}` must be finite, got {x}"),
            )),
            _ => Ok(v),
        }
    }

    fn count(&mut self, key: &'static str) -> Result<Option<usize>> {
        self.parsed(key, "a nonnegative integer")
    }

    fn flag(&mut self, key: &'static str) -> Result<Option<bool>> {
        self.parsed(key, "`true` or `false`")
    }

    fn required<T>(&self, key: &str, v: Option<T>) -> Result<T> {
        v.ok_or_else(|| {
            let line = self.section.map(|s| s.line);
            ConfigError {
                origin: None,
                line,
                message: format!("missing key `{key}` in `[{}]`", self.name),
            }
        })
    }

    /// Fails on keys present in the section but not read for this configuration.
    fn finish(self, why: &str) -> Result<()> {
        if let Some(s) = self.section {
            for (key, entries) in &s.keys {
                if !self.used.contains(&key.as_str()) {
                    return Err(ConfigError::at(
                        entries[0].line,
                        format!("key `{key}` in `[{}]` is not used {why}", self.name),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Where the initial mesh comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Generated(MeshSpec),
    File(PathBuf),
}

/// An anisotropic density as written in the configuration; the dimension is
/// supplied by the mesh when the density is built.
#[derive(Debug, Clone, PartialEq)]
pub struct AnisoSpec {
    line: usize,
    r: Option<f64>,
    parts: Vec<MatrixSpec>,
}

#[derive(Debug, Clone, PartialEq)]
enum MatrixSpec {
    Explicit {
        line: usize,
        entries: Vec<f64>,
    },
    Preset {
        line: usize,
        name: String,
        args: Vec<f64>,
    },
}

fn parse_call(s: &str) -> Option<(String, Vec<f64>)> {
    let s = s.trim();
    match s.find('(') {
        None => Some((s.to_string(), Vec::new())),
        Some(open) => {
            let inner = s[open + 1..].strip_suffix(')')?;
            if inner.trim().is_empty() {
                return Some((s[..open].trim().to_string(), Vec::new()));
            }
            let args: Option<Vec<f64>> = inner.split(',').map(|a| a.trim().parse().ok()).collect();
            Some((s[..open].trim().to_string(), args?))
        }
    }
}

fn parse_matrix(e: &Entry) -> Result<MatrixSpec> {
    let first = e.value.chars().next().unwrap_or(' ');
    if first.is_ascii_alphabetic() {
        let (name, args) = parse_call(&e.value)
            .ok_or_else(|| ConfigError::at(e.line, format!("malformed preset `{}`", e.value)))?;
        return Ok(MatrixSpec::Preset {
            line: e.line,
            name,
            args,
        });
    }
    let entries: std::result::Result<Vec<f64>, _> = e
        .value
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(str::parse)
        .collect();
    let entries =
        entries.map_err(|_| ConfigError::at(e.line, format!("malformed matrix `{}`", e.value)))?;
    Ok(MatrixSpec::Explicit {
        line: e.line,
        entries,
    })
}

fn preset_density(dim: usize, line: usize, name: &str, args: &[f64]) -> Result<Anisotropy> {
    let made = match (name, args) {
        ("iso", []) => Ok(Anisotropy::iso(dim)),
        ("weighted", w) if w.len() == dim => Anisotropy::weighted(w),
        ("weighted", w) => {
            return Err(ConfigError::at(
                line,
                format!(
                    "weighted(...) needs {dim} weights for this mesh, got {}",
                    w.len()
                ),
            ))
        }
        ("l1reg", [eps]) => Anisotropy::l1reg(dim, *eps),
        ("cubic", [eps, r]) => Anisotropy::cubic(dim, *eps, *r),
        ("hexagonal", [eps, theta0]) => Anisotropy::hexagonal(dim, *eps, *theta0),
        _ => {
            return Err(ConfigError::at(
                line,
                format!(
                    "unknown preset `{name}` with {} arguments (expected iso, weighted(a,b,...), \
                     l1reg(eps), cubic(eps,r) or hexagonal(eps,theta0))",
                    args.len()
                ),
            ))
        }
    };
    made.map_err(|e| ConfigError::at(line, e.to_string()))
}

impl AnisoSpec {
    /// A density given by a single preset.
    pub fn preset(text: &str) -> Result<Self> {
        let e = Entry {
            value: text.to_string(),
            line: 0,
        };
        Ok(AnisoSpec {
            line: 0,
            r: None,
            parts: vec![parse_matrix(&e)?],
        })
    }

    /// Builds the density for meshes in `dim` dimensions.
    ///
    /// Explicit matrices and the matrices of presets are concatenated. The
    /// exponent is the configured `r`, or the preset's own exponent when the
    /// density consists of one preset, and 1 otherwise.
    pub fn build(&self, dim: usize) -> Result<Anisotropy> {
        let mut mats: Vec<Matrix3<f64>> = Vec::new();
        let mut preset_r = None;
        for part in &self.parts {
            match part {
                MatrixSpec::Explicit { line, entries } => {
                    if entries.len() != dim * dim {
                        return Err(ConfigError::at(
                            *line,
                            format!(
                                "matrix needs {} entries for this mesh, got {}",
                                dim * dim,
                                entries.len()
                            ),
                        ));
                    }
                    let mut m = Matrix3::identity();
                    for i in 0..dim {
                        for j in 0..dim {
                            m[(i, j)] = entries[i * dim + j];
                        }
                    }
                    mats.push(m);
                }
                MatrixSpec::Preset { line, name, args } => {
                    let a = preset_density(dim, *line, name, args)?;
                    preset_r = Some(a.r());
                    mats.extend_from_slice(a.matrices());
                }
            }
        }
        let r = match (self.r, self.parts.len(), preset_r) {
            (Some(r), _, _) => r,
            (None, 1, Some(r)) => r,
            _ => 1.0,
        };
        Anisotropy::new(dim, r, mats).map_err(|e| ConfigError::at(self.line, e.to_string()))
    }
}

fn read_aniso(doc: &Document, name: &'static str) -> Result<Option<AnisoSpec>> {
    let mut rd = Reader::new(doc, name);
    if !rd.present() {
        return Ok(None);
    }
    let line = rd.section.map_or(0, |s| s.line);
    let preset = rd.entry("preset").cloned();
    let r = rd.float("r")?;
    let matrices = rd.entries("matrix");
    let mut parts = Vec::new();
    if let Some(p) = &preset {
        if !matrices.is_empty() {
            return Err(ConfigError::at(
                matrices[0].line,
                format!("`[{name}]` takes either `preset` or `matrix` entries, not both"),
            ));
        }
        match parse_matrix(p)? {
            m @ MatrixSpec::Preset { .. } => parts.push(m),
            MatrixSpec::Explicit { .. } => {
                return Err(ConfigError::at(
                    p.line,
                    "`preset` must name a preset; use `matrix` for entries",
                ))
            }
        }
    }
    for m in matrices {
        parts.push(parse_matrix(m)?);
    }
    if parts.is_empty() {
        return Err(ConfigError::at(
            line,
            format!("`[{name}]` needs a `preset` or at least one `matrix`"),
        ));
    }
    rd.finish("")?;
    Ok(Some(AnisoSpec { line, r, parts }))
}

/// Everything of a flow except what depends on the mesh dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSpec {
    pub scheme: Scheme,
    /// Time step; required by `run`, replaced per level by `eoc`.
    pub dt: Option<f64>,
    pub final_time: Option<f64>,
    pub steps: Option<usize>,
    pub aniso: Option<AnisoSpec>,
    pub mobility: Option<AnisoSpec>,
    pub willmore: WillmoreParams,
    pub solver: SolveMethod,
    pub nonlinear: NonlinearParams,
    pub normalized_normals: bool,
    line: usize,
}

impl FlowSpec {
    /// A flow with default parameters.
    pub fn new(scheme: Scheme) -> Self {
        FlowSpec {
            scheme,
            dt: None,
            final_time: None,
            steps: None,
            aniso: None,
            mobility: None,
            willmore: WillmoreParams::default(),
            solver: SolveMethod::Direct,
            nonlinear: NonlinearParams::default(),
            normalized_normals: false,
            line: 0,
        }
    }

    /// The library configuration for meshes in `dim` dimensions and step `dt`.
    pub fn build(&self, dim: usize, dt: f64) -> Result<FlowConfig> {
        let mut c = FlowConfig::new(self.scheme, dt);
        c.aniso = self.aniso.as_ref().map(|a| a.build(dim)).transpose()?;
        c.mobility = self.mobility.as_ref().map(|a| a.build(dim)).transpose()?;
        c.willmore = self.willmore;
        c.solver = self.solver;
        c.nonlinear = self.nonlinear;
        c.normalized_normals = self.normalized_normals;
        c.validate(dim)
            .map_err(|e| ConfigError::at(self.line, e.to_string()))?;
        Ok(c)
    }

    /// The time step and number of steps of a run.
    pub fn schedule(&self) -> Result<(f64, usize)> {
        let dt = self
            .dt
            .ok_or_else(|| ConfigError::general("missing key `dt` in `[flow]`"))?;
        if !(dt > 0.0) {
            return Err(ConfigError::at(
                self.line,
                format!("`dt` must be positive, got {dt}"),
            ));
        }
        let steps = match (self.steps, self.final_time) {
            (Some(n), None) => n,
            (None, Some(t)) => steps_to(t, dt).map_err(|m| ConfigError::at(self.line, m))?,
            (Some(_), Some(_)) => {
                return Err(ConfigError::at(
                    self.line,
                    "give either `steps` or `final_time`, not both",
                ))
            }
            (None, None) => {
                return Err(ConfigError::at(
                    self.line,
                    "`[flow]` needs `steps` or `final_time`",
                ))
            }
        };
        Ok((dt, steps))
    }
}

/// The number of uniform steps of size `dt` reaching `t`.
pub fn steps_to(t: f64, dt: f64) -> std::result::Result<usize, String> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(format!("final time must be nonnegative, got {t}"));
    }
    let n = (t / dt).round();
    if (n * dt - t).abs() > 1e-9 * t.max(dt) {
        return Err(format!(
            "final time {t} is not a whole number of steps of size {dt}"
        ));
    }
    Ok(n as usize)
}

fn read_scheme(rd: &mut Reader) -> Result<Scheme> {
    let scheme_v = rd.string("scheme");
    let (name, line) = rd.required("scheme", scheme_v)?;
    let f = |rd: &mut Reader| -> Result<FChoice> {
        let f_v = rd.string("f");
        let (text, l) = rd.required("f", f_v)?;
        text.parse()
            .map_err(|e: geoflow::Error| ConfigError::at(l, e.to_string()))
    };
    Ok(match name.as_str() {
        "mcf" => Scheme::Mcf,
        "elimkappa" => Scheme::Elimkappa {
            normalized: rd.flag("normalized")?.unwrap_or(false),
        },
        "dziuk" => Scheme::Dziuk {
            lumped: rd.flag("lumped")?.unwrap_or(false),
        },
        "theta" => {
            let theta = rd.float("theta")?;
            Scheme::Theta {
                theta: rd.required("theta", theta)?,
            }
        }
        "dd95" => Scheme::Dd95,
        "fdfi" => Scheme::Fdfi,
        "generic" => Scheme::Generic { f: f(rd)? },
        "tangential" => {
            let f = f(rd)?;
            let strategy_v = rd.string("strategy");
            let (s, l) = rd.required("strategy", strategy_v)?;
            let strategy: Strategy = s
                .parse()
                .map_err(|e: geoflow::Error| ConfigError::at(l, e.to_string()))?;
            Scheme::Tangential {
                f,
                params: TangentialParams {
                    strategy,
                    alpha: rd.float("alpha")?.unwrap_or(0.0),
                    delta: rd.float("delta")?.unwrap_or(0.0),
                },
            }
        }
        "aniso" => {
            let order = match rd.string("order") {
                None => AnisoOrder::Second,
                Some((o, _)) if o == "second" => AnisoOrder::Second,
                Some((o, _)) if o == "fourth" => AnisoOrder::Fourth,
                Some((o, l)) => {
                    return Err(ConfigError::at(
                        l,
                        format!("`order` must be `second` or `fourth`, got `{o}`"),
                    ))
                }
            };
            Scheme::Aniso { order }
        }
        "willmore" => Scheme::Willmore,
        "willmore_stable" => Scheme::WillmoreStable,
        "willmore_ade" => Scheme::WillmoreAde,
        "dziuk_willmore" => Scheme::DziukWillmore,
        other => {
            return Err(ConfigError::at(
                line,
                format!(
                    "unknown scheme `{other}` (expected mcf, elimkappa, dziuk, theta, dd95, fdfi, generic, \
                     tangential, aniso, willmore, willmore_stable, willmore_ade or dziuk_willmore)"
                ),
            ))
        }
    })
}

fn read_flow(doc: &Document, default_scheme: Option<Scheme>) -> Result<FlowSpec> {
    let mut rd = Reader::new(doc, "flow");
    let line = rd.section.map_or(0, |s| s.line);
    let scheme = match default_scheme {
        Some(s) if rd.entry("scheme").is_none() => s,
        _ => read_scheme(&mut rd)?,
    };
    let mut spec = FlowSpec::new(scheme);
    spec.line = line;
    spec.dt = rd.float("dt")?;
    spec.final_time = rd.float("final_time")?;
    spec.steps = rd.count("steps")?;
    spec.normalized_normals = rd.flag("normalized_normals")?.unwrap_or(false);
    rd.finish(&format!("by scheme `{scheme}`"))?;

    spec.aniso = read_aniso(doc, "anisotropy")?;
    spec.mobility = read_aniso(doc, "mobility")?;
    if spec.aniso.is_some() && !matches!(scheme, Scheme::Aniso { .. }) {
        let l = doc.sections["anisotropy"].line;
        return Err(ConfigError::at(
            l,
            format!("`[anisotropy]` is not used by scheme `{scheme}`"),
        ));
    }

    let mut w = Reader::new(doc, "willmore");
    if w.present() {
        let willmore_family = matches!(
            scheme,
            Scheme::Willmore | Scheme::WillmoreStable | Scheme::WillmoreAde | Scheme::DziukWillmore
        );
        if !willmore_family {
            let l = w.section.map_or(0, |s| s.line);
            return Err(ConfigError::at(
                l,
                format!("`[willmore]` is not used by scheme `{scheme}`"),
            ));
        }
        let weingarten = match w.string("weingarten") {
            None => WeingartenVariant::Wh,
            Some((v, l)) => v
                .parse()
                .map_err(|e: geoflow::Error| ConfigError::at(l, e.to_string()))?,
        };
        spec.willmore = WillmoreParams {
            ade: AdeParams {
                kappa_bar: w.float("kappa_bar")?.unwrap_or(0.0),
                beta: w.float("beta")?.unwrap_or(0.0),
                m0: w.float("m0")?.unwrap_or(0.0),
            },
            area: w.flag("area")?.unwrap_or(false),
            volume: w.flag("volume")?.unwrap_or(false),
            weingarten,
            flip_kappa_sign: w.flag("flip_kappa_sign")?.unwrap_or(false),
        };
        w.finish("")?;
    }

    let mut s = Reader::new(doc, "solver");
    let method = s.string("method");
    let tol = s.float("tol")?;
    let maxit = s.count("maxit")?;
    spec.solver = match method {
        None => SolveMethod::Direct,
        Some((m, _)) if m == "direct" => SolveMethod::Direct,
        Some((m, _)) if m == "schur_cg" => SolveMethod::SchurCg {
            tol: tol.unwrap_or(1e-12),
            maxit: maxit.unwrap_or(0),
        },
        Some((m, l)) => {
            return Err(ConfigError::at(
                l,
                format!("`method` must be `direct` or `schur_cg`, got `{m}`"),
            ))
        }
    };
    if spec.solver == SolveMethod::Direct {
        if let Some(e) = s.entry("tol").or(s.entry("maxit")) {
            return Err(ConfigError::at(
                e.line,
                "`tol` and `maxit` apply to `method = schur_cg` only",
            ));
        }
    }
    let defaults = NonlinearParams::default();
    spec.nonlinear = NonlinearParams {
        tol: s.float("nonlinear_tol")?.unwrap_or(defaults.tol),
        maxit: s.count("nonlinear_maxit")?.unwrap_or(defaults.maxit),
    };
    s.finish("")?;
    Ok(spec)
}

/// Output settings of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    /// Output directory; the `--out` flag takes precedence.
    pub dir: Option<PathBuf>,
    /// Snapshot cadence in steps (the final state is always written).
    pub every: usize,
    /// Also write per-vertex fields next to each snapshot.
    pub vertex_fields: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: None,
            every: 1,
            vertex_fields: false,
        }
    }
}

/// Exact solutions available to the convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selector {
    /// Circle under mean curvature flow, `r(t) = (r₀² − 2t)^{1/2}`.
    CircleMcf,
    /// Sphere under mean curvature flow, `r(t) = (r₀² − 4t)^{1/2}`.
    SphereMcf,
    /// Circle under Willmore flow, `r(t) = (r₀⁴ + 2t)^{1/4}`.
    CircleWillmore,
}

impl Selector {
    pub fn name(self) -> &'static str {
        match self {
            Selector::CircleMcf => "circle_mcf",
            Selector::SphereMcf => "sphere_mcf",
            Selector::CircleWillmore => "circle_willmore",
        }
    }

    /// The scheme used when `[flow]` does not name one.
    pub fn default_scheme(self) -> Scheme {
        match self {
            Selector::CircleMcf | Selector::SphereMcf => Scheme::Mcf,
            Selector::CircleWillmore => Scheme::Willmore,
        }
    }
}

/// A convergence study: one run per refinement level.
#[derive(Debug, Clone, PartialEq)]
pub struct EocSpec {
    pub selector: Selector,
    /// Vertex counts `J` for curves, subdivision levels for spheres.
    pub levels: Vec<usize>,
    pub final_time: f64,
    /// Time step at the first level.
    pub dt: f64,
    /// `Δt_ℓ = Δt_0 (h_ℓ / h_0)^p`.
    pub dt_exponent: f64,
    /// Initial radius.
    pub radius: f64,
}

fn read_eoc(doc: &Document) -> Result<Option<EocSpec>> {
    let mut rd = Reader::new(doc, "eoc");
    if !rd.present() {
        return Ok(None);
    }
    let selector_v = rd.string("selector");
    let (sel, l) = rd.required("selector", selector_v)?;
    let selector = match sel.as_str() {
        "circle_mcf" => Selector::CircleMcf,
        "sphere_mcf" => Selector::SphereMcf,
        "circle_willmore" => Selector::CircleWillmore,
        other => {
            return Err(ConfigError::at(
                l,
                format!(
                "unknown selector `{other}` (expected circle_mcf, sphere_mcf or circle_willmore)"
            ),
            ))
        }
    };
    let levels_v = rd.string("levels");
    let (text, l) = rd.required("levels", levels_v)?;
    let levels: std::result::Result<Vec<usize>, _> = text
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(str::parse)
        .collect();
    let levels =
        levels.map_err(|_| ConfigError::at(l, format!("malformed level list `{text}`")))?;
    if levels.len() < 2 {
        return Err(ConfigError::at(l, "need ≥ 2 levels"));
    }
    let final_time = rd.float("final_time")?;
    let final_time = rd.required("final_time", final_time)?;
    let dt = rd.float("dt")?;
    let dt = rd.required("dt", dt)?;
    if !(dt > 0.0) || !(final_time > 0.0) {
        return Err(ConfigError::at(l, "`dt` and `final_time` must be positive"));
    }
    let spec = EocSpec {
        selector,
        levels,
        final_time,
        dt,
        dt_exponent: rd.float("dt_exponent")?.unwrap_or(2.0),
        radius: rd.float("radius")?.unwrap_or(1.0),
    };
    rd.finish("")?;
    Ok(Some(spec))
}

/// A parsed configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mesh: Option<MeshSource>,
    pub flow: FlowSpec,
    pub output: OutputSpec,
    pub eoc: Option<EocSpec>,
}

impl RunConfig {
    /// Parses configuration text. `base` resolves relative mesh file paths.
    pub fn parse(text: &str, base: Option<&std::path::Path>) -> Result<Self> {
        let doc = parse_document(text)?;
        let eoc = read_eoc(&doc)?;

        let mut m = Reader::new(&doc, "mesh");
        let spec = m.string("spec");
        let file = m.string("file");
        let mesh = match (spec, file) {
            (Some((s, l)), None) => Some(MeshSource::Generated(
                s.parse()
                    .map_err(|e: geoflow::Error| ConfigError::at(l, e.to_string()))?,
            )),
            (None, Some((f, _))) => {
                let p = PathBuf::from(f);
                Some(MeshSource::File(match base {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p,
                }))
            }
            (Some(_), Some((_, l))) => {
                return Err(ConfigError::at(l, "give either `spec` or `file`, not both"))
            }
            (None, None) if m.present() => {
                return Err(ConfigError::at(
                    m.section.map_or(0, |s| s.line),
                    "`[mesh]` needs `spec` or `file`",
                ))
            }
            (None, None) => None,
        };
        m.finish("")?;
        if eoc.is_some() {
            if let Some(s) = doc.sections.get("mesh") {
                return Err(ConfigError::at(
                    s.line,
                    "`[mesh]` is not used by a convergence study",
                ));
            }
        }

        let flow = read_flow(&doc, eoc.as_ref().map(|e| e.selector.default_scheme()))?;
        if eoc.is_some() {
            if let Some(e) = ["dt", "final_time", "steps"].iter().find_map(|k| {
                doc.sections
                    .get("flow")
                    .and_then(|s| s.keys.get(*k))
                    .map(|v| &v[0])
            }) {
                return Err(ConfigError::at(
                    e.line,
                    "time stepping of a convergence study is set in `[eoc]`",
                ));
            }
        }

        let mut o = Reader::new(&doc, "output");
        let mut output = OutputSpec::default();
        if let Some((d, _)) = o.string("dir") {
            let p = PathBuf::from(d);
            output.dir = Some(match base {
                Some(b) if p.is_relative() => b.join(p),
                _ => p,
            });
        }
        let every_line = o.entry("every").map(|e| e.line);
        if let Some(n) = o.count("every")? {
            if n == 0 {
                return Err(ConfigError::at(
                    every_line.unwrap_or(0),
                    "`every` must be at least 1",
                ));
            }
            output.every = n;
        }
        output.vertex_fields = o.flag("vertex_fields")?.unwrap_or(false);
        o.finish("")?;

        Ok(RunConfig {
            mesh,
            flow,
            output,
            eoc,
        })
    }
}
