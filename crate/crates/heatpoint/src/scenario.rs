//! Scenario documents: TOML schema, defaults, validation and unit conversion.
//!
//! A parsed [`Scenario`] carries every default explicitly, so serializing it and
//! parsing the result reproduces the same value.

use std::f64::consts::PI;
use std::fmt;

use heatpoint_core::bounds::BoundConstants;
use heatpoint_core::{CenterSet, ManifoldSpec, Point, QuadratureConfig};
use serde::{Deserialize, Serialize};

/// Why a scenario was rejected.
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ScenarioError {
    /// The document is not valid TOML or does not fit the schema.
    #[error("parse error: {0}")]
    Parse(String),
    /// A field holds a value outside its allowed range.
    #[error("{field}: {reason}")]
    Invalid {
        /// Dotted path of the offending field, e.g. `centers[0].at`.
        field: String,
        /// What is wrong with it.
        reason: String,
    },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid { field: field.into(), reason: reason.into() }
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Unit system of `mu`, scales and reported energies.
    #[serde(default)]
    pub units: Units,
    /// Geometry.
    pub manifold: ManifoldDoc,
    /// Integration and root-finding tolerances.
    #[serde(default)]
    pub numerics: Numerics,
    /// Output location and format.
    #[serde(default)]
    pub output: Output,
    /// Interaction centers.
    pub centers: Vec<CenterDoc>,
    /// Work items, run in any order but written in this order.
    pub tasks: Vec<Task>,
}

/// `ħ = 2m = 1`, or physical `ħ` and `m`.
///
/// In physical units `mu` and `scale` are square roots of energies, so a single
/// center binds at `-mu²`; lengths are unchanged. Internally
/// `μ_nat = mu / sqrt(ħ²/2m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Units {
    /// `ħ = 2m = 1`.
    #[default]
    Natural,
    /// Physical constants in a consistent unit system.
    Physical {
        /// Reduced Planck constant.
        hbar: f64,
        /// Particle mass.
        mass: f64,
    },
}

impl Units {
    /// `ħ²/2m`, the energy of one inverse squared length.
    pub fn energy_scale(&self) -> f64 {
        match *self {
            Units::Natural => 1.0,
            Units::Physical { hbar, mass } => hbar * hbar / (2.0 * mass),
        }
    }

    /// Natural `ν` from a physical square-root energy.
    pub fn to_natural_root(&self, x: f64) -> f64 {
        x / self.energy_scale().sqrt()
    }

    /// Physical square-root energy from a natural `ν`.
    pub fn root_out(&self, nu: f64) -> f64 {
        nu * self.energy_scale().sqrt()
    }

    /// Physical energy from a natural one.
    pub fn energy_out(&self, e: f64) -> f64 {
        e * self.energy_scale()
    }
}

/// Geometry descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ManifoldDoc {
    /// ℝ^dim.
    Flat {
        /// 2 or 3.
        dim: u8,
    },
    /// Round S² with coordinates `(θ, φ)`.
    Sphere {
        /// Radius.
        radius: f64,
    },
    /// ℍ^dim of curvature `-kappa²` in upper half-space coordinates.
    Hyperbolic {
        /// 2 or 3.
        dim: u8,
        /// Curvature scale.
        kappa: f64,
    },
}

impl ManifoldDoc {
    /// Core geometry, with the failing field named.
    pub fn spec(&self) -> Result<ManifoldSpec, ScenarioError> {
        match *self {
            ManifoldDoc::Flat { dim } => {
                ManifoldSpec::flat(dim).map_err(|_| invalid("manifold.dim", "must be 2 or 3"))
            }
            ManifoldDoc::Sphere { radius } => {
                ManifoldSpec::sphere(radius).map_err(|_| invalid("manifold.radius", "must be positive and finite"))
            }
            ManifoldDoc::Hyperbolic { dim, kappa } => {
                if dim != 2 && dim != 3 {
                    return Err(invalid("manifold.dim", "must be 2 or 3"));
                }
                ManifoldSpec::hyperbolic(dim, kappa).map_err(|_| invalid("manifold.kappa", "must be positive and finite"))
            }
        }
    }

    /// Key of the calibration cache.
    pub fn cache_key(&self) -> String {
        match *self {
            ManifoldDoc::Flat { dim } => format!("flat{dim}"),
            ManifoldDoc::Sphere { radius } => format!("sphere:r={radius}"),
            ManifoldDoc::Hyperbolic { dim, kappa } => format!("hyperbolic{dim}:kappa={kappa}"),
        }
    }
}

/// One interaction center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CenterDoc {
    /// Coordinates in the geometry's chart.
    pub at: Vec<f64>,
    /// Binding scale: the energy of this center alone is `-mu²`.
    pub mu: f64,
}

/// Numerical tolerances; every field has a default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    /// Relative tolerance per matrix entry.
    pub rel_tol: f64,
    /// Boundary of the short-time quadrature segment.
    pub split_time: f64,
    /// Neglected tail weight.
    pub tail_tol: f64,
    /// Bisection budget per segment.
    pub max_subdivisions: usize,
    /// Absolute tolerance on roots in `ν`.
    pub root_tol: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        let q = QuadratureConfig::default();
        Numerics {
            rel_tol: q.rel_tol,
            split_time: q.split_time,
            tail_tol: q.tail_tol,
            max_subdivisions: q.max_subdivisions,
            root_tol: 1e-12,
        }
    }
}

impl Numerics {
    /// Core quadrature settings.
    pub fn quadrature(&self) -> QuadratureConfig {
        QuadratureConfig {
            rel_tol: self.rel_tol,
            split_time: self.split_time,
            tail_tol: self.tail_tol,
            max_subdivisions: self.max_subdivisions,
        }
    }
}

/// Artifact format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// Comma-separated tables.
    #[default]
    Csv,
    /// Tables as JSON arrays of row objects.
    Json,
}

/// Output settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Output {
    /// Directory receiving the artifacts; relative to the working directory.
    pub dir: String,
    /// Tabular artifact format.
    pub format: Format,
}

impl Default for Output {
    fn default() -> Self {
        Output { dir: "out".into(), format: Format::Csv }
    }
}

/// Sample layout of a wave-function task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layout", rename_all = "lowercase", deny_unknown_fields)]
pub enum Sampling {
    /// `count` equally spaced geodesic radii in `[from, to]` from center `center`.
    Ray {
        /// Center index.
        center: usize,
        /// Tangent direction at the center; normalized before use.
        direction: Vec<f64>,
        /// Smallest radius.
        from: f64,
        /// Largest radius.
        to: f64,
        /// Number of radii, at least 2.
        count: usize,
    },
    /// Explicit points.
    Points {
        /// Coordinates, one list per point.
        points: Vec<Vec<f64>>,
    },
}

/// Source of the envelope constants of a bounds task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum ConstantsDoc {
    /// Exact constants where known, cached calibration otherwise.
    Auto,
    /// Caller-supplied values.
    Explicit {
        /// `C₂`.
        c2: f64,
        /// `A`.
        a: f64,
        /// `B(ε)`.
        b_eps: f64,
        /// `C(ε, κ)`.
        c_eps: f64,
        /// `c`.
        c_lower: f64,
        /// `ξ`.
        xi: f64,
        /// Read off an exact kernel; permits `C₂ = 2`.
        exact: bool,
    },
}

/// One work item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Task {
    /// Every bound state: `spectrum.csv`.
    Spectrum,
    /// `ω^k(ν)` on a uniform grid: `eigenbranches.csv`.
    Eigenbranches {
        /// Grid start, square-root energy units.
        nu_min: f64,
        /// Grid end.
        nu_max: f64,
        /// Grid size, at least 2.
        points: usize,
    },
    /// Samples of one bound state: `wavefield.csv`.
    Wavefield {
        /// State index, ground state first.
        state: usize,
        /// Where to sample.
        sampling: Sampling,
        /// Also integrate `‖ψ‖₂`.
        norm: bool,
    },
    /// Certified lower bounds: `bounds.json`.
    Bounds {
        /// Bisection tolerance on `ν_*`, relative.
        tol: f64,
        /// Envelope constants.
        constants: ConstantsDoc,
    },
    /// Tunneling shifts versus exact roots: `perturbation.json`.
    Perturbation {
        /// Center indices; empty means all.
        centers: Vec<usize>,
    },
    /// Coupling flow and scheme checks: `rgflow.csv`.
    Rgflow {
        /// Reference scale `M` in square-root energy units; 0 means `e·μ_max`.
        scale: f64,
        /// `λ_R(M)`; absent means the scheme-consistent value.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        coupling: Option<f64>,
        /// Scale factors `γ`.
        gammas: Vec<f64>,
        /// Extra scales at which roots are recomputed from `Φ^R`; empty skips it.
        scheme_scales: Vec<f64>,
    },
    /// Heat-kernel property suite: `properties.json`.
    Properties,
}

impl Task {
    /// Lower-case task name, also the artifact stem.
    pub fn name(&self) -> &'static str {
        match self {
            Task::Spectrum => "spectrum",
            Task::Eigenbranches { .. } => "eigenbranches",
            Task::Wavefield { .. } => "wavefield",
            Task::Bounds { .. } => "bounds",
            Task::Perturbation { .. } => "perturbation",
            Task::Rgflow { .. } => "rgflow",
            Task::Properties => "properties",
        }
    }
}

/// Task table as written, with optional fields; defaults fill the gaps.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum TaskIn {
    Spectrum,
    Eigenbranches {
        nu_min: Option<f64>,
        nu_max: Option<f64>,
        points: Option<usize>,
    },
    Wavefield {
        state: Option<usize>,
        sampling: Option<Sampling>,
        norm: Option<bool>,
    },
    Bounds {
        tol: Option<f64>,
        constants: Option<ConstantsDoc>,
    },
    Perturbation {
        centers: Option<Vec<usize>>,
    },
    Rgflow {
        scale: Option<f64>,
        coupling: Option<f64>,
        gammas: Option<Vec<f64>>,
        scheme_scales: Option<Vec<f64>>,
    },
    Properties,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioIn {
    #[serde(default)]
    units: Units,
    manifold: ManifoldDoc,
    #[serde(default)]
    numerics: Numerics,
    #[serde(default)]
    output: Output,
    centers: Vec<CenterDoc>,
    tasks: Vec<TaskIn>,
}

fn fill(t: TaskIn, dim: usize, mu_max: f64) -> Task {
    match t {
        TaskIn::Spectrum => Task::Spectrum,
        TaskIn::Eigenbranches { nu_min, nu_max, points } => Task::Eigenbranches {
            nu_min: nu_min.unwrap_or(0.05 * mu_max),
            nu_max: nu_max.unwrap_or(3.0 * mu_max),
            points: points.unwrap_or(200),
        },
        TaskIn::Wavefield { state, sampling, norm } => Task::Wavefield {
            state: state.unwrap_or(0),
            sampling: sampling.unwrap_or_else(|| {
                let mut direction = vec![0.0; dim];
                direction[0] = 1.0;
                Sampling::Ray { center: 0, direction, from: 0.05, to: 8.0, count: 80 }
            }),
            norm: norm.unwrap_or(true),
        },
        TaskIn::Bounds { tol, constants } => Task::Bounds {
            tol: tol.unwrap_or(1e-12),
            constants: constants.unwrap_or(ConstantsDoc::Auto),
        },
        TaskIn::Perturbation { centers } => Task::Perturbation { centers: centers.unwrap_or_default() },
        TaskIn::Rgflow { scale, coupling, gammas, scheme_scales } => Task::Rgflow {
            scale: scale.unwrap_or(0.0),
            coupling,
            gammas: gammas.unwrap_or_else(|| vec![0.5, 1.0, 2.0, std::f64::consts::E]),
            scheme_scales: scheme_scales.unwrap_or_default(),
        },
        TaskIn::Properties => Task::Properties,
    }
}

/// Parses and validates a scenario document, filling defaults.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let raw: ScenarioIn = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    let dim = match raw.manifold {
        ManifoldDoc::Flat { dim } | ManifoldDoc::Hyperbolic { dim, .. } => dim as usize,
        ManifoldDoc::Sphere { .. } => 2,
    };
    let mu_max = raw.centers.iter().map(|c| c.mu).fold(0.0, f64::max);
    let sc = Scenario {
        units: raw.units,
        manifold: raw.manifold,
        numerics: raw.numerics,
        output: raw.output,
        centers: raw.centers,
        tasks: raw.tasks.into_iter().map(|t| fill(t, dim, mu_max)).collect(),
    };
    sc.validate()?;
    Ok(sc)
}

/// Serializes a scenario with every default spelled out.
pub fn serialize_scenario(sc: &Scenario) -> String {
    toml::to_string(sc).expect("scenario fields are all representable in TOML")
}

fn positive(field: &str, v: f64) -> Result<(), ScenarioError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, "must be positive and finite"))
    }
}

fn check_coords(m: &ManifoldDoc, field: &str, at: &[f64]) -> Result<Point, ScenarioError> {
    let dim = match *m {
        ManifoldDoc::Flat { dim } | ManifoldDoc::Hyperbolic { dim, .. } => dim as usize,
        ManifoldDoc::Sphere { .. } => 2,
    };
    if at.len() != dim {
        return Err(invalid(field, format!("expected {dim} coordinates, got {}", at.len())));
    }
    if at.iter().any(|x| !x.is_finite()) {
        return Err(invalid(field, "coordinates must be finite"));
    }
    match *m {
        ManifoldDoc::Sphere { .. } => {
            if !(0.0..=PI).contains(&at[0]) {
                return Err(invalid(field, "θ ∉ [0, π]"));
            }
            if !(0.0..2.0 * PI).contains(&at[1]) {
                return Err(invalid(field, "φ ∉ [0, 2π)"));
            }
        }
        ManifoldDoc::Hyperbolic { .. } => {
            if !(at[dim - 1] > 0.0) {
                return Err(invalid(field, "half-space height must be > 0"));
            }
        }
        ManifoldDoc::Flat { .. } => {}
    }
    Point::new(at).map_err(|e| invalid(field, e.to_string()))
}

impl Scenario {
    /// Checks every field against its range and the geometry.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if let Units::Physical { hbar, mass } = self.units {
            positive("units.hbar", hbar)?;
            positive("units.mass", mass)?;
        }
        let m = self.manifold.spec()?;
        let q = &self.numerics;
        if !(q.rel_tol > 0.0 && q.rel_tol < 1e-4) {
            return Err(invalid("numerics.rel_tol", "must lie in (0, 1e-4)"));
        }
        positive("numerics.split_time", q.split_time)?;
        if !(q.tail_tol > 0.0 && q.tail_tol < 1.0) {
            return Err(invalid("numerics.tail_tol", "must lie in (0, 1)"));
        }
        if q.max_subdivisions == 0 {
            return Err(invalid("numerics.max_subdivisions", "must be at least 1"));
        }
        positive("numerics.root_tol", q.root_tol)?;
        if self.centers.is_empty() {
            return Err(invalid("centers", "at least one center is required"));
        }
        for (i, c) in self.centers.iter().enumerate() {
            check_coords(&self.manifold, &format!("centers[{i}].at"), &c.at)?;
            positive(&format!("centers[{i}].mu"), c.mu)?;
        }
        let n = self.centers.len();
        self.natural()?;
        if self.tasks.is_empty() {
            return Err(invalid("tasks", "at least one task is required"));
        }
        for (i, t) in self.tasks.iter().enumerate() {
            let f = |k: &str| format!("tasks[{i}].{k}");
            match t {
                Task::Spectrum | Task::Properties => {}
                Task::Eigenbranches { nu_min, nu_max, points } => {
                    positive(&f("nu_min"), *nu_min)?;
                    if !(nu_max > nu_min && nu_max.is_finite()) {
                        return Err(invalid(f("nu_max"), "must exceed nu_min"));
                    }
                    if *points < 2 {
                        return Err(invalid(f("points"), "must be at least 2"));
                    }
                }
                Task::Wavefield { sampling, .. } => match sampling {
                    Sampling::Ray { center, direction, from, to, count } => {
                        if *center >= n {
                            return Err(invalid(f("sampling.center"), format!("no center {center}")));
                        }
                        if direction.len() != m.dim() {
                            return Err(invalid(f("sampling.direction"), format!("expected {} components", m.dim())));
                        }
                        let len = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
                        positive(&f("sampling.direction"), len)?;
                        positive(&f("sampling.from"), *from)?;
                        if !(to > from && to.is_finite()) {
                            return Err(invalid(f("sampling.to"), "must exceed from"));
                        }
                        if m.is_compact() && *to >= m.diameter() {
                            return Err(invalid(f("sampling.to"), "must be below the diameter"));
                        }
                        if *count < 2 {
                            return Err(invalid(f("sampling.count"), "must be at least 2"));
                        }
                    }
                    Sampling::Points { points } => {
                        for (j, p) in points.iter().enumerate() {
                            check_coords(&self.manifold, &f(&format!("sampling.points[{j}]")), p)?;
                        }
                    }
                },
                Task::Bounds { tol, constants } => {
                    if !(*tol > 0.0 && *tol < 1e-2) {
                        return Err(invalid(f("tol"), "must lie in (0, 1e-2)"));
                    }
                    if let ConstantsDoc::Explicit { .. } = constants {
                        constants_from(constants, &m)
                            .map_err(|e| invalid(f("constants"), e.to_string()))?;
                    }
                }
                Task::Perturbation { centers } => {
                    if let Some(&k) = centers.iter().find(|&&k| k >= n) {
                        return Err(invalid(f("centers"), format!("no center {k}")));
                    }
                }
                Task::Rgflow { scale, coupling, gammas, scheme_scales } => {
                    if !(*scale >= 0.0 && scale.is_finite()) {
                        return Err(invalid(f("scale"), "must be non-negative and finite (0 selects e·mu_max)"));
                    }
                    if let Some(c) = coupling {
                        if !c.is_finite() {
                            return Err(invalid(f("coupling"), "must be finite"));
                        }
                    }
                    for (j, g) in gammas.iter().enumerate() {
                        positive(&f(&format!("gammas[{j}]")), *g)?;
                    }
                    for (j, s) in scheme_scales.iter().enumerate() {
                        positive(&f(&format!("scheme_scales[{j}]")), *s)?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Geometry and centers in natural units.
    pub fn natural(&self) -> Result<(ManifoldSpec, CenterSet), ScenarioError> {
        let m = self.manifold.spec()?;
        let mut pts = Vec::with_capacity(self.centers.len());
        for (i, c) in self.centers.iter().enumerate() {
            pts.push(check_coords(&self.manifold, &format!("centers[{i}].at"), &c.at)?);
        }
        let mu = self.centers.iter().map(|c| self.units.to_natural_root(c.mu)).collect();
        let cs = CenterSet::new(&m, pts, mu).map_err(|e| invalid("centers", e.to_string()))?;
        Ok((m, cs))
    }
}

/// Core constants from a scenario table; `Auto` is resolved by the runner.
pub fn constants_from(doc: &ConstantsDoc, m: &ManifoldSpec) -> heatpoint_core::Result<BoundConstants> {
    match *doc {
        ConstantsDoc::Auto => BoundConstants::for_manifold(m),
        ConstantsDoc::Explicit { c2, a, b_eps, c_eps, c_lower, xi, exact } => BoundConstants {
            c2,
            a,
            b_eps,
            c_eps,
            c_lower,
            xi,
            volume: m.volume(),
            exact,
            calibrated: false,
        }
        .validated(),
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
