//! Task orchestration and artifact emission.
//!
//! Tasks run concurrently on the ambient rayon pool; their artifacts are buffered
//! and written in task order once all have finished, so output bytes do not depend
//! on scheduling. A failing task records its error in the manifest and leaves the
//! other artifacts in place.

use std::f64::consts::E;
use std::fs;
use std::path::PathBuf;
use std::sync::{Mutex, OnceLock};

use anyhow::Context;
use heatpoint_core::bounds::{
    analytic_lower_bound, calibrate, certified_lower_bound_source, BoundConstants, BoundMethod, ManifoldClass,
};
use heatpoint_core::manifold::properties::run_property_suite;
use heatpoint_core::perturb::compare_with_exact;
use heatpoint_core::rgflow::{beta, flow_coupling, scaling_covariance_check, RGState, RgScheme};
use heatpoint_core::spectral::{eigensystem, solve_source, MuScheme, PhiSource};
use heatpoint_core::wavefield::{decay_rate_fit, l2_norm, reach, GridSpec, PsiEvaluator, WaveField};
use heatpoint_core::{BoundState, CenterSet, Error, ManifoldSpec, Point, QuadratureConfig};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::cache::CalibrationCache;
use crate::format::{extension, json_float, json_text, Cell, Table};
use crate::parallel::{psi_at, ParallelMu};
use crate::scenario::{
    constants_from, serialize_scenario, ConstantsDoc, Format, ManifoldDoc, Sampling, Scenario, Task, Units,
};

/// How to run a scenario.
#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Output directory.
    pub out: PathBuf,
    /// Tabular artifact format.
    pub format: Format,
    /// Run only the property suite.
    pub check_only: bool,
    /// Calibration sidecar; `None` keeps calibrations in memory.
    pub cache: Option<PathBuf>,
}

impl RunOptions {
    /// Options taken from the scenario's `[output]` table.
    pub fn from_scenario(sc: &Scenario) -> Self {
        RunOptions { out: PathBuf::from(&sc.output.dir), format: sc.output.format, check_only: false, cache: None }
    }
}

/// Outcome of a run.
#[derive(Debug, Clone)]
pub struct RunReport {
    /// Contents of `manifest.json`.
    pub manifest: Value,
    /// 0 if every task succeeded, 2 otherwise.
    pub exit_code: i32,
}

struct Artifact {
    stem: &'static str,
    tabular: bool,
    body: ArtifactBody,
}

enum ArtifactBody {
    Table(Table),
    Json(Value),
}

struct TaskOutput {
    artifacts: Vec<Artifact>,
    summary: Value,
    // set when the artifacts were produced but report a failed check
    failure: Option<String>,
}

type TaskResult = Result<TaskOutput, String>;

struct Ctx<'a> {
    sc: &'a Scenario,
    m: ManifoldSpec,
    cs: CenterSet,
    q: QuadratureConfig,
    root_tol: f64,
    units: Units,
    spectrum: OnceLock<Result<Vec<BoundState>, String>>,
    cache: Mutex<CalibrationCache>,
}

fn err(e: Error) -> String {
    e.to_string()
}

impl Ctx<'_> {
    fn spectrum(&self) -> Result<&[BoundState], String> {
        self.spectrum
            .get_or_init(|| solve_source(&ParallelMu(MuScheme::new(&self.m, &self.cs, self.q)), self.root_tol).map_err(err))
            .as_deref()
            .map_err(Clone::clone)
    }

    fn coord_names(&self) -> Vec<String> {
        let names: &[&str] = match self.sc.manifold {
            ManifoldDoc::Flat { dim: 2 } | ManifoldDoc::Hyperbolic { dim: 2, .. } => &["x", "y"],
            ManifoldDoc::Flat { .. } => &["x", "y", "z"],
            ManifoldDoc::Sphere { .. } => &["theta", "phi"],
            ManifoldDoc::Hyperbolic { .. } => &["x1", "x2", "y"],
        };
        names.iter().map(|s| s.to_string()).collect()
    }

    fn constants(&self, doc: &ConstantsDoc) -> Result<(BoundConstants, &'static str), String> {
        match doc {
            ConstantsDoc::Explicit { .. } => Ok((constants_from(doc, &self.m).map_err(err)?, "explicit")),
            ConstantsDoc::Auto => match self.m {
                ManifoldSpec::FlatEuclidean { .. } | ManifoldSpec::Hyperbolic { dim: 3, .. } => {
                    Ok((BoundConstants::for_manifold(&self.m).map_err(err)?, "exact"))
                }
                _ => {
                    let key = self.sc.manifold.cache_key();
                    let mut cache = self.cache.lock().map_err(|_| "calibration cache poisoned".to_string())?;
                    if let Some(k) = cache.get(&key) {
                        return Ok((k, "cached"));
                    }
                    let k = calibrate(&self.m).map_err(err)?;
                    cache.put(&key, k).map_err(|e| format!("writing calibration cache: {e}"))?;
                    Ok((k, "calibrated"))
                }
            },
        }
    }
}

fn one(stem: &'static str, tabular: bool, body: ArtifactBody, summary: Value) -> TaskResult {
    Ok(TaskOutput { artifacts: vec![Artifact { stem, tabular, body }], summary, failure: None })
}

fn spectrum_task(ctx: &Ctx) -> TaskResult {
    let states = ctx.spectrum()?;
    let n = ctx.cs.len();
    let mut cols: Vec<String> = ["branch", "nu", "energy", "omega_slope", "norm_factor"].map(String::from).to_vec();
    cols.extend((1..=n).map(|i| format!("amplitude_{i}")));
    let mut t = Table::new(cols);
    for s in states {
        let mut row: Vec<Cell> = vec![
            s.branch.into(),
            ctx.units.root_out(s.nu).into(),
            ctx.units.energy_out(s.energy).into(),
            s.omega_slope.into(),
            s.norm_factor.into(),
        ];
        row.extend(s.amplitudes.iter().map(|&a| Cell::F(a)));
        t.push(row);
    }
    let ground = states.first().map(|s| json_float(ctx.units.energy_out(s.energy))).unwrap_or(Value::Null);
    one("spectrum", true, ArtifactBody::Table(t), json!({ "states": states.len(), "ground_energy": ground }))
}

fn eigenbranches_task(ctx: &Ctx, nu_min: f64, nu_max: f64, points: usize) -> TaskResult {
    let src = MuScheme::new(&ctx.m, &ctx.cs, ctx.q);
    let (a, b) = (ctx.units.to_natural_root(nu_min), ctx.units.to_natural_root(nu_max));
    let grid: Vec<f64> = (0..points).map(|i| a + (b - a) * i as f64 / (points - 1) as f64).collect();
    let rows = grid
        .par_iter()
        .map(|&nu| eigensystem(&src.matrix(nu)?).map(|es| es.eigenvalues))
        .collect::<Result<Vec<_>, Error>>()
        .map_err(err)?;
    let n = ctx.cs.len();
    let mut cols = vec!["nu".to_string()];
    cols.extend((1..=n).map(|k| format!("omega_{k}")));
    let mut t = Table::new(cols);
    for (nu, w) in grid.iter().zip(rows) {
        let mut row = vec![Cell::F(ctx.units.root_out(*nu))];
        row.extend(w.into_iter().map(Cell::F));
        t.push(row);
    }
    one("eigenbranches", true, ArtifactBody::Table(t), json!({ "points": points, "branches": n }))
}

fn wavefield_task(ctx: &Ctx, state: usize, sampling: &Sampling, norm: bool) -> TaskResult {
    let states = ctx.spectrum()?;
    let bs = states.get(state).ok_or_else(|| format!("no bound state {state} ({} found)", states.len()))?;
    let (points, radii, grid) = match sampling {
        Sampling::Ray { center, direction, from, to, count } => {
            let len = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
            let dir: Vec<f64> = direction.iter().map(|x| x / len).collect();
            let base = ctx.cs.points()[*center];
            let radii: Vec<f64> = (0..*count).map(|i| from + (to - from) * i as f64 / (*count - 1) as f64).collect();
            let pts = radii.iter().map(|&r| ctx.m.exp_map(&base, r, &dir)).collect();
            (pts, Some(radii), GridSpec::Ray { center: *center, direction: dir })
        }
        Sampling::Points { points } => {
            let pts = points.iter().map(|p| Point::new(p)).collect::<Result<Vec<_>, _>>().map_err(err)?;
            (pts, None, GridSpec::Points)
        }
    };
    let mut far = reach(&ctx.m, &ctx.cs, bs.nu);
    for p in &points {
        for a in ctx.cs.points() {
            far = far.max(ctx.m.geodesic_distance(a, p).map_err(err)?);
        }
    }
    let ev = PsiEvaluator::new(&ctx.m, &ctx.cs, bs, far, &ctx.q).map_err(err)?;
    let samples = psi_at(&ev, &points).map_err(err)?;
    let field = WaveField { state: bs.clone(), samples, grid };

    let mut cols = Vec::new();
    if radii.is_some() {
        cols.push("r".to_string());
    }
    cols.extend(ctx.coord_names());
    cols.extend(["d_min".to_string(), "psi".to_string()]);
    let mut t = Table::new(cols);
    for (i, s) in field.samples.iter().enumerate() {
        let mut row = Vec::new();
        if let Some(r) = &radii {
            row.push(Cell::F(r[i]));
        }
        row.extend(s.point.coords().iter().map(|&c| Cell::F(c)));
        row.extend([Cell::F(s.d_min), Cell::F(s.psi)]);
        t.push(row);
    }
    let mut summary = json!({
        "state": state,
        "nu": json_float(ctx.units.root_out(bs.nu)),
        "energy": json_float(ctx.units.energy_out(bs.energy)),
    });
    if radii.is_some() {
        summary["decay_rate"] = decay_rate_fit(&field, &ctx.m).map(json_float).unwrap_or(Value::Null);
    }
    if norm {
        let r = l2_norm(&field, &ctx.m, &ctx.cs, &ctx.q).map_err(err)?;
        summary["norm"] = json!({ "norm": json_float(r.norm), "coarse": json_float(r.coarse), "resolved": r.resolved });
    }
    one("wavefield", true, ArtifactBody::Table(t), summary)
}

fn method_name(m: BoundMethod) -> &'static str {
    match m {
        BoundMethod::GershgorinNumeric => "gershgorin",
        BoundMethod::LambertCompact => "lambert-compact",
        BoundMethod::LambertCartanHadamard => "lambert-cartan-hadamard",
    }
}

fn bounds_task(ctx: &Ctx, tol: f64, constants: &ConstantsDoc) -> TaskResult {
    let u = ctx.units;
    let states = ctx.spectrum()?;
    let e_gr = states.first().map(|s| s.energy).ok_or("no bound state to bound")?;
    let slack = 1e-9 * e_gr.abs();
    let src = ParallelMu(MuScheme::new(&ctx.m, &ctx.cs, ctx.q));
    let num = certified_lower_bound_source(&src, ctx.cs.mu_max(), tol).map_err(err)?;
    let num_sound = num.e_star <= e_gr + slack;
    let (k, source) = ctx.constants(constants)?;
    let n = ctx.cs.len();
    let an = analytic_lower_bound(ManifoldClass::of(&ctx.m), ctx.m.dim(), &k, n, ctx.cs.mu_max(), ctx.cs.mu_d(&ctx.m));
    let (analytic, chain) = match an {
        Ok(c) => {
            let sound = c.e_star <= num.e_star + slack;
            let v = json!({
                "method": method_name(c.method),
                "nu_star": json_float(u.root_out(c.nu_star)),
                "e_star": json_float(u.energy_out(c.e_star)),
                "below_numeric": sound,
            });
            (v, sound && num_sound)
        }
        Err(e) => {
            let method = method_name(match ManifoldClass::of(&ctx.m) {
                ManifoldClass::Compact => BoundMethod::LambertCompact,
                ManifoldClass::CartanHadamard => BoundMethod::LambertCartanHadamard,
            });
            (json!({ "method": method, "error": e.to_string() }), num_sound)
        }
    };
    let body = json!({
        "ground_energy": json_float(u.energy_out(e_gr)),
        "numeric": {
            "method": method_name(num.method),
            "nu_star": json_float(u.root_out(num.nu_star)),
            "e_star": json_float(u.energy_out(num.e_star)),
            "margins": num.margins.iter().map(|&x| json_float(x)).collect::<Vec<_>>(),
            "below_ground": num_sound,
        },
        "analytic": analytic,
        "chain_holds": chain,
        "constants": {
            "source": source,
            "c2": json_float(k.c2),
            "a": json_float(k.a),
            "b_eps": json_float(k.b_eps),
            "c_eps": json_float(k.c_eps),
            "c_lower": json_float(k.c_lower),
            "xi": json_float(k.xi),
            "volume": k.volume.map(json_float).unwrap_or(Value::Null),
            "exact": k.exact,
            "calibrated": k.calibrated,
        },
    });
    let summary = json!({ "e_star": body["numeric"]["e_star"].clone(), "chain_holds": chain });
    one("bounds", false, ArtifactBody::Json(body), summary)
}

fn perturbation_task(ctx: &Ctx, centers: &[usize]) -> TaskResult {
    if ctx.cs.len() < 2 {
        return Err("perturbation needs at least two centers".into());
    }
    let u = ctx.units;
    let ks: Vec<usize> = if centers.is_empty() { (0..ctx.cs.len()).collect() } else { centers.to_vec() };
    let reports = ks
        .par_iter()
        .map(|&k| compare_with_exact(&ctx.m, &ctx.cs, k, &ctx.q, ctx.root_tol))
        .collect::<Result<Vec<_>, Error>>()
        .map_err(err)?;
    let entries: Vec<Value> = reports
        .iter()
        .map(|r| {
            json!({
                "center": r.center,
                "branch": r.branch,
                "mu": json_float(u.root_out(r.nu0)),
                "delta_nu": json_float(u.root_out(r.delta_nu)),
                "delta_e": json_float(u.energy_out(r.delta_e)),
                "exact_nu": json_float(u.root_out(r.exact_nu)),
                "exact_delta": json_float(u.root_out(r.exact_delta)),
                "relative_error": json_float(r.relative_error),
                "regime_ratio": json_float(r.regime_ratio),
                "dominance": json_float(r.dominance),
            })
        })
        .collect();
    let worst = reports.iter().map(|r| r.relative_error).fold(0.0, f64::max);
    one(
        "perturbation",
        false,
        ArtifactBody::Json(json!({ "entries": entries })),
        json!({ "worst_relative_error": json_float(worst) }),
    )
}

fn rgflow_task(ctx: &Ctx, scale: f64, coupling: Option<f64>, gammas: &[f64], scheme_scales: &[f64]) -> TaskResult {
    let u = ctx.units;
    let dim = ctx.m.dim();
    let mu_max = ctx.cs.mu_max();
    let m_nat = if scale > 0.0 { u.to_natural_root(scale) } else { E * mu_max };
    let consistent = RGState::scheme_consistent(&ctx.m, &ctx.cs, m_nat, &ctx.q).map_err(err)?;
    let rg = RGState { coupling: coupling.unwrap_or(consistent.coupling), ..consistent.clone() };
    let energy = -mu_max * mu_max;
    let rows = gammas
        .par_iter()
        .map(|&g| -> Result<Vec<Cell>, String> {
            let s = u.root_out(g * m_nat);
            match flow_coupling(dim, rg.coupling, g) {
                Ok(l) => {
                    let cov = scaling_covariance_check(&ctx.m, &ctx.cs, &rg, g, energy, &ctx.q).map_err(err)?;
                    Ok(vec![g.into(), s.into(), l.into(), beta(dim, l).into(), cov.into(), "ok".into()])
                }
                Err(Error::LandauPole { .. }) => {
                    Ok(vec![g.into(), s.into(), f64::NAN.into(), f64::NAN.into(), f64::NAN.into(), "landau-pole".into()])
                }
                Err(e) => Err(err(e)),
            }
        })
        .collect::<Result<Vec<_>, String>>()?;
    let mut t = Table::new(["gamma", "scale", "coupling", "beta", "covariance_residual", "status"]);
    for r in rows {
        t.push(r);
    }
    let mut artifacts = vec![Artifact { stem: "rgflow", tabular: true, body: ArtifactBody::Table(t) }];
    let mut summary = json!({
        "dim": dim,
        "scale": json_float(u.root_out(m_nat)),
        "coupling": json_float(rg.coupling),
        "scheme_consistent_coupling": json_float(consistent.coupling),
    });
    if !scheme_scales.is_empty() {
        let reference = ctx.spectrum()?;
        let mut t = Table::new(["scale", "coupling", "branch", "nu", "mu_scheme_nu", "difference"]);
        let mut worst: f64 = 0.0;
        for &s in scheme_scales {
            let st = RGState::scheme_consistent(&ctx.m, &ctx.cs, u.to_natural_root(s), &ctx.q).map_err(err)?;
            let coupling = st.coupling;
            let roots = solve_source(&RgScheme { m: &ctx.m, cs: &ctx.cs, rg: st, quad: ctx.q }, ctx.root_tol).map_err(err)?;
            if roots.len() != reference.len() {
                return Err(format!("scale {s}: {} roots, expected {}", roots.len(), reference.len()));
            }
            for (a, b) in roots.iter().zip(reference) {
                let diff = u.root_out(a.nu - b.nu);
                worst = worst.max(diff.abs());
                let row = vec![s.into(), coupling.into(), a.branch.into(), u.root_out(a.nu).into(), u.root_out(b.nu).into(), diff.into()];
                t.push(row);
            }
        }
        artifacts.push(Artifact { stem: "rgscheme", tabular: true, body: ArtifactBody::Table(t) });
        summary["max_root_difference"] = json_float(worst);
    }
    Ok(TaskOutput { artifacts, summary, failure: None })
}

fn properties_task(ctx: &Ctx) -> TaskResult {
    let checks = run_property_suite(&ctx.m);
    let body: Vec<Value> = checks
        .iter()
        .map(|c| json!({ "name": c.name, "worst": json_float(c.worst), "tol": json_float(c.tol), "pass": c.pass }))
        .collect();
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
    let mut out = one(
        "properties",
        false,
        ArtifactBody::Json(Value::Array(body)),
        json!({ "checks": checks.len(), "failed": failed }),
    )?;
    if !failed.is_empty() {
        out.failure = Some(format!("property checks failed: {}", failed.join(", ")));
    }
    Ok(out)
}

fn run_task(ctx: &Ctx, t: &Task) -> TaskResult {
    match t {
        Task::Spectrum => spectrum_task(ctx),
        Task::Eigenbranches { nu_min, nu_max, points } => eigenbranches_task(ctx, *nu_min, *nu_max, *points),
        Task::Wavefield { state, sampling, norm } => wavefield_task(ctx, *state, sampling, *norm),
        Task::Bounds { tol, constants } => bounds_task(ctx, *tol, constants),
        Task::Perturbation { centers } => perturbation_task(ctx, centers),
        Task::Rgflow { scale, coupling, gammas, scheme_scales } => {
            rgflow_task(ctx, *scale, *coupling, gammas, scheme_scales)
        }
        Task::Properties => properties_task(ctx),
    }
}

/// Runs every task (or only the property suite) and writes artifacts plus
/// `manifest.json` into `opts.out`.
///
/// Returns `Err` only for process-level failures such as an unwritable directory.
pub fn run(sc: &Scenario, opts: &RunOptions) -> anyhow::Result<RunReport> {
    sc.validate()?;
    let (m, cs) = sc.natural()?;
    let cache = match &opts.cache {
        Some(p) => CalibrationCache::open(p),
        None => CalibrationCache::in_memory(),
    };
    let ctx = Ctx {
        sc,
        m,
        cs,
        q: sc.numerics.quadrature(),
        root_tol: sc.numerics.root_tol,
        units: sc.units,
        spectrum: OnceLock::new(),
        cache: Mutex::new(cache),
    };
    let tasks: Vec<Task> = if opts.check_only { vec![Task::Properties] } else { sc.tasks.clone() };
    let results: Vec<TaskResult> = tasks.par_iter().map(|t| run_task(&ctx, t)).collect();

    fs::create_dir_all(&opts.out).with_context(|| format!("creating {}", opts.out.display()))?;
    let mut seen: Vec<&'static str> = Vec::new();
    let mut entries = Vec::new();
    let mut failed = false;
    for (i, (t, r)) in tasks.iter().zip(&results).enumerate() {
        let mut entry = json!({ "index": i, "kind": t.name() });
        match r {
            Ok(out) => {
                let mut files = Vec::new();
                for a in &out.artifacts {
                    let nth = seen.iter().filter(|&&s| s == a.stem).count();
                    seen.push(a.stem);
                    let ext = if a.tabular { extension(opts.format) } else { "json" };
                    let name =
                        if nth == 0 { format!("{}.{ext}", a.stem) } else { format!("{}-{}.{ext}", a.stem, nth + 1) };
                    let text = match &a.body {
                        ArtifactBody::Table(t) => t.render(opts.format),
                        ArtifactBody::Json(v) => json_text(v),
                    };
                    let path = opts.out.join(&name);
                    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
                    files.push(name);
                }
                match &out.failure {
                    None => entry["status"] = json!("ok"),
                    Some(e) => {
                        failed = true;
                        entry["status"] = json!("failed");
                        entry["error"] = json!(e);
                    }
                }
                entry["files"] = json!(files);
                entry["summary"] = out.summary.clone();
            }
            Err(e) => {
                failed = true;
                entry["status"] = json!("failed");
                entry["error"] = json!(e);
            }
        }
        entries.push(entry);
    }
    let manifest = json!({
        "check_only": opts.check_only,
        "format": extension(opts.format),
        "scenario": serialize_scenario(sc),
        "tasks": entries,
    });
    let path = opts.out.join("manifest.json");
    fs::write(&path, json_text(&manifest)).with_context(|| format!("writing {}", path.display()))?;
    Ok(RunReport { manifest, exit_code: if failed { 2 } else { 0 } })
}
