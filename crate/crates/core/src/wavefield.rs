//! Bound-state wave functions `ψ_k(x) = α Σ_i A_i ∫ e^{-tν²} K_t(a_i, x) dt` with
//! `α = norm_factor^{-1/2}`, their L² norm, decay rates, pointwise envelopes and
//! the cut-off free-energy expectation.

use alloc::vec::Vec;
use core::f64::consts::PI;
// unused when std is in the crate graph (dev builds)
#[allow(unused_imports)]
use num_traits::Float;

use crate::bounds::BoundConstants;
use crate::manifold::{ManifoldSpec, Point};
use crate::principal::{resolvent_radial, CenterSet, QuadratureConfig};
use crate::quadrature::{gauss_legendre, integrate};
use crate::spectral::BoundState;
use crate::{Error, Result};

/// Points closer than this to a center are refused.
pub const AT_CENTER_TOL: f64 = 1e-12;

/// `ψ_k(x)` by direct time quadrature of every center's resolvent.
pub fn evaluate_psi(
    m: &ManifoldSpec,
    cs: &CenterSet,
    bs: &BoundState,
    x: &Point,
    quad: &QuadratureConfig,
) -> Result<f64> {
    m.validate_point(x)?;
    let mut sum = 0.0;
    for (a, &amp) in cs.points().iter().zip(&bs.amplitudes) {
        let d = m.distance(a, x);
        if d < AT_CENTER_TOL {
            return Err(Error::AtCenter);
        }
        sum += amp * resolvent_radial(m, d, bs.nu, quad)?;
    }
    Ok(sum / bs.norm_factor.sqrt())
}

const CHEB_NODES: usize = 16;

/// Chebyshev interpolant of the radial resolvent `R_ν(d)` for one `ν`.
///
/// The log (2D) or `1/d` (3D) singularity is removed first: the table holds
/// `R + ln d / 2π` or `d R`, which are smooth in `ln d` near zero. Below the
/// first node the regular part is held constant.
#[derive(Debug, Clone)]
pub struct ResolventTable {
    dim: usize,
    nu: f64,
    log_lo: f64,
    log_step: f64,
    n_log: usize,
    lin_lo: f64,
    lin_step: f64,
    d_max: f64,
    // CHEB_NODES values per segment, log segments first
    values: Vec<f64>,
    m: ManifoldSpec,
    quad: QuadratureConfig,
}

fn cheb_node(k: usize) -> f64 {
    (PI * (2 * k + 1) as f64 / (2 * CHEB_NODES) as f64).cos()
}

fn cheb_eval(vals: &[f64], x: f64) -> f64 {
    // barycentric form for first-kind nodes
    let (mut num, mut den) = (0.0, 0.0);
    for (k, &v) in vals.iter().enumerate() {
        let xk = cheb_node(k);
        let diff = x - xk;
        if diff == 0.0 {
            return v;
        }
        let s = if k % 2 == 0 { 1.0 } else { -1.0 };
        let w = s * (PI * (2 * k + 1) as f64 / (2 * CHEB_NODES) as f64).sin() / diff;
        num += w * v;
        den += w;
    }
    num / den
}

impl ResolventTable {
    /// Tabulates `R_ν` on `(0, d_max]`.
    pub fn new(m: &ManifoldSpec, nu: f64, d_max: f64, quad: &QuadratureConfig) -> Result<Self> {
        let scale = match *m {
            ManifoldSpec::Sphere2 { radius } => radius,
            ManifoldSpec::Hyperbolic { kappa, .. } => 1.0 / kappa,
            ManifoldSpec::FlatEuclidean { .. } => f64::INFINITY,
        };
        let h = 0.5 * scale.min(1.0 / nu);
        let d_max = d_max.min(m.diameter()).max(h);
        let log_lo = (1e-12 * h).ln();
        let log_hi = h.ln();
        let n_log = 12;
        let log_step = (log_hi - log_lo) / n_log as f64;
        let n_lin = ((d_max - h) / h).ceil().max(1.0) as usize;
        let lin_step = (d_max - h) / n_lin as f64;
        let mut t = ResolventTable {
            dim: m.dim(),
            nu,
            log_lo,
            log_step,
            n_log,
            lin_lo: h,
            lin_step: lin_step.max(f64::MIN_POSITIVE),
            d_max,
            values: Vec::with_capacity((n_log + n_lin) * CHEB_NODES),
            m: *m,
            quad: *quad,
        };
        for s in 0..n_log {
            for k in 0..CHEB_NODES {
                let u = log_lo + log_step * (s as f64 + 0.5 * (cheb_node(k) + 1.0));
                let d = u.exp();
                t.values.push(t.regular(d, resolvent_radial(m, d, nu, quad)?));
            }
        }
        for s in 0..n_lin {
            for k in 0..CHEB_NODES {
                let d = (h + lin_step * (s as f64 + 0.5 * (cheb_node(k) + 1.0))).min(m.diameter());
                t.values.push(t.regular(d, resolvent_radial(m, d, nu, quad)?));
            }
        }
        Ok(t)
    }

    fn regular(&self, d: f64, r: f64) -> f64 {
        if self.dim == 2 {
            r + d.ln() / (2.0 * PI)
        } else {
            d * r
        }
    }

    fn singular_inverse(&self, d: f64, g: f64) -> f64 {
        if self.dim == 2 {
            g - d.ln() / (2.0 * PI)
        } else {
            g / d
        }
    }

    /// `R_ν(d)`; falls back to direct quadrature beyond the tabulated range.
    pub fn eval(&self, d: f64) -> Result<f64> {
        if !(d > 0.0) {
            return Err(Error::AtCenter);
        }
        if d > self.d_max {
            return resolvent_radial(&self.m, d, self.nu, &self.quad);
        }
        let g = if d < self.lin_lo {
            let u = d.ln().max(self.log_lo);
            let pos = ((u - self.log_lo) / self.log_step).min(self.n_log as f64 - 1e-12);
            let s = pos.floor() as usize;
            let x = 2.0 * (pos - s as f64) - 1.0;
            cheb_eval(&self.values[s * CHEB_NODES..(s + 1) * CHEB_NODES], x)
        } else {
            let n_lin = self.values.len() / CHEB_NODES - self.n_log;
            let pos = ((d - self.lin_lo) / self.lin_step).clamp(0.0, n_lin as f64 - 1e-12);
            let s = pos.floor() as usize;
            let x = 2.0 * (pos - s as f64) - 1.0;
            let off = (self.n_log + s) * CHEB_NODES;
            cheb_eval(&self.values[off..off + CHEB_NODES], x)
        };
        Ok(self.singular_inverse(d, g))
    }
}

/// Fast evaluator of one bound state through a resolvent table.
#[derive(Debug, Clone)]
pub struct PsiEvaluator<'a> {
    m: &'a ManifoldSpec,
    cs: &'a CenterSet,
    amplitudes: Vec<f64>,
    alpha: f64,
    table: ResolventTable,
}

impl<'a> PsiEvaluator<'a> {
    /// Tables `R_ν` up to `d_max`.
    pub fn new(
        m: &'a ManifoldSpec,
        cs: &'a CenterSet,
        bs: &BoundState,
        d_max: f64,
        quad: &QuadratureConfig,
    ) -> Result<Self> {
        Ok(PsiEvaluator {
            m,
            cs,
            amplitudes: bs.amplitudes.clone(),
            alpha: 1.0 / bs.norm_factor.sqrt(),
            table: ResolventTable::new(m, bs.nu, d_max, quad)?,
        })
    }

    /// `ψ(x)` and `min_i d(a_i, x)`.
    pub fn psi(&self, x: &Point) -> Result<(f64, f64)> {
        let mut sum = 0.0;
        let mut d_min = f64::INFINITY;
        for (a, &amp) in self.cs.points().iter().zip(&self.amplitudes) {
            let d = self.m.distance(a, x);
            if d < AT_CENTER_TOL {
                return Err(Error::AtCenter);
            }
            d_min = d_min.min(d);
            sum += amp * self.table.eval(d)?;
        }
        Ok((self.alpha * sum, d_min))
    }

    /// `α`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// One wave-function sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    /// Location.
    pub point: Point,
    /// `min_i d(a_i, x)`.
    pub d_min: f64,
    /// `ψ(x)`.
    pub psi: f64,
}

/// How the samples were laid out.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    /// Along the geodesic from center `center` with unit tangent `direction`.
    Ray {
        /// Center index.
        center: usize,
        /// Tangent direction at the center.
        direction: Vec<f64>,
    },
    /// Caller-supplied points.
    Points,
}

/// Samples of one bound state.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    /// The sampled state.
    pub state: BoundState,
    /// Samples, in input order.
    pub samples: Vec<Sample>,
    /// Layout.
    pub grid: GridSpec,
}

/// Furthest distance from a center that the sampling and norm grids visit.
pub fn reach(m: &ManifoldSpec, cs: &CenterSet, nu: f64) -> f64 {
    let spread = cs.distances(m).iter().cloned().fold(0.0, f64::max);
    (spread + 24.0 / nu).min(m.diameter())
}

/// Samples at geodesic radii `radii` from center `center` along `direction`.
pub fn sample_ray(
    m: &ManifoldSpec,
    cs: &CenterSet,
    bs: &BoundState,
    quad: &QuadratureConfig,
    center: usize,
    direction: &[f64],
    radii: &[f64],
) -> Result<WaveField> {
    if center >= cs.len() || direction.len() != m.dim() {
        return Err(Error::Domain("bad ray specification"));
    }
    let r_max = radii.iter().cloned().fold(0.0, f64::max);
    let ev = PsiEvaluator::new(m, cs, bs, reach(m, cs, bs.nu).max(r_max + reach(m, cs, bs.nu)), quad)?;
    let base = cs.points()[center];
    let mut samples = Vec::with_capacity(radii.len());
    for &r in radii {
        let point = m.exp_map(&base, r, direction);
        let (psi, d_min) = ev.psi(&point)?;
        samples.push(Sample { point, d_min, psi });
    }
    Ok(WaveField { state: bs.clone(), samples, grid: GridSpec::Ray { center, direction: direction.to_vec() } })
}

/// Samples at arbitrary points.
pub fn sample_points(
    m: &ManifoldSpec,
    cs: &CenterSet,
    bs: &BoundState,
    quad: &QuadratureConfig,
    points: &[Point],
) -> Result<WaveField> {
    let mut far: f64 = 0.0;
    for p in points {
        m.validate_point(p)?;
        for a in cs.points() {
            far = far.max(m.distance(a, p));
        }
    }
    let ev = PsiEvaluator::new(m, cs, bs, far.max(reach(m, cs, bs.nu)), quad)?;
    let mut samples = Vec::with_capacity(points.len());
    for p in points {
        let (psi, d_min) = ev.psi(p)?;
        samples.push(Sample { point: *p, d_min, psi });
    }
    Ok(WaveField { state: bs.clone(), samples, grid: GridSpec::Points })
}

/// Result of the L² norm quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormReport {
    /// `‖ψ‖₂` on the fine grid.
    pub norm: f64,
    /// `‖ψ‖₂` on the grid with half the angular resolution.
    pub coarse: f64,
    /// Fine and coarse grids agree to `1e-2`.
    pub resolved: bool,
}

fn becke_step(mu: f64) -> f64 {
    let mut p = mu;
    for _ in 0..3 {
        p = 1.5 * p - 0.5 * p * p * p;
    }
    0.5 * (1.0 - p)
}

/// Unit tangent directions with weights summing to one.
fn direction_set(dim: usize, n: usize) -> Vec<([f64; 3], f64)> {
    let mut out = Vec::new();
    if dim == 2 {
        let k = 4 * n;
        for j in 0..k {
            let phi = 2.0 * PI * (j as f64 + 0.5) / k as f64;
            out.push(([phi.cos(), phi.sin(), 0.0], 1.0 / k as f64));
        }
    } else {
        let (x, w) = gauss_legendre(n);
        let k = 2 * n;
        for (&c, &wc) in x.iter().zip(&w) {
            let s = (1.0 - c * c).sqrt();
            for j in 0..k {
                let phi = 2.0 * PI * (j as f64 + 0.5) / k as f64;
                out.push(([s * phi.cos(), s * phi.sin(), c], 0.5 * wc / k as f64));
            }
        }
    }
    out
}

fn norm_squared(
    m: &ManifoldSpec,
    cs: &CenterSet,
    ev: &PsiEvaluator,
    r_max: f64,
    n_ang: usize,
) -> Result<f64> {
    let dirs = direction_set(m.dim(), n_ang);
    let pts = cs.points();
    let n = pts.len();
    let mut pair = alloc::vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            pair[i * n + j] = m.distance(&pts[i], &pts[j]);
        }
    }
    let mut total = 0.0;
    for i in 0..n {
        let shell = |r: f64| -> f64 {
            if r <= 0.0 {
                return 0.0;
            }
            let mut avg = 0.0;
            for (dir, w) in &dirs {
                let x = m.exp_map(&pts[i], r, &dir[..m.dim()]);
                let Ok((psi, _)) = ev.psi(&x) else { continue };
                let weight = if n == 1 {
                    1.0
                } else {
                    let d: Vec<f64> = pts.iter().map(|a| m.distance(a, &x)).collect();
                    let cell = |k: usize| -> f64 {
                        let mut p = 1.0;
                        for l in 0..n {
                            if l != k {
                                p *= becke_step((d[k] - d[l]) / pair[k * n + l]);
                            }
                        }
                        p
                    };
                    let own = cell(i);
                    let all: f64 = (0..n).map(cell).sum();
                    if all > 0.0 { own / all } else { 0.0 }
                };
                avg += w * weight * psi * psi;
            }
            m.sphere_area(r) * avg
        };
        let mut bp = alloc::vec![0.0];
        let mut inner: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| pair[i * n + j]).collect();
        inner.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
        for d in inner {
            if d < r_max && d > *bp.last().unwrap_or(&0.0) {
                bp.push(d);
            }
        }
        bp.push(r_max);
        let v = match integrate(shell, &bp, 1e-8, 1e-14, 200) {
            Ok(r) => r.value,
            Err(Error::Quadrature { value, .. }) => value,
            Err(e) => return Err(e),
        };
        total += v;
    }
    Ok(total)
}

/// `‖ψ‖₂` by Becke fuzzy-cell quadrature.
///
/// Each center owns a smooth cell; its share of `|ψ|²` is integrated in geodesic
/// polar coordinates about the center, which absorbs the integrable singularity
/// into the volume element. The radial range stops where `|ψ|²` has decayed
/// below double precision (or at the antipode on the sphere).
pub fn l2_norm(field: &WaveField, m: &ManifoldSpec, cs: &CenterSet, quad: &QuadratureConfig) -> Result<NormReport> {
    let bs = &field.state;
    let spread = cs.distances(m).iter().cloned().fold(0.0, f64::max);
    let r_max = (spread + 20.0 / bs.nu).min(m.diameter());
    let ev = PsiEvaluator::new(m, cs, bs, r_max + spread, quad)?;
    let n_ang = if m.dim() == 2 { 16 } else { 24 };
    let fine = norm_squared(m, cs, &ev, r_max, n_ang)?.sqrt();
    let coarse = norm_squared(m, cs, &ev, r_max, n_ang / 2)?.sqrt();
    Ok(NormReport { norm: fine, coarse, resolved: ((fine - coarse) / fine).abs() <= 1e-2 })
}

/// Weight `w(d)` making `w |ψ|` a pure exponential for one center, up to
/// corrections of relative order `1/(νd)` in flat 2D.
pub fn decay_weight(m: &ManifoldSpec, d: f64) -> f64 {
    match *m {
        ManifoldSpec::FlatEuclidean { dim: 3 } => d,
        ManifoldSpec::FlatEuclidean { .. } => d.sqrt(),
        ManifoldSpec::Hyperbolic { dim: 3, kappa } => (kappa * d).sinh() / kappa,
        _ => 1.0,
    }
}

/// Least-squares slope of `-ln(w(d)|ψ|)` against `d = d_min` over the samples
/// with `d ∈ [2/ν, 8/ν]`.
pub fn decay_rate_fit(field: &WaveField, m: &ManifoldSpec) -> Result<f64> {
    let nu = field.state.nu;
    let pts: Vec<(f64, f64)> = field
        .samples
        .iter()
        .filter(|s| s.d_min >= 2.0 / nu * (1.0 - 1e-12) && s.d_min <= 8.0 / nu * (1.0 + 1e-12) && s.psi != 0.0)
        .map(|s| (s.d_min, -(decay_weight(m, s.d_min) * s.psi.abs()).ln()))
        .collect();
    let lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().map(|p| p.0).fold(0.0, f64::max);
    if pts.len() < 3 || hi - lo < 5.0 / nu {
        return Err(Error::InsufficientRange);
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}

/// Local singular behaviour of `ψ` at a center, from the samples with
/// `d ∈ [1e-3, 1e-2]`: in 3D the exponent `p` in `ψ ~ d^{-p}`, in 2D the slope of
/// `ψ` against `ln(1/d)` divided by its predicted value `α A_c / 2π`. Both are 1
/// for the expected singularity.
pub fn singularity_fit(field: &WaveField, m: &ManifoldSpec, center: usize) -> Result<f64> {
    let pts: Vec<(f64, f64)> = field
        .samples
        .iter()
        .filter(|s| s.d_min >= 1e-3 * (1.0 - 1e-12) && s.d_min <= 1e-2 * (1.0 + 1e-12))
        .map(|s| {
            if m.dim() == 3 {
                (s.d_min.ln(), -s.psi.abs().ln())
            } else {
                (-s.d_min.ln(), s.psi)
            }
        })
        .collect();
    if pts.len() < 2 {
        return Err(Error::InsufficientRange);
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    if m.dim() == 3 {
        Ok(slope)
    } else {
        let a = field.state.amplitudes[center] / field.state.norm_factor.sqrt();
        Ok(slope / (a / (2.0 * PI)))
    }
}

/// Per-center term of the explicit pointwise envelope (without `α`), at distance
/// `d` for a state with root `ν`. `z = dν/√(2C₂)` and `a = d²/2C₂`.
///
/// The D = 3 Cartan–Hadamard term is `C √(π/a) (4π)^{-3/2} e^{-2z}`, the exact
/// time integral of the Gaussian envelope.
pub fn psi_envelope_term(m: &ManifoldSpec, k: &BoundConstants, nu: f64, d: f64) -> Result<f64> {
    let s2c = (2.0 * k.c2).sqrt();
    let z = d * nu / s2c;
    let a = d * d / (2.0 * k.c2);
    let log_part = |z: f64| ((2.0 * z + 1.0) / (2.0 * z)).ln() + 2.0 / (1.0 + 2.0 * z);
    match (m.is_compact(), m.dim()) {
        (true, dim) => {
            let v = k.volume.or(m.volume()).ok_or(Error::Domain("compact envelope needs V"))?;
            let vol_term = d / (nu * s2c) * (-z).exp() * (1.0 / z + 1.0) / (2.0 * v);
            let b_term = if dim == 2 {
                k.b_eps * (-z).exp() * log_part(z)
            } else {
                k.b_eps * PI.sqrt() * (-2.0 * z).exp() / (2.0 * a.sqrt())
            };
            Ok(8.0 * k.a * (vol_term + b_term))
        }
        (false, 2) => Ok(2.0 * k.c_eps / (4.0 * PI) * (-z).exp() * log_part(z)),
        (false, _) => Ok(k.c_eps * (PI / a).sqrt() * (4.0 * PI).powf(-1.5) * (-2.0 * z).exp()),
    }
}

/// Comparison of `|ψ|` with the pointwise envelope at every sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeReport {
    /// Smallest `envelope / |ψ|` over the samples with `|ψ| > 0`.
    pub worst_ratio: f64,
    /// Samples compared.
    pub checked: usize,
    /// `|ψ| ≤ envelope (1 + 1e-10)` everywhere.
    pub pass: bool,
}

/// Evaluates `α Σ_i term(d(a_i, x))` at each sample and compares it with `|ψ|`.
pub fn pointwise_bound_check(
    field: &WaveField,
    m: &ManifoldSpec,
    cs: &CenterSet,
    k: &BoundConstants,
) -> Result<EnvelopeReport> {
    let alpha = 1.0 / field.state.norm_factor.sqrt();
    let mut worst = f64::INFINITY;
    let mut checked = 0;
    for s in &field.samples {
        let mut env = 0.0;
        for a in cs.points() {
            env += psi_envelope_term(m, k, field.state.nu, m.distance(a, &s.point))?;
        }
        env *= alpha;
        if s.psi != 0.0 {
            worst = worst.min(env / s.psi.abs());
            checked += 1;
        }
    }
    Ok(EnvelopeReport { worst_ratio: worst, checked, pass: worst >= 1.0 - 1e-10 })
}

/// `⟨ψ|H₀|ψ⟩` with the `t₁` integral cut off below at `ε`:
/// `[Σ A_i A_j ∫_ε^∞ e^{-tν²} K_t(a_i, a_j) dt] / norm_factor - ν²`.
///
/// The diagonal terms grow like `ln(1/ε)` in 2D and `ε^{-1/2}` in 3D.
pub fn h0_expectation_cutoff(
    m: &ManifoldSpec,
    cs: &CenterSet,
    bs: &BoundState,
    epsilon: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain("cutoff must be positive"));
    }
    let nu2 = bs.nu * bs.nu;
    let b = nu2 + m.decay_gap();
    let t_end = epsilon.max((quad.tail_tol.recip().ln() + 4.0) / b);
    let y_end = (t_end / epsilon).ln().max(1.0);
    let pts = cs.points();
    let n = pts.len();
    let mut sum = 0.0;
    for i in 0..n {
        for j in i..n {
            let d = m.distance(&pts[i], &pts[j]);
            let f = |y: f64| {
                let t = epsilon * y.exp();
                let k = match m.volume() {
                    Some(v) => m.radial_kernel_fluctuation(t, d) + 1.0 / v,
                    None => m.radial_kernel(t, d),
                };
                t * k * (-t * nu2).exp()
            };
            let mut bp = alloc::vec![0.0];
            let peak = 0.25 * d * d;
            if peak > epsilon && peak < t_end {
                bp.push((peak / epsilon).ln());
            }
            bp.push(y_end);
            let mut v = integrate(f, &bp, quad.rel_tol, 0.0, 4 * quad.max_subdivisions)?.value;
            if let Some(vol) = m.volume() {
                // constant mode beyond the window
                v += (-t_end * nu2).exp() / (vol * nu2);
            }
            let w = bs.amplitudes[i] * bs.amplitudes[j];
            sum += if i == j { w * v } else { 2.0 * w * v };
        }
    }
    Ok(sum / bs.norm_factor - nu2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::solve_spectrum;

    fn single(m: &ManifoldSpec) -> (CenterSet, BoundState) {
        let p = crate::manifold::properties::base_point(m);
        let cs = CenterSet::new(m, alloc::vec![p], alloc::vec![1.0]).unwrap();
        let st = solve_spectrum(m, &cs, &QuadratureConfig::default(), 1e-12).unwrap();
        (cs, st[0].clone())
    }

    #[test]
    fn closed_form_single_center() {
        let q = QuadratureConfig::default();
        let m3 = ManifoldSpec::flat(3).unwrap();
        let (cs, bs) = single(&m3);
        let x = m3.exp_map(&cs.points()[0], 1.0, &[0.0, 0.6, 0.8]);
        let psi = evaluate_psi(&m3, &cs, &bs, &x, &q).unwrap();
        let want = (1.0 / (2.0 * PI)).sqrt() * (-1.0f64).exp();
        assert!((psi - want).abs() < 1e-9 * want, "{psi} {want}");
        let m2 = ManifoldSpec::flat(2).unwrap();
        let (cs, bs) = single(&m2);
        let x = m2.exp_map(&cs.points()[0], 1.0, &[0.6, 0.8]);
        let psi = evaluate_psi(&m2, &cs, &bs, &x, &q).unwrap();
        let want = crate::specfun::k0(1.0) / PI.sqrt();
        assert!((psi - want).abs() < 1e-9 * want, "{psi} {want}");
    }

    #[test]
    fn table_matches_direct_quadrature() {
        let q = QuadratureConfig::default();
        for m in [ManifoldSpec::flat(2).unwrap(), ManifoldSpec::flat(3).unwrap(), ManifoldSpec::sphere(1.0).unwrap(), ManifoldSpec::hyperbolic(3, 1.0).unwrap()] {
            let t = ResolventTable::new(&m, 1.3, 10.0, &q).unwrap();
            for d in [1e-9, 3e-7, 1e-3, 0.07, 0.5, 1.1, 2.9, 7.5] {
                if d > m.diameter() {
                    continue;
                }
                let direct = resolvent_radial(&m, d, 1.3, &q).unwrap();
                let tab = t.eval(d).unwrap();
                assert!((tab - direct).abs() <= 1e-9 * direct.abs().max(1e-300), "{m:?} {d} {tab} {direct}");
            }
        }
    }
}
