//! The renormalized principal matrix `Φ(-ν²)`, its ν-derivative and the resolvent
//! difference identity, all as semi-infinite heat-kernel time integrals.

use alloc::vec::Vec;
// unused when std is in the crate graph (dev builds)
#[allow(unused_imports)]
use num_traits::Float;

use crate::manifold::{ManifoldSpec, Point};
use crate::quadrature::{integrate, Integral};
use crate::{Error, Result};

/// Tolerances of the time-integral engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Relative tolerance per entry.
    pub rel_tol: f64,
    /// Boundary between the `t = u²` segment and the logarithmic segment.
    pub split_time: f64,
    /// Neglected tail weight, relative to the integrand scale.
    pub tail_tol: f64,
    /// Bisection budget per segment.
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { rel_tol: 1e-10, split_time: 1.0, tail_tol: 1e-16, max_subdivisions: 60 }
    }
}

impl QuadratureConfig {
    /// Checks positivity and `rel_tol < 1e-4`.
    pub fn validated(self) -> Result<Self> {
        let ok = self.rel_tol > 0.0
            && self.rel_tol < 1e-4
            && self.split_time > 0.0
            && self.tail_tol > 0.0
            && self.tail_tol < 1.0
            && self.max_subdivisions > 0;
        if ok {
            Ok(self)
        } else {
            Err(Error::Domain("quadrature config out of range"))
        }
    }

    /// Same configuration with a different relative tolerance.
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }
}

/// Interaction centers `a_i` with binding scales `μ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterSet {
    points: Vec<Point>,
    mu: Vec<f64>,
}

/// Centers closer than this are treated as coincident.
pub const COINCIDENCE_TOL: f64 = 1e-12;

impl CenterSet {
    /// Validates the points against `m` and rejects coincident centers or `μ ≤ 0`.
    pub fn new(m: &ManifoldSpec, points: Vec<Point>, mu: Vec<f64>) -> Result<CenterSet> {
        if points.is_empty() || points.len() != mu.len() {
            return Err(Error::Domain("need N >= 1 centers, one mu per center"));
        }
        if mu.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::Domain("every mu must be positive"));
        }
        for p in &points {
            m.validate_point(p)?;
        }
        for i in 0..points.len() {
            for j in 0..i {
                if m.distance(&points[i], &points[j]) <= COINCIDENCE_TOL {
                    return Err(Error::CoincidentCenters { i: j, j: i });
                }
            }
        }
        Ok(CenterSet { points, mu })
    }

    /// Number of centers.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Always false; a center set has at least one center.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Center positions.
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Binding scales.
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// `max_i μ_i`.
    pub fn mu_max(&self) -> f64 {
        self.mu.iter().copied().fold(0.0, f64::max)
    }

    /// `min_i μ_i`.
    pub fn mu_min(&self) -> f64 {
        self.mu.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Geodesic distance matrix, row-major.
    pub fn distances(&self, m: &ManifoldSpec) -> Vec<f64> {
        let n = self.len();
        let mut d = alloc::vec![0.0; n * n];
        for i in 0..n {
            for j in 0..i {
                let v = m.distance(&self.points[i], &self.points[j]);
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        d
    }

    /// `min_{i≠j} d_ij`, infinite for a single center.
    pub fn min_distance(&self, m: &ManifoldSpec) -> f64 {
        let n = self.len();
        let mut best = f64::INFINITY;
        for i in 0..n {
            for j in 0..i {
                best = best.min(m.distance(&self.points[i], &self.points[j]));
            }
        }
        best
    }

    /// Natural energy scale `μ_d = 1/d_min`; zero for a single center.
    pub fn mu_d(&self, m: &ManifoldSpec) -> f64 {
        1.0 / self.min_distance(m)
    }

    /// The first `n` centers.
    pub fn leading(&self, n: usize) -> CenterSet {
        CenterSet { points: self.points[..n].to_vec(), mu: self.mu[..n].to_vec() }
    }
}

/// `Φ(-ν²)` as a dense symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalMatrix {
    /// `ν` with `E = -ν²`.
    pub nu: f64,
    n: usize,
    entries: Vec<f64>,
}

impl PrincipalMatrix {
    /// Builds from a row-major square buffer, symmetrizing the off-diagonal pairs.
    pub fn from_row_major(nu: f64, n: usize, mut entries: Vec<f64>) -> PrincipalMatrix {
        assert_eq!(entries.len(), n * n);
        for i in 0..n {
            for j in 0..i {
                let v = 0.5 * (entries[i * n + j] + entries[j * n + i]);
                entries[i * n + j] = v;
                entries[j * n + i] = v;
            }
        }
        PrincipalMatrix { nu, n, entries }
    }

    /// Dimension `N`.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Entry `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Leading `k×k` principal submatrix.
    pub fn leading(&self, k: usize) -> PrincipalMatrix {
        let mut e = Vec::with_capacity(k * k);
        for i in 0..k {
            e.extend_from_slice(&self.entries[i * self.n..i * self.n + k]);
        }
        PrincipalMatrix { nu: self.nu, n: k, entries: e }
    }
}

/// Integrates `f` over `(0, ∞)` for an integrand shaped like `t^p e^{-a/t - b t}`.
///
/// `(0, t_s]` is mapped by `t = u²`, `[t_s, T]` by `t = t_s eˢ`; `T` makes
/// `e^{-a/T - bT}` fall below `tail_tol` relative to the peak, and the peak
/// `√(a/b)` is a breakpoint.
pub(crate) fn time_integral<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    quad: &QuadratureConfig,
) -> Result<Integral> {
    debug_assert!(a >= 0.0 && b > 0.0);
    let l = (1.0 / quad.tail_tol).ln() + 4.0;
    let peak = (a / b).sqrt();
    let s = 2.0 * (a * b).sqrt() + l;
    let t_end = (s + (s * s - 4.0 * a * b).max(0.0).sqrt()) / (2.0 * b);
    let t_split = quad.split_time.min(t_end);

    let mut pts1: Vec<f64> = alloc::vec![0.0];
    if peak > 0.0 && peak < t_split {
        pts1.push(peak.sqrt());
    }
    pts1.push(t_split.sqrt());
    let seg1 = integrate(
        |u: f64| {
            let t = u * u;
            2.0 * u * f(t)
        },
        &pts1,
        quad.rel_tol,
        0.0,
        quad.max_subdivisions,
    )?;
    if t_end <= t_split {
        return Ok(seg1);
    }
    let s_end = (t_end / t_split).ln();
    let mut pts2: Vec<f64> = alloc::vec![0.0];
    if peak > t_split && peak < t_end {
        pts2.push((peak / t_split).ln());
    }
    pts2.push(s_end);
    let seg2 = integrate(
        |s: f64| {
            let t = t_split * s.exp();
            t * f(t)
        },
        &pts2,
        quad.rel_tol,
        0.5 * quad.rel_tol * seg1.value.abs(),
        quad.max_subdivisions,
    )?;
    Ok(Integral {
        value: seg1.value + seg2.value,
        error: seg1.error + seg2.error,
        abs_value: seg1.abs_value + seg2.abs_value,
    })
}

/// `Φ_ii` at `ν = μ + δ` for a homogeneous geometry; `δ` is passed separately so
/// that `ν² - μ² = δ(2μ + δ)` keeps full relative precision for tiny shifts.
pub(crate) fn phi_diag_shifted(m: &ManifoldSpec, mu: f64, delta: f64, quad: &QuadratureConfig) -> Result<f64> {
    if delta == 0.0 {
        return Ok(0.0);
    }
    let nu = mu + delta;
    let diff = delta * (2.0 * mu + delta);
    let mu2 = mu * mu;
    let b = mu2.min(nu * nu) + m.decay_gap();
    let r = time_integral(
        |t| {
            // e^{-tμ²} - e^{-tν²}, factored on the slower exponential
            let bracket = if diff >= 0.0 {
                -(-t * mu2).exp() * (-t * diff).exp_m1()
            } else {
                (-t * nu * nu).exp() * (t * diff).exp_m1()
            };
            m.radial_kernel_fluctuation(t, 0.0) * bracket
        },
        0.0,
        b,
        quad,
    )?;
    let constant = match m.volume() {
        Some(v) => diff / (v * mu2 * nu * nu),
        None => 0.0,
    };
    Ok(r.value + constant)
}

/// `∫ K_t(d) e^{-tν²} dt`, the free resolvent at `E = -ν²` as a function of distance.
pub(crate) fn resolvent_radial(m: &ManifoldSpec, d: f64, nu: f64, quad: &QuadratureConfig) -> Result<f64> {
    let nu2 = nu * nu;
    let r = time_integral(
        |t| m.radial_kernel_fluctuation(t, d) * (-t * nu2).exp(),
        0.25 * d * d,
        nu2 + m.decay_gap(),
        quad,
    )?;
    let constant = match m.volume() {
        Some(v) => 1.0 / (v * nu2),
        None => 0.0,
    };
    Ok(r.value + constant)
}

/// `∂Φ_ij/∂ν = ∫ 2νt K_t(d) e^{-tν²} dt`; `d = 0` gives the diagonal.
pub(crate) fn derivative_radial(m: &ManifoldSpec, d: f64, nu: f64, quad: &QuadratureConfig) -> Result<f64> {
    let nu2 = nu * nu;
    let r = time_integral(
        |t| 2.0 * nu * t * m.radial_kernel_fluctuation(t, d) * (-t * nu2).exp(),
        0.25 * d * d,
        nu2 + m.decay_gap(),
        quad,
    )?;
    let constant = match m.volume() {
        Some(v) => 2.0 / (v * nu2 * nu),
        None => 0.0,
    };
    Ok(r.value + constant)
}

/// `∫ K_t(d) (e^{tE₁} - e^{tE₂}) dt` as one integral; finite at `d = 0`.
pub(crate) fn resolvent_difference_radial(
    m: &ManifoldSpec,
    d: f64,
    e1: f64,
    e2: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    if e1 == e2 {
        return Ok(0.0);
    }
    let (lo, hi) = (-e1.max(e2), -e1.min(e2));
    let sign = if e1 > e2 { 1.0 } else { -1.0 };
    let diff = hi - lo;
    let r = time_integral(
        |t| -m.radial_kernel_fluctuation(t, d) * (-t * lo).exp() * (-t * diff).exp_m1(),
        0.25 * d * d,
        lo + m.decay_gap(),
        quad,
    )?;
    let constant = match m.volume() {
        Some(v) => diff / (v * lo * hi),
        None => 0.0,
    };
    Ok(sign * (r.value + constant))
}

fn check_nu(m: &ManifoldSpec, nu: f64) -> Result<()> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::Domain("nu must be positive"));
    }
    if m.is_compact() && nu <= NU_MIN_COMPACT {
        return Err(Error::Domain("compact geometry needs nu > 1e-6"));
    }
    Ok(())
}

/// Lower cutoff on compact geometries, where `Φ_ii → -∞` as `ν → 0`.
pub const NU_MIN_COMPACT: f64 = 1e-6;

/// `Φ_ii(-ν²) = ∫ K_t(a, a)(e^{-tμ²} - e^{-tν²}) dt`; zero at `ν = μ`, increasing in `ν`.
pub fn phi_diagonal(m: &ManifoldSpec, a: &Point, mu: f64, nu: f64, quad: &QuadratureConfig) -> Result<f64> {
    m.validate_point(a)?;
    check_nu(m, nu)?;
    if !(mu > 0.0) {
        return Err(Error::Domain("mu must be positive"));
    }
    phi_diag_shifted(m, mu, nu - mu, quad)
}

/// `Φ_ij(-ν²) = -∫ K_t(a_i, a_j) e^{-tν²} dt < 0`.
pub fn phi_offdiagonal(
    m: &ManifoldSpec,
    a_i: &Point,
    a_j: &Point,
    nu: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    let d = m.geodesic_distance(a_i, a_j)?;
    if d <= COINCIDENCE_TOL {
        return Err(Error::CoincidentCenters { i: 0, j: 1 });
    }
    check_nu(m, nu)?;
    Ok(-resolvent_radial(m, d, nu, quad)?)
}

/// `∂Φ_ij/∂ν`, strictly positive; `a_i = a_j` gives the diagonal derivative.
pub fn phi_derivative_nu(
    m: &ManifoldSpec,
    a_i: &Point,
    a_j: &Point,
    nu: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    let d = m.geodesic_distance(a_i, a_j)?;
    check_nu(m, nu)?;
    derivative_radial(m, if d <= COINCIDENCE_TOL { 0.0 } else { d }, nu, quad)
}

/// Entry `(i, j)` of `Φ(-ν²)` from precomputed distances.
pub(crate) fn entry(
    m: &ManifoldSpec,
    cs: &CenterSet,
    dist: &[f64],
    i: usize,
    j: usize,
    nu: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    let n = cs.len();
    let r = if i == j {
        phi_diag_shifted(m, cs.mu[i], nu - cs.mu[i], quad)
    } else {
        resolvent_radial(m, dist[i * n + j], nu, quad).map(|v| -v)
    };
    r.map_err(|e| e.at(i, j))
}

/// Entry `(i, j)` of `∂Φ/∂ν`.
pub(crate) fn derivative_entry(
    m: &ManifoldSpec,
    cs: &CenterSet,
    dist: &[f64],
    i: usize,
    j: usize,
    nu: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    let n = cs.len();
    let d = if i == j { 0.0 } else { dist[i * n + j] };
    derivative_radial(m, d, nu, quad).map_err(|e| e.at(i, j))
}

/// Full `Φ(-ν²)`; the upper triangle is evaluated and mirrored.
pub fn assemble(m: &ManifoldSpec, cs: &CenterSet, nu: f64, quad: &QuadratureConfig) -> Result<PrincipalMatrix> {
    check_nu(m, nu)?;
    let dist = cs.distances(m);
    let n = cs.len();
    let mut e = alloc::vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = entry(m, cs, &dist, i, j, nu, quad)?;
            e[i * n + j] = v;
            e[j * n + i] = v;
        }
    }
    Ok(PrincipalMatrix { nu, n, entries: e })
}

/// `∂Φ/∂ν` as a row-major buffer.
pub fn assemble_derivative(m: &ManifoldSpec, cs: &CenterSet, nu: f64, quad: &QuadratureConfig) -> Result<Vec<f64>> {
    check_nu(m, nu)?;
    let dist = cs.distances(m);
    let n = cs.len();
    let mut e = alloc::vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = derivative_entry(m, cs, &dist, i, j, nu, quad)?;
            e[i * n + j] = v;
            e[j * n + i] = v;
        }
    }
    Ok(e)
}

/// `|(Φ_ij(E₂) - Φ_ij(E₁)) - (R₀(E₁) - R₀(E₂))|` where the resolvent difference is
/// integrated directly as one kernel integral rather than as two entries.
///
/// `i = j` is accepted: the resolvent difference is finite on the diagonal.
pub fn resolvent_difference_check(
    m: &ManifoldSpec,
    cs: &CenterSet,
    i: usize,
    j: usize,
    e1: f64,
    e2: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    if !(e1 < 0.0 && e2 < 0.0) {
        return Err(Error::Domain("energies must be negative"));
    }
    if i >= cs.len() || j >= cs.len() {
        return Err(Error::Domain("center index out of range"));
    }
    let dist = cs.distances(m);
    let (nu1, nu2) = ((-e1).sqrt(), (-e2).sqrt());
    check_nu(m, nu1)?;
    check_nu(m, nu2)?;
    let lhs = entry(m, cs, &dist, i, j, nu2, quad)? - entry(m, cs, &dist, i, j, nu1, quad)?;
    let d = if i == j { 0.0 } else { dist[i * cs.len() + j] };
    let rhs = resolvent_difference_radial(m, d, e1, e2, quad).map_err(|e| e.at(i, j))?;
    Ok((lhs - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::k0;
    use core::f64::consts::PI;

    fn q() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn flat_diagonal_closed_forms() {
        let f2 = ManifoldSpec::flat(2).unwrap();
        let f3 = ManifoldSpec::flat(3).unwrap();
        let e = core::f64::consts::E;
        assert!(rel(phi_diag_shifted(&f2, 1.0, e - 1.0, &q()).unwrap(), 1.0 / (2.0 * PI)) < 1e-10);
        assert!(rel(phi_diag_shifted(&f3, 1.0, 1.0, &q()).unwrap(), 1.0 / (4.0 * PI)) < 1e-10);
        assert_eq!(phi_diag_shifted(&f3, 1.3, 0.0, &q()).unwrap(), 0.0);
        // tiny shifts keep relative precision
        let v = phi_diag_shifted(&f3, 1.0, 1e-9, &q()).unwrap();
        assert!(rel(v, 1e-9 / (4.0 * PI)) < 1e-9);
        let v = phi_diag_shifted(&f2, 1.0, 1e-9, &q()).unwrap();
        assert!(rel(v, (1e-9f64).ln_1p() / (2.0 * PI)) < 1e-9);
    }

    #[test]
    fn off_diagonal_closed_forms() {
        let f2 = ManifoldSpec::flat(2).unwrap();
        let f3 = ManifoldSpec::flat(3).unwrap();
        let h3 = ManifoldSpec::hyperbolic(3, 1.0).unwrap();
        assert!(rel(resolvent_radial(&f3, 1.0, 1.0, &q()).unwrap(), (-1.0f64).exp() / (4.0 * PI)) < 1e-10);
        assert!(rel(resolvent_radial(&f2, 1.0, 1.0, &q()).unwrap(), k0(1.0) / (2.0 * PI)) < 1e-10);
        let ex = (-(2.0f64).sqrt()).exp() / (4.0 * PI * 1f64.sinh());
        assert!(rel(resolvent_radial(&h3, 1.0, 1.0, &q()).unwrap(), ex) < 1e-10);
        // far apart and deep
        let ex = (-60.0f64).exp() / (4.0 * PI * 20.0);
        assert!(rel(resolvent_radial(&f3, 20.0, 3.0, &q()).unwrap(), ex) < 1e-10);
    }

    #[test]
    fn derivative_closed_forms() {
        let f2 = ManifoldSpec::flat(2).unwrap();
        let f3 = ManifoldSpec::flat(3).unwrap();
        assert!(rel(derivative_radial(&f3, 0.0, 2.0, &q()).unwrap(), 1.0 / (4.0 * PI)) < 1e-10);
        assert!(rel(derivative_radial(&f2, 0.0, 2.0, &q()).unwrap(), 1.0 / (4.0 * PI)) < 1e-10);
        let ex = (-1.0f64).exp() / (4.0 * PI);
        assert!(rel(derivative_radial(&f3, 1.0, 1.0, &q()).unwrap(), ex) < 1e-10);
    }

    #[test]
    fn assembly_examples() {
        let f3 = ManifoldSpec::flat(3).unwrap();
        let p = |c: &[f64]| Point::new(c).unwrap();
        let cs = CenterSet::new(&f3, alloc::vec![p(&[0., 0., 0.]), p(&[2., 0., 0.])], alloc::vec![1.0, 2.0])
            .unwrap();
        let phi = assemble(&f3, &cs, 2.0, &q()).unwrap();
        assert!(rel(phi.get(0, 0), 1.0 / (4.0 * PI)) < 1e-10);
        assert!(rel(phi.get(0, 1), -(-4.0f64).exp() / (8.0 * PI)) < 1e-10);
        assert_eq!(phi.get(1, 1), 0.0);
        assert_eq!(phi.get(0, 1), phi.get(1, 0));
        let dup = CenterSet::new(&f3, alloc::vec![p(&[0., 0., 0.]), p(&[0., 0., 0.])], alloc::vec![1.0, 1.0]);
        assert!(matches!(dup, Err(Error::CoincidentCenters { .. })));
    }

    #[test]
    fn resolvent_difference_examples() {
        let f3 = ManifoldSpec::flat(3).unwrap();
        let p = |c: &[f64]| Point::new(c).unwrap();
        let cs = CenterSet::new(&f3, alloc::vec![p(&[0., 0., 0.]), p(&[1., 0., 0.])], alloc::vec![1.0, 1.0])
            .unwrap();
        assert!(resolvent_difference_check(&f3, &cs, 0, 1, -1.0, -4.0, &q()).unwrap() <= 1e-9);
        assert_eq!(resolvent_difference_check(&f3, &cs, 0, 1, -2.0, -2.0, &q()).unwrap(), 0.0);
        assert!(resolvent_difference_check(&f3, &cs, 0, 0, -1.0, -4.0, &q()).unwrap() <= 1e-9);
    }
}
