//! Ground-state lower bounds: the numerical Geršgorin diagonal-dominance
//! certificate and the closed-form Lambert-W bounds for compact and
//! Cartan–Hadamard geometries.

use alloc::vec::Vec;
use core::f64::consts::PI;
// unused when std is in the crate graph (dev builds)
#[allow(unused_imports)]
use num_traits::Float;

use crate::manifold::ManifoldSpec;
use crate::principal::{CenterSet, QuadratureConfig};
use crate::specfun::lambert_w0;
use crate::spectral::{MuScheme, PhiSource};
use crate::{Error, Result};

/// Heat-kernel envelope constants.
///
/// Compact geometries use `A`, `B(ε)` and the volume; Cartan–Hadamard ones use
/// `C(ε, κ)`, `c` and `ξ = σ₁ + δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    /// Gaussian width constant `C₂ ≥ 2`.
    pub c2: f64,
    /// Regularity constant `A ≥ 1`.
    pub a: f64,
    /// `B(ε)` of the compact upper envelope.
    pub b_eps: f64,
    /// `C(ε, κ)` of the Cartan–Hadamard upper envelope.
    pub c_eps: f64,
    /// `c` of the Cartan–Hadamard diagonal lower envelope.
    pub c_lower: f64,
    /// Spectral shift `ξ = σ₁ + δ ≥ 0`.
    pub xi: f64,
    /// Volume, compact geometries only.
    pub volume: Option<f64>,
    /// Constants read off the exact kernel; allows `C₂ = 2`.
    pub exact: bool,
    /// Constants fitted on a sample grid rather than derived.
    pub calibrated: bool,
}

impl BoundConstants {
    /// Flat space: the Gaussian saturates its own envelope.
    pub fn flat() -> Self {
        BoundConstants {
            c2: 2.0,
            a: 1.0,
            b_eps: 0.0,
            c_eps: 1.0,
            c_lower: 1.0,
            xi: 0.0,
            volume: None,
            exact: true,
            calibrated: false,
        }
    }

    /// ℍ³ with curvature `-κ²`: `d/sinh d ≤ 1` and `e^{-κ²t} ≤ 1` give `C = 1`, and
    /// the diagonal is exactly `(4πt)^{-3/2} e^{-σ₁ t}`.
    pub fn hyperbolic3(kappa: f64) -> Self {
        BoundConstants { xi: kappa * kappa, ..Self::flat() }
    }

    /// Checks the invariants.
    pub fn validated(self) -> Result<Self> {
        if !(self.c2 >= 2.0) || (self.c2 == 2.0 && !self.exact) {
            return Err(Error::Domain("C2 must exceed 2 unless the constants are exact"));
        }
        if !(self.a >= 1.0) {
            return Err(Error::Domain("A must be >= 1"));
        }
        let finite_nonneg = |v: f64| v >= 0.0 && v.is_finite();
        if !(finite_nonneg(self.b_eps) && finite_nonneg(self.c_eps) && finite_nonneg(self.xi)) {
            return Err(Error::Domain("constants must be non-negative"));
        }
        if !(self.c_lower > 0.0) {
            return Err(Error::Domain("c must be positive"));
        }
        if let Some(v) = self.volume {
            if !(v > 0.0) {
                return Err(Error::Domain("volume must be positive"));
            }
        }
        Ok(self)
    }

    /// Exact constants where they exist, calibrated ones otherwise.
    pub fn for_manifold(m: &ManifoldSpec) -> Result<Self> {
        match *m {
            ManifoldSpec::FlatEuclidean { .. } => Ok(Self::flat()),
            ManifoldSpec::Hyperbolic { dim: 3, kappa } => Ok(Self::hyperbolic3(kappa)),
            _ => calibrate(m),
        }
    }
}

/// `C₂` used when calibrating the sphere.
pub const SPHERE_C2: f64 = 2.5;
/// Spectral-shift slack `δ` used when calibrating ℍ².
pub const H2_DELTA: f64 = 0.05;
/// Side of the `(t, d)` calibration grid.
pub const CALIBRATION_GRID: usize = 40;

/// Calibration grid in units of the geometry's length scale `ℓ`:
/// `t ∈ [1e-3, 10]ℓ²`, `d ∈ [1e-3, min(8, diam)]ℓ`, both log-spaced.
pub fn calibration_grid(m: &ManifoldSpec) -> Vec<(f64, f64)> {
    let l = match *m {
        ManifoldSpec::Sphere2 { radius } => radius,
        ManifoldSpec::Hyperbolic { kappa, .. } => 1.0 / kappa,
        ManifoldSpec::FlatEuclidean { .. } => 1.0,
    };
    let n = CALIBRATION_GRID;
    let d_hi = (8.0 * l).min(m.diameter());
    let mut g = Vec::with_capacity(n * n);
    for i in 0..n {
        let t = l * l * 1e-3 * (1e4f64).powf(i as f64 / (n - 1) as f64);
        for j in 0..n {
            let d = 1e-3 * l * (d_hi / (1e-3 * l)).powf(j as f64 / (n - 1) as f64);
            g.push((t, d));
        }
    }
    g
}

/// Fits the envelope constants of the sphere or ℍ² on the calibration grid.
///
/// Sphere: `C₂ = 2.5`, `A = 1`, `B` the smallest value making
/// `4A[1/V + B/t] e^{-d²/2C₂t}` dominate the kernel. ℍ²: `C₂ = 2(1 + δ)`,
/// `ξ = σ₁ + δ`, `C` and `c` the tightest constants on the grid.
pub fn calibrate(m: &ManifoldSpec) -> Result<BoundConstants> {
    let grid = calibration_grid(m);
    let pad = 1.0 + 1e-12;
    match *m {
        ManifoldSpec::Sphere2 { .. } => {
            let v = m.volume().ok_or(Error::Unsupported("sphere without volume"))?;
            let a = 1.0;
            let mut b: f64 = 0.0;
            for &(t, d) in &grid {
                let k = m.radial_kernel(t, d);
                let g = (-d * d / (2.0 * SPHERE_C2 * t)).exp();
                b = b.max((k / (4.0 * a * g) - 1.0 / v) * t);
            }
            Ok(BoundConstants {
                c2: SPHERE_C2,
                a,
                b_eps: b * pad,
                c_eps: 0.0,
                c_lower: 1.0,
                xi: 0.0,
                volume: Some(v),
                exact: false,
                calibrated: true,
            })
        }
        ManifoldSpec::Hyperbolic { dim: 2, .. } => {
            let c2 = 2.0 * (1.0 + H2_DELTA);
            let xi = m.spectral_bottom() + H2_DELTA;
            let mut c_up: f64 = 0.0;
            let mut c_lo = f64::INFINITY;
            for &(t, d) in &grid {
                let k = m.radial_kernel(t, d);
                let env = (-d * d / (2.0 * c2 * t)).exp() / (4.0 * PI * t);
                c_up = c_up.max(k / env);
            }
            for &(t, _) in grid.iter().step_by(CALIBRATION_GRID) {
                let k = m.radial_kernel(t, 0.0);
                c_lo = c_lo.min(k * 4.0 * PI * t * (xi * t).exp());
            }
            Ok(BoundConstants {
                c2,
                a: 1.0,
                b_eps: 0.0,
                c_eps: c_up * pad,
                c_lower: c_lo / pad,
                xi,
                volume: None,
                exact: false,
                calibrated: true,
            })
        }
        _ => Err(Error::Unsupported("exact constants exist for this geometry")),
    }
}

/// Smallest ratio envelope/kernel over the calibration grid; `≥ 1` means the
/// upper envelope dominates everywhere.
pub fn envelope_margin(m: &ManifoldSpec, k: &BoundConstants) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for (t, d) in calibration_grid(m) {
        let env = m.kernel_bound_envelope(crate::manifold::EnvelopeKind::UpperOffdiag, t, d, k)?;
        let kern = m.radial_kernel(t, d);
        if kern > 0.0 {
            worst = worst.min(env / kern);
        }
    }
    Ok(worst)
}

/// How a bound was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMethod {
    /// Bisection on the numerical diagonal-dominance certificate.
    GershgorinNumeric,
    /// Closed form for compact geometries.
    LambertCompact,
    /// Closed form for Cartan–Hadamard geometries.
    LambertCartanHadamard,
}

/// A certified lower bound `E_gr ≥ E_* = -ν_*²`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCertificate {
    /// `ν_*`.
    pub nu_star: f64,
    /// `-ν_*²`.
    pub e_star: f64,
    /// Method.
    pub method: BoundMethod,
    /// Row margins `Φ_ii - Σ_{j≠i}|Φ_ij|` at `ν_*` (numeric method only).
    pub margins: Vec<f64>,
}

/// Diagonal dominance of `Φ(-ν²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GershgorinCheck {
    /// Every row strictly dominant with positive diagonal.
    pub holds: bool,
    /// `Φ_ii - Σ_{j≠i}|Φ_ij|` per row.
    pub margins: Vec<f64>,
}

/// Row margins of `src` at `ν`.
pub fn gershgorin_source<S: PhiSource + ?Sized>(src: &S, nu: f64) -> Result<GershgorinCheck> {
    let phi = src.matrix(nu)?;
    let n = phi.dim();
    let mut margins = Vec::with_capacity(n);
    let mut holds = true;
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| phi.get(i, j).abs()).sum();
        let margin = phi.get(i, i) - off;
        holds &= phi.get(i, i) > 0.0 && margin > 0.0;
        margins.push(margin);
    }
    Ok(GershgorinCheck { holds, margins })
}

/// Strict row diagonal dominance of the μ-scheme `Φ(-ν²)`.
pub fn gershgorin_certificate(
    m: &ManifoldSpec,
    cs: &CenterSet,
    nu: f64,
    quad: &QuadratureConfig,
) -> Result<GershgorinCheck> {
    gershgorin_source(&MuScheme::new(m, cs, *quad), nu)
}

/// Smallest `ν_*` (to relative `tol`) such that dominance holds for all `ν ≥ ν_*`.
///
/// Diagonal entries increase and off-diagonal magnitudes decrease with `ν`, so the
/// certificate is monotone and one bisection suffices. Dominance needs
/// `Φ_ii > 0`, i.e. `ν > μ_i`, so the search starts at `max μ`.
pub fn certified_lower_bound_source<S: PhiSource + ?Sized>(
    src: &S,
    mu_max: f64,
    tol: f64,
) -> Result<BoundCertificate> {
    let mut lo = mu_max;
    let mut hi = 2.0 * src.nu_scale().max(mu_max);
    let cap = 1024.0 * src.nu_scale().max(mu_max);
    let mut top = gershgorin_source(src, hi)?;
    while !top.holds {
        lo = hi;
        hi *= 2.0;
        if hi > cap {
            return Err(Error::NoCertificate);
        }
        top = gershgorin_source(src, hi)?;
    }
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        let c = gershgorin_source(src, mid)?;
        if c.holds {
            hi = mid;
            top = c;
        } else {
            lo = mid;
        }
    }
    Ok(BoundCertificate {
        nu_star: hi,
        e_star: -hi * hi,
        method: BoundMethod::GershgorinNumeric,
        margins: top.margins,
    })
}

/// Numerical certificate for the μ-scheme matrix.
pub fn certified_lower_bound_numeric(
    m: &ManifoldSpec,
    cs: &CenterSet,
    quad: &QuadratureConfig,
    tol: f64,
) -> Result<BoundCertificate> {
    certified_lower_bound_source(&MuScheme::new(m, cs, *quad), cs.mu_max(), tol)
}

/// Geometry class of the closed-form bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManifoldClass {
    /// Compact, `Ric ≥ 0`.
    Compact,
    /// Complete, simply connected, non-positively curved.
    CartanHadamard,
}

impl ManifoldClass {
    /// Class of a supported geometry.
    pub fn of(m: &ManifoldSpec) -> Self {
        if m.is_compact() {
            ManifoldClass::Compact
        } else {
            ManifoldClass::CartanHadamard
        }
    }
}

/// Closed-form lower bound for `n` centers with `μ = max μ_i` and `μ_d = 1/d_min`.
///
/// The formulas are evaluated exactly as stated, including the D = 2
/// Cartan–Hadamard form, which needs `ξ > 0`. A single center has no off-diagonal
/// coupling; its bound is `-μ²` directly.
pub fn analytic_lower_bound(
    class: ManifoldClass,
    dim: usize,
    k: &BoundConstants,
    n: usize,
    mu: f64,
    mu_d: f64,
) -> Result<BoundCertificate> {
    let method = match class {
        ManifoldClass::Compact => BoundMethod::LambertCompact,
        ManifoldClass::CartanHadamard => BoundMethod::LambertCartanHadamard,
    };
    let cert = |e_star: f64| BoundCertificate {
        nu_star: (-e_star).sqrt(),
        e_star,
        method,
        margins: Vec::new(),
    };
    if n == 0 || !(mu > 0.0) {
        return Err(Error::Domain("need n >= 1 and mu > 0"));
    }
    if n == 1 {
        return Ok(cert(-mu * mu));
    }
    if !(mu_d > 0.0 && mu_d.is_finite()) {
        return Err(Error::Domain("mu_d must be positive"));
    }
    let n1 = (n - 1) as f64;
    let s2c = (2.0 * k.c2).sqrt();
    let e = match (class, dim) {
        (ManifoldClass::Compact, 2) => {
            let v = k.volume.ok_or(Error::Domain("compact bound needs the volume"))?;
            let a1 = (-mu / (mu_d * s2c)).exp() / s2c
                * ((1.0 + 1.0 / s2c) / (v * mu_d * mu_d) + 2.0 * s2c * k.b_eps / (4.0 * PI))
                * 4.0
                * k.a
                * PI;
            let w = lambert_w0(n1 * a1)?;
            -mu_d * mu_d * (mu / mu_d + s2c * w).powi(2)
        }
        (ManifoldClass::Compact, 3) => {
            let v = k.volume.ok_or(Error::Domain("compact bound needs the volume"))?;
            let four_pi_32 = (4.0 * PI).powf(1.5);
            let a2 = (-(2.0 / k.c2).sqrt() * mu / mu_d).exp() / (2.0 * PI * k.c2).sqrt()
                * ((1.0 + 1.0 / s2c) / (v * mu_d * mu_d)
                    + (2.0 * PI * k.c2).sqrt() * k.b_eps * mu_d / four_pi_32)
                * 4.0
                * k.a
                * four_pi_32
                / mu_d;
            let w = lambert_w0(n1 * a2)?;
            -mu_d * mu_d * (mu / mu_d + (0.5 * k.c2).sqrt() * w).powi(2)
        }
        (ManifoldClass::CartanHadamard, 2) => {
            if k.xi == 0.0 {
                return Err(Error::DegenerateFormula("ln(xi/(mu^2+xi)) diverges at xi = 0"));
            }
            let arg = 2.0 * n1 * k.c_eps / (k.xi / (mu * mu + k.xi)).ln();
            let w = lambert_w0(arg)?;
            -2.0 * k.c2 * mu_d * mu_d * w * w
        }
        (ManifoldClass::CartanHadamard, 3) => {
            let root = (mu * mu + k.xi).sqrt();
            let a3 = k.c_eps / k.c_lower * (-((2.0 / k.c2) * (mu * mu + k.xi)).sqrt() / mu_d).exp();
            let w = lambert_w0(a3 * n1)?;
            -mu_d * mu_d * (root / mu_d + (0.5 * k.c2).sqrt() * w).powi(2)
        }
        _ => return Err(Error::Domain("dimension must be 2 or 3")),
    };
    Ok(cert(e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{EnvelopeKind, Point};

    fn pair(mu1: f64, mu2: f64, d: f64) -> (ManifoldSpec, CenterSet) {
        let m = ManifoldSpec::flat(3).unwrap();
        let pts = alloc::vec![Point::new(&[0., 0., 0.]).unwrap(), Point::new(&[d, 0., 0.]).unwrap()];
        (m, CenterSet::new(&m, pts, alloc::vec![mu1, mu2]).unwrap())
    }

    #[test]
    fn gershgorin_examples() {
        let q = QuadratureConfig::default();
        let (m, cs) = pair(1.0, 1.0, 1.0);
        let c = gershgorin_certificate(&m, &cs, 2.0, &q).unwrap();
        let want = (1.0 - (-2.0f64).exp()) / (4.0 * PI);
        assert!(c.holds && (c.margins[0] - want).abs() < 1e-12);
        assert!(!gershgorin_certificate(&m, &cs, 1.2, &q).unwrap().holds);
    }

    #[test]
    fn numeric_certificate_is_tight_on_symmetric_pair() {
        let q = QuadratureConfig::default();
        let (m, cs) = pair(1.0, 1.0, 1.0);
        let c = certified_lower_bound_numeric(&m, &cs, &q, 1e-12).unwrap();
        let want = 1.0 + lambert_w0((-1.0f64).exp()).unwrap();
        assert!((c.nu_star - want).abs() < 1e-9, "{}", c.nu_star);
    }

    #[test]
    fn asymmetric_pair_certificate_is_weaker_row() {
        let q = QuadratureConfig::default();
        let (m, cs) = pair(1.0, 2.0, 1.0);
        let c = certified_lower_bound_numeric(&m, &cs, &q, 1e-12).unwrap();
        // the μ = 2 row: ν - 2 = e^{-ν}
        let want = 2.0 + lambert_w0((-2.0f64).exp()).unwrap();
        assert!((c.nu_star - want).abs() < 1e-9, "{}", c.nu_star);
    }

    #[test]
    fn closed_form_examples() {
        let k = BoundConstants::flat();
        let c = analytic_lower_bound(ManifoldClass::CartanHadamard, 3, &k, 1, 1.3, 0.0).unwrap();
        assert_eq!(c.e_star, -1.3 * 1.3);
        let c = analytic_lower_bound(ManifoldClass::CartanHadamard, 3, &k, 2, 1.0, 1.0).unwrap();
        let w = lambert_w0((-1.0f64).exp()).unwrap();
        assert!((c.e_star + (1.0 + w).powi(2)).abs() < 1e-14);
        assert!(matches!(
            analytic_lower_bound(ManifoldClass::CartanHadamard, 2, &k, 2, 1.0, 1.0),
            Err(Error::DegenerateFormula(_))
        ));
    }

    #[test]
    fn envelope_examples() {
        let f3 = ManifoldSpec::flat(3).unwrap();
        let v = f3.kernel_bound_envelope(EnvelopeKind::UpperOffdiag, 1.0, 0.0, &BoundConstants::flat()).unwrap();
        assert!((v - (4.0 * PI).powf(-1.5)).abs() < 1e-17);
        let s = ManifoldSpec::sphere(1.0).unwrap();
        let k = calibrate(&s).unwrap();
        let v = s.kernel_bound_envelope(EnvelopeKind::LowerDiag, 1.0, 0.0, &k).unwrap();
        assert!((v - 1.0 / (4.0 * PI)).abs() < 1e-17);
        let h3 = ManifoldSpec::hyperbolic(3, 1.0).unwrap();
        let v = h3.kernel_bound_envelope(EnvelopeKind::LowerDiag, 1.0, 0.0, &BoundConstants::hyperbolic3(1.0)).unwrap();
        assert!((v - (4.0 * PI).powf(-1.5) * (-1.0f64).exp()).abs() < 1e-17);
    }

    #[test]
    fn calibrated_envelopes_dominate() {
        for m in [ManifoldSpec::sphere(1.0).unwrap(), ManifoldSpec::sphere(2.0).unwrap(), ManifoldSpec::hyperbolic(2, 1.0).unwrap()] {
            let k = BoundConstants::for_manifold(&m).unwrap().validated().unwrap();
            assert!(envelope_margin(&m, &k).unwrap() >= 1.0, "{m:?}");
        }
        for m in [ManifoldSpec::flat(2).unwrap(), ManifoldSpec::flat(3).unwrap(), ManifoldSpec::hyperbolic(3, 0.7).unwrap()] {
            let k = BoundConstants::for_manifold(&m).unwrap();
            assert!(envelope_margin(&m, &k).unwrap() >= 1.0 - 1e-14, "{m:?}");
        }
    }
}
