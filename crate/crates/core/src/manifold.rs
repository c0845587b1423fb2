//! The five supported geometries: flat ℝ² and ℝ³, the round sphere S² and the
//! hyperbolic spaces ℍ² and ℍ³, with geodesic distance, heat kernel, resolvent and
//! the heat-kernel envelopes used by the bound certificates.
//!
//! All five are homogeneous and isotropic, so every kernel is a function of the
//! geodesic distance alone; the `radial_*` methods expose that form.

use core::f64::consts::PI;
// unused when std is in the crate graph (dev builds)
#[allow(unused_imports)]
use num_traits::Float;

use crate::bounds::BoundConstants;
use crate::quadrature::integrate;
use crate::{Error, Result};

pub mod properties;

/// Geometry with its scale parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ManifoldSpec {
    /// Euclidean space of dimension 2 or 3.
    FlatEuclidean {
        /// Dimension.
        dim: u8,
    },
    /// Round two-sphere of radius `radius`.
    Sphere2 {
        /// Radius.
        radius: f64,
    },
    /// Hyperbolic space of dimension 2 or 3 with sectional curvature `-kappa²`.
    Hyperbolic {
        /// Dimension.
        dim: u8,
        /// Curvature scale `κ > 0`.
        kappa: f64,
    },
}

/// Coordinates of a point: Cartesian (flat), `(θ, φ)` (sphere) or upper half-space
/// `(x₁, …, y)` with `y > 0` (hyperbolic).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    c: [f64; 3],
    len: usize,
}

impl Point {
    /// Builds a point from 2 or 3 coordinates.
    pub fn new(coords: &[f64]) -> Result<Point> {
        if !(2..=3).contains(&coords.len()) {
            return Err(Error::InvalidCoordinates("a point has 2 or 3 coordinates"));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCoordinates("coordinates must be finite"));
        }
        let mut c = [0.0; 3];
        c[..coords.len()].copy_from_slice(coords);
        Ok(Point { c, len: coords.len() })
    }

    /// Coordinate slice.
    pub fn coords(&self) -> &[f64] {
        &self.c[..self.len]
    }
}

/// Which heat-kernel envelope to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeKind {
    /// Gaussian upper bound on `K_t(x, y)`.
    UpperOffdiag,
    /// Lower bound on the diagonal `K_t(x, x)`.
    LowerDiag,
}

const H2_TOL: f64 = 1e-13;

impl ManifoldSpec {
    /// Flat `ℝ^dim`.
    pub fn flat(dim: u8) -> Result<Self> {
        ManifoldSpec::FlatEuclidean { dim }.validated()
    }

    /// Sphere of radius `radius`.
    pub fn sphere(radius: f64) -> Result<Self> {
        ManifoldSpec::Sphere2 { radius }.validated()
    }

    /// Hyperbolic `ℍ^dim` with curvature `-kappa²`.
    pub fn hyperbolic(dim: u8, kappa: f64) -> Result<Self> {
        ManifoldSpec::Hyperbolic { dim, kappa }.validated()
    }

    /// Checks dimension and scale parameters.
    pub fn validated(self) -> Result<Self> {
        match self {
            ManifoldSpec::FlatEuclidean { dim } | ManifoldSpec::Hyperbolic { dim, .. }
                if !(2..=3).contains(&dim) =>
            {
                Err(Error::Domain("dimension must be 2 or 3"))
            }
            ManifoldSpec::Sphere2 { radius } if !(radius > 0.0 && radius.is_finite()) => {
                Err(Error::Domain("sphere radius must be positive"))
            }
            ManifoldSpec::Hyperbolic { kappa, .. } if !(kappa > 0.0 && kappa.is_finite()) => {
                Err(Error::Domain("curvature scale must be positive"))
            }
            m => Ok(m),
        }
    }

    /// Dimension `D`.
    pub fn dim(&self) -> usize {
        match *self {
            ManifoldSpec::FlatEuclidean { dim } | ManifoldSpec::Hyperbolic { dim, .. } => {
                dim as usize
            }
            ManifoldSpec::Sphere2 { .. } => 2,
        }
    }

    /// Total volume, finite only for the sphere.
    pub fn volume(&self) -> Option<f64> {
        match *self {
            ManifoldSpec::Sphere2 { radius } => Some(4.0 * PI * radius * radius),
            _ => None,
        }
    }

    /// Bottom of the Laplacian spectrum: `(D-1)²κ²/4` on ℍ^D, zero otherwise.
    pub fn spectral_bottom(&self) -> f64 {
        match *self {
            ManifoldSpec::Hyperbolic { dim, kappa } => {
                let d1 = dim as f64 - 1.0;
                0.25 * d1 * d1 * kappa * kappa
            }
            _ => 0.0,
        }
    }

    /// Exponential decay rate of the kernel at large `t` once the constant mode is
    /// removed: the first nonzero eigenvalue on the sphere, the spectral bottom elsewhere.
    pub fn decay_gap(&self) -> f64 {
        match *self {
            ManifoldSpec::Sphere2 { radius } => 2.0 / (radius * radius),
            _ => self.spectral_bottom(),
        }
    }

    /// True for the compact geometry.
    pub fn is_compact(&self) -> bool {
        matches!(self, ManifoldSpec::Sphere2 { .. })
    }

    /// Largest possible geodesic distance.
    pub fn diameter(&self) -> f64 {
        match *self {
            ManifoldSpec::Sphere2 { radius } => PI * radius,
            _ => f64::INFINITY,
        }
    }

    /// Rejects coordinates that do not describe a point of this geometry.
    pub fn validate_point(&self, p: &Point) -> Result<()> {
        match *self {
            ManifoldSpec::FlatEuclidean { dim } => {
                if p.len != dim as usize {
                    return Err(Error::InvalidCoordinates("coordinate count != dimension"));
                }
            }
            ManifoldSpec::Sphere2 { .. } => {
                if p.len != 2 {
                    return Err(Error::InvalidCoordinates("sphere points are (theta, phi)"));
                }
                if !(0.0..=PI).contains(&p.c[0]) {
                    return Err(Error::InvalidCoordinates("theta not in [0, pi]"));
                }
                if !(0.0..2.0 * PI).contains(&p.c[1]) {
                    return Err(Error::InvalidCoordinates("phi not in [0, 2pi)"));
                }
            }
            ManifoldSpec::Hyperbolic { dim, .. } => {
                if p.len != dim as usize {
                    return Err(Error::InvalidCoordinates("coordinate count != dimension"));
                }
                if !(p.c[p.len - 1] > 0.0) {
                    return Err(Error::InvalidCoordinates("half-space height must be > 0"));
                }
            }
        }
        Ok(())
    }

    /// Geodesic distance between two valid points.
    pub fn geodesic_distance(&self, x: &Point, y: &Point) -> Result<f64> {
        self.validate_point(x)?;
        self.validate_point(y)?;
        Ok(self.distance(x, y))
    }

    pub(crate) fn distance(&self, x: &Point, y: &Point) -> f64 {
        match *self {
            ManifoldSpec::FlatEuclidean { .. } => {
                let mut s = 0.0;
                for k in 0..x.len {
                    s += (x.c[k] - y.c[k]) * (x.c[k] - y.c[k]);
                }
                s.sqrt()
            }
            ManifoldSpec::Sphere2 { radius } => {
                let a = sphere_unit(x);
                let b = sphere_unit(y);
                // atan2 of |a×b| and a·b is accurate at every angle.
                let cr = [
                    a[1] * b[2] - a[2] * b[1],
                    a[2] * b[0] - a[0] * b[2],
                    a[0] * b[1] - a[1] * b[0],
                ];
                let s = (cr[0] * cr[0] + cr[1] * cr[1] + cr[2] * cr[2]).sqrt();
                let c = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
                radius * s.atan2(c)
            }
            ManifoldSpec::Hyperbolic { kappa, .. } => {
                let n = x.len;
                let mut s = 0.0;
                for k in 0..n {
                    s += (x.c[k] - y.c[k]) * (x.c[k] - y.c[k]);
                }
                let h = 0.5 * s.sqrt() / (x.c[n - 1] * y.c[n - 1]).sqrt();
                2.0 * h.asinh() / kappa
            }
        }
    }

    /// Heat kernel `K_t(x, y)`.
    pub fn heat_kernel(&self, t: f64, x: &Point, y: &Point) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain("heat kernel needs t > 0"));
        }
        let d = self.geodesic_distance(x, y)?;
        Ok(self.radial_kernel(t, d))
    }

    /// Heat kernel as a function of time and geodesic distance.
    pub fn radial_kernel(&self, t: f64, d: f64) -> f64 {
        match *self {
            ManifoldSpec::FlatEuclidean { dim } => flat_kernel(dim, t, d),
            ManifoldSpec::Sphere2 { radius } => {
                let r2 = radius * radius;
                sphere_unit_kernel(t / r2, d / radius, false) / r2
            }
            ManifoldSpec::Hyperbolic { dim: 3, kappa } => {
                kappa.powi(3) * h3_unit_kernel(kappa * kappa * t, kappa * d)
            }
            ManifoldSpec::Hyperbolic { kappa, .. } => {
                kappa * kappa * h2_unit_kernel(kappa * kappa * t, kappa * d)
            }
        }
    }

    /// `K_t - 1/V` on the sphere, `K_t` elsewhere; decays like `e^{-gap·t}`.
    pub fn radial_kernel_fluctuation(&self, t: f64, d: f64) -> f64 {
        match *self {
            ManifoldSpec::Sphere2 { radius } => {
                let r2 = radius * radius;
                sphere_unit_kernel(t / r2, d / radius, true) / r2
            }
            _ => self.radial_kernel(t, d),
        }
    }

    /// Free resolvent `R₀(x, y | E) = ∫₀^∞ e^{Et} K_t(x, y) dt` for `E < 0`, `x ≠ y`.
    pub fn free_resolvent(
        &self,
        x: &Point,
        y: &Point,
        e: f64,
        quad: &crate::QuadratureConfig,
    ) -> Result<f64> {
        if !(e < 0.0) {
            return Err(Error::Domain("free resolvent needs E < 0"));
        }
        let d = self.geodesic_distance(x, y)?;
        if d <= 1e-12 {
            return Err(Error::AtCenter);
        }
        crate::principal::resolvent_radial(self, d, (-e).sqrt(), quad)
    }

    /// `K_t(x, x) - (4πt)^{-D/2}`, free of cancellation at small `t`.
    ///
    /// Below `τ = 0.01` the sphere and ℍ² use the short-time expansion
    /// `(4πt)^{-1}(1 ± τ/3 + τ²/15 ± 4τ³/315 + τ⁴/315)`, `τ = t/R²` or `κ²t`,
    /// whose truncation error is below `1e-13` relative to `(4πt)^{-1}`.
    pub fn diagonal_excess(&self, t: f64) -> f64 {
        let series = |tau: f64, sgn: f64| {
            let x = sgn * tau;
            x * (1.0 / 3.0 + x * (1.0 / 15.0 + x * (4.0 / 315.0 + x / 315.0))) / (4.0 * PI * t)
        };
        match *self {
            ManifoldSpec::FlatEuclidean { .. } => 0.0,
            ManifoldSpec::Hyperbolic { dim: 3, kappa } => {
                (4.0 * PI * t).powf(-1.5) * (-kappa * kappa * t).exp_m1()
            }
            ManifoldSpec::Sphere2 { radius } if t / (radius * radius) < 0.01 => {
                series(t / (radius * radius), 1.0)
            }
            ManifoldSpec::Hyperbolic { kappa, .. } if kappa * kappa * t < 0.01 => {
                series(kappa * kappa * t, -1.0)
            }
            _ => self.radial_kernel(t, 0.0) - 1.0 / (4.0 * PI * t),
        }
    }

    /// Heat-kernel envelope of the requested kind with the given constants.
    ///
    /// The sphere uses the compact-manifold forms, flat and hyperbolic spaces the
    /// Cartan–Hadamard forms.
    pub fn kernel_bound_envelope(
        &self,
        kind: EnvelopeKind,
        t: f64,
        d: f64,
        k: &BoundConstants,
    ) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain("envelope needs t > 0"));
        }
        if !(d >= 0.0) {
            return Err(Error::Domain("envelope needs d >= 0"));
        }
        if k.c2 < 2.0 {
            return Err(Error::Domain("C2 must be >= 2"));
        }
        let dm = self.dim() as f64;
        let heat = (4.0 * PI * t).powf(-0.5 * dm);
        let gauss = (-d * d / (2.0 * k.c2 * t)).exp();
        match (self.is_compact(), kind) {
            (true, EnvelopeKind::UpperOffdiag) => {
                let v = self.volume().ok_or(Error::Unsupported("compact envelope needs V"))?;
                Ok(4.0 * k.a * (1.0 / v + k.b_eps * t.powf(-0.5 * dm)) * gauss)
            }
            (true, EnvelopeKind::LowerDiag) => Ok(heat),
            (false, EnvelopeKind::UpperOffdiag) => Ok(k.c_eps * heat * gauss),
            (false, EnvelopeKind::LowerDiag) => Ok(k.c_lower * heat * (-k.xi * t).exp()),
        }
    }

    /// The same geometry with metric `α²g`; distances scale by `α`.
    pub fn rescaled(&self, alpha: f64) -> ManifoldSpec {
        match *self {
            ManifoldSpec::FlatEuclidean { dim } => ManifoldSpec::FlatEuclidean { dim },
            ManifoldSpec::Sphere2 { radius } => ManifoldSpec::Sphere2 { radius: alpha * radius },
            ManifoldSpec::Hyperbolic { dim, kappa } => {
                ManifoldSpec::Hyperbolic { dim, kappa: kappa / alpha }
            }
        }
    }

    /// Image of `p` under the identification used by [`ManifoldSpec::rescaled`]:
    /// flat coordinates are multiplied by `α`, other charts are unchanged.
    pub fn rescale_point(&self, alpha: f64, p: &Point) -> Point {
        match self {
            ManifoldSpec::FlatEuclidean { .. } => {
                let mut q = *p;
                for v in q.c.iter_mut() {
                    *v *= alpha;
                }
                q
            }
            _ => *p,
        }
    }

    /// Distance from `y` of the point at geodesic distance `r` from `x`, whose
    /// initial direction makes angle `acos(cos_angle)` with the geodesic to `y`;
    /// `d0 = d(x, y)`.
    pub fn distance_from_polar(&self, r: f64, d0: f64, cos_angle: f64) -> f64 {
        match *self {
            ManifoldSpec::FlatEuclidean { .. } => {
                (r * r + d0 * d0 - 2.0 * r * d0 * cos_angle).max(0.0).sqrt()
            }
            ManifoldSpec::Sphere2 { radius } => {
                let (a, b) = (r / radius, d0 / radius);
                // haversine form
                let h = ((a - b) * 0.5).sin().powi(2)
                    + a.sin() * b.sin() * 0.5 * (1.0 - cos_angle);
                2.0 * radius * h.clamp(0.0, 1.0).sqrt().asin()
            }
            ManifoldSpec::Hyperbolic { kappa, .. } => {
                let (a, b) = (kappa * r, kappa * d0);
                // cosh δ - 1 = cosh(a-b) - 1 + sinh a sinh b (1 - cos)
                let h = 2.0 * ((a - b) * 0.5).sinh().powi(2)
                    + a.sinh() * b.sinh() * (1.0 - cos_angle);
                let s = (0.5 * h.max(0.0)).sqrt();
                2.0 * s.asinh() / kappa
            }
        }
    }

    /// Area (length in 2D) of the geodesic sphere of radius `r`.
    pub fn sphere_area(&self, r: f64) -> f64 {
        match *self {
            ManifoldSpec::FlatEuclidean { dim: 2 } => 2.0 * PI * r,
            ManifoldSpec::FlatEuclidean { .. } => 4.0 * PI * r * r,
            ManifoldSpec::Sphere2 { radius } => 2.0 * PI * radius * (r / radius).sin(),
            ManifoldSpec::Hyperbolic { dim: 2, kappa } => 2.0 * PI * (kappa * r).sinh() / kappa,
            ManifoldSpec::Hyperbolic { kappa, .. } => {
                let s = (kappa * r).sinh() / kappa;
                4.0 * PI * s * s
            }
        }
    }

    /// `A'(r)/A(r)`: the radial part of the Laplacian of a radial function is
    /// `f'' + (A'/A) f'`.
    pub fn mean_curvature(&self, r: f64) -> f64 {
        match *self {
            ManifoldSpec::FlatEuclidean { dim } => (dim as f64 - 1.0) / r,
            ManifoldSpec::Sphere2 { radius } => 1.0 / ((r / radius).tan() * radius),
            ManifoldSpec::Hyperbolic { dim, kappa } => {
                (dim as f64 - 1.0) * kappa / (kappa * r).tanh()
            }
        }
    }

    /// Point at geodesic distance `r` from `base` along the unit direction `dir`,
    /// expressed in an orthonormal frame of the tangent space at `base`.
    ///
    /// Frames: the coordinate axes (flat), `(e_θ, e_φ)` (sphere, fixed axes at the
    /// poles) and the orthonormalised half-space axes (hyperbolic).
    pub fn exp_map(&self, base: &Point, r: f64, dir: &[f64]) -> Point {
        match *self {
            ManifoldSpec::FlatEuclidean { dim } => {
                let mut q = *base;
                for k in 0..dim as usize {
                    q.c[k] += r * dir[k];
                }
                q
            }
            ManifoldSpec::Sphere2 { radius } => {
                let n = sphere_unit(base);
                let (theta, phi) = (base.c[0], base.c[1]);
                let (e1, e2) = if theta.sin() < 1e-12 {
                    let s = if theta < 1.0 { 1.0 } else { -1.0 };
                    ([s, 0.0, 0.0], [0.0, 1.0, 0.0])
                } else {
                    (
                        [theta.cos() * phi.cos(), theta.cos() * phi.sin(), -theta.sin()],
                        [-phi.sin(), phi.cos(), 0.0],
                    )
                };
                let a = r / radius;
                let (ca, sa) = (a.cos(), a.sin());
                let mut v = [0.0; 3];
                for k in 0..3 {
                    v[k] = ca * n[k] + sa * (dir[0] * e1[k] + dir[1] * e2[k]);
                }
                let th = (v[0] * v[0] + v[1] * v[1]).sqrt().atan2(v[2]);
                let mut ph = v[1].atan2(v[0]);
                if ph < 0.0 {
                    ph += 2.0 * PI;
                }
                if ph >= 2.0 * PI {
                    ph = 0.0;
                }
                Point { c: [th, ph, 0.0], len: 2 }
            }
            ManifoldSpec::Hyperbolic { dim, kappa } => {
                let n = dim as usize;
                let x = to_hyperboloid(base);
                let frame = hyperboloid_frame(&x, n);
                let a = kappa * r;
                let (ch, sh) = (a.cosh(), a.sinh());
                let mut v = [0.0; 4];
                for k in 0..=n {
                    let mut t = 0.0;
                    for (j, e) in frame.iter().take(n).enumerate() {
                        t += dir[j] * e[k];
                    }
                    v[k] = ch * x[k] + sh * t;
                }
                from_hyperboloid(&v, n)
            }
        }
    }
}

fn sphere_unit(p: &Point) -> [f64; 3] {
    let (t, f) = (p.c[0], p.c[1]);
    [t.sin() * f.cos(), t.sin() * f.sin(), t.cos()]
}

// Hyperboloid model in ℝ^{n,1}: index 0 is timelike, 1..n-1 carry x, n carries the
// height direction, for the unit-curvature chart.
fn to_hyperboloid(p: &Point) -> [f64; 4] {
    let n = p.len;
    let y = p.c[n - 1];
    let mut s = y * y;
    for k in 0..n - 1 {
        s += p.c[k] * p.c[k];
    }
    let mut out = [0.0; 4];
    out[0] = (1.0 + s) / (2.0 * y);
    for k in 0..n - 1 {
        out[k + 1] = p.c[k] / y;
    }
    out[n] = (1.0 - s) / (2.0 * y);
    out
}

fn from_hyperboloid(v: &[f64; 4], n: usize) -> Point {
    let y = 1.0 / (v[0] + v[n]);
    let mut c = [0.0; 3];
    for k in 0..n - 1 {
        c[k] = v[k + 1] * y;
    }
    c[n - 1] = y;
    Point { c, len: n }
}

fn minkowski(a: &[f64; 4], b: &[f64; 4], n: usize) -> f64 {
    let mut s = -a[0] * b[0];
    for k in 1..=n {
        s += a[k] * b[k];
    }
    s
}

fn hyperboloid_frame(x: &[f64; 4], n: usize) -> [[f64; 4]; 3] {
    let mut frame = [[0.0; 4]; 3];
    // The half-space axes map to tangent vectors: x-directions to e_k and the height
    // direction to the opposite of the radial one; Gram–Schmidt makes them orthonormal.
    for j in 0..n {
        let mut v = [0.0; 4];
        v[j + 1] = 1.0;
        if j == n - 1 {
            v[n] = -1.0;
        }
        let px = minkowski(&v, x, n);
        for k in 0..=n {
            v[k] += px * x[k];
        }
        for e in frame.iter().take(j) {
            let c = minkowski(&v, e, n);
            for k in 0..=n {
                v[k] -= c * e[k];
            }
        }
        let nrm = minkowski(&v, &v, n).sqrt();
        for k in 0..=n {
            v[k] /= nrm;
        }
        frame[j] = v;
    }
    frame
}

fn flat_kernel(dim: u8, t: f64, d: f64) -> f64 {
    let g = (-d * d / (4.0 * t)).exp();
    if dim == 2 {
        g / (4.0 * PI * t)
    } else {
        g / (4.0 * PI * t).powf(1.5)
    }
}

fn h3_unit_kernel(t: f64, d: f64) -> f64 {
    let ratio = if d < 1e-6 { 1.0 - d * d / 6.0 } else { d / d.sinh() };
    ratio * (-t - d * d / (4.0 * t)).exp() / (4.0 * PI * t).powf(1.5)
}

// sinh(x)/x
fn sinhc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 + x * x / 6.0
    } else {
        x.sinh() / x
    }
}

fn h2_unit_kernel(t: f64, d: f64) -> f64 {
    // s = d + w²; cosh s - cosh d = 2 sinh(d + w²/2) sinh(w²/2).
    let l = 50.0;
    let w2max = (-d + (d * d + 4.0 * t * l).sqrt()).min(2.0 * l + 40.0);
    let wmax = w2max.sqrt();
    let f = |w: f64| {
        let w2 = w * w;
        let s = d + w2;
        let den = 2.0 * (d + 0.5 * w2).sinh() * 0.5 * sinhc(0.5 * w2);
        if den <= 0.0 {
            return 0.0;
        }
        2.0 * s * (-(2.0 * d * w2 + w2 * w2) / (4.0 * t)).exp() / den.sqrt()
    };
    let j = match integrate(f, &[0.0, 0.25 * wmax, wmax], H2_TOL, 0.0, 200) {
        Ok(r) => r.value,
        Err(Error::Quadrature { value, .. }) => value,
        Err(_) => f64::NAN,
    };
    core::f64::consts::SQRT_2 * (-0.25 * t - d * d / (4.0 * t)).exp() * j
        / (4.0 * PI * t).powf(1.5)
}

/// Below this `t/R²` the sphere kernel uses the image-sum integral; above it the
/// Legendre series, which needs few terms there and has no cancellation problem.
pub const SPHERE_SERIES_TAU: f64 = 0.5;

// Unit sphere, τ < SPHERE_SERIES_TAU:
// K = √2 e^{τ/4} (4πτ)^{-3/2} ∫_θ^π g(s) ds / √(cos θ - cos s),
// g(s) = Σ_n (-1)ⁿ (s + 2πn) e^{-(s+2πn)²/4τ}.
// With h = π - θ and s = θ + h sin²(φ/2) both endpoint singularities disappear:
// ds/√(cos θ - cos s) = √h cos(φ/2) dφ / √(sin(θ + h sin²(φ/2)/2) · sinc(h sin²(φ/2)/2)).
fn sphere_unit_kernel_images(tau: f64, theta: f64) -> f64 {
    let h = PI - theta;
    if h <= 0.0 {
        // antipode: limit of the integral as θ → π
        return sphere_unit_kernel_images(tau, PI * (1.0 - 1e-12));
    }
    let g = |s: f64| {
        let mut acc = 0.0;
        for n in -3i32..=3 {
            let a = s + 2.0 * PI * n as f64;
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            // (a² - θ²) with the n = 0 difference formed exactly
            let ex = if n == 0 { (s - theta) * (s + theta) } else { a * a - theta * theta };
            let arg = ex / (4.0 * tau);
            // beyond e^{-60} relative to the peak the image is invisible
            if arg < 60.0 {
                acc += sign * a * (-arg).exp();
            }
        }
        acc
    };
    let f = |phi: f64| {
        let sn = (0.5 * phi).sin();
        let c = (0.5 * phi).cos();
        let b = 0.5 * h * sn * sn;
        let s = theta + h * sn * sn;
        // sin(θ + b) = sin(h - b); take the form without cancellation
        let sin_a = if theta + b > 0.5 * PI { (h - b).sin() } else { (theta + b).sin() };
        let sinc_b = if b < 1e-4 { 1.0 - b * b / 6.0 } else { b.sin() / b };
        let den = sin_a * sinc_b;
        if den <= 0.0 {
            return 0.0;
        }
        g(s) * h.sqrt() * c / den.sqrt()
    };
    // breakpoints where s - θ reaches a few multiples of the Gaussian width
    let width = (2.0 * tau / theta.max(1e-300)).min(2.0 * tau.sqrt());
    let mut pts = alloc::vec![0.0];
    for mult in [1.0, 8.0, 40.0] {
        let r = mult * width / h;
        if r < 0.5 {
            pts.push(2.0 * r.sqrt().asin());
        }
    }
    pts.push(PI);
    let j = match integrate(f, &pts, H2_TOL, 0.0, 300) {
        Ok(r) => r.value,
        Err(Error::Quadrature { value, .. }) => value,
        Err(_) => f64::NAN,
    };
    core::f64::consts::SQRT_2 * (0.25 * tau - theta * theta / (4.0 * tau)).exp() * j
        / (4.0 * PI * tau).powf(1.5)
}

fn sphere_unit_kernel(tau: f64, theta: f64, fluct: bool) -> f64 {
    let inv_v = 1.0 / (4.0 * PI);
    if tau < SPHERE_SERIES_TAU {
        let k = sphere_unit_kernel_images(tau, theta);
        return if fluct { k - inv_v } else { k };
    }
    let x = theta.cos();
    let mut leg = crate::specfun::Legendre::new(x);
    let mut sum = 0.0;
    let mut weight_sum = 0.0;
    let l_peak = (0.5 / tau).sqrt();
    let mut l: u32 = 0;
    loop {
        let lf = l as f64;
        let c = (2.0 * lf + 1.0) * (-lf * (lf + 1.0) * tau).exp();
        let p = leg.next_value();
        if l > 0 || !fluct {
            sum += c * p;
        }
        weight_sum += c;
        if lf > l_peak && c < 1e-17 * weight_sum {
            break;
        }
        l += 1;
        if l > 10_000 {
            break;
        }
    }
    sum * inv_v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[f64]) -> Point {
        Point::new(c).unwrap()
    }

    #[test]
    fn distance_examples() {
        let f3 = ManifoldSpec::flat(3).unwrap();
        assert_eq!(f3.geodesic_distance(&p(&[0., 0., 0.]), &p(&[3., 4., 0.])).unwrap(), 5.0);
        let s = ManifoldSpec::sphere(1.0).unwrap();
        let d = s.geodesic_distance(&p(&[0.0, 0.0]), &p(&[PI, 0.0])).unwrap();
        assert!((d - PI).abs() < 1e-15);
        let h = ManifoldSpec::hyperbolic(2, 1.0).unwrap();
        let d = h.geodesic_distance(&p(&[0.0, 1.0]), &p(&[0.0, core::f64::consts::E])).unwrap();
        assert!((d - 1.0).abs() < 1e-15);
    }

    #[test]
    fn coordinate_validation() {
        let s = ManifoldSpec::sphere(1.0).unwrap();
        assert!(s.validate_point(&p(&[4.0, 0.0])).is_err());
        let h = ManifoldSpec::hyperbolic(3, 1.0).unwrap();
        assert!(h.validate_point(&p(&[0.0, 0.0, -1.0])).is_err());
        assert!(ManifoldSpec::flat(4).is_err());
        assert!(ManifoldSpec::sphere(0.0).is_err());
    }

    #[test]
    fn kernel_examples() {
        let f2 = ManifoldSpec::flat(2).unwrap();
        assert!((f2.radial_kernel(1.0, 0.0) - 1.0 / (4.0 * PI)).abs() < 1e-16);
        let h3 = ManifoldSpec::hyperbolic(3, 1.0).unwrap();
        let v = h3.radial_kernel(1.0, 1.0);
        let exact = (4.0 * PI).powf(-1.5) / 1f64.sinh() * (-1.25f64).exp();
        assert!(((v - exact) / exact).abs() < 1e-14);
        let s = ManifoldSpec::sphere(1.0).unwrap();
        assert!((s.radial_kernel(200.0, 1.3) - 1.0 / (4.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn h2_kernel_reference() {
        // 30-digit McKean integral.
        let h2 = ManifoldSpec::hyperbolic(2, 1.0).unwrap();
        for &(t, d, v) in H2_REF {
            let k = h2.radial_kernel(t, d);
            assert!(((k - v) / v).abs() < 1e-10, "t={t} d={d}: {k} vs {v}");
        }
    }

    #[test]
    fn sphere_kernel_reference() {
        // 30-digit Legendre series; covers both evaluation routes and the deep tail.
        let s = ManifoldSpec::sphere(1.0).unwrap();
        for &(t, d, v) in S2_REF {
            let k = s.radial_kernel(t, d);
            assert!(((k - v) / v).abs() < 1e-10, "t={t} d={d}: {k} vs {v}");
        }
    }

    #[test]
    fn exp_map_moves_by_r() {
        let dir2 = [0.6, 0.8];
        let dir3 = [0.48, 0.6, 0.64];
        let cases = [
            (ManifoldSpec::flat(2).unwrap(), p(&[0.3, -1.0])),
            (ManifoldSpec::flat(3).unwrap(), p(&[0.3, -1.0, 2.0])),
            (ManifoldSpec::sphere(2.0).unwrap(), p(&[1.0, 2.0])),
            (ManifoldSpec::sphere(1.0).unwrap(), p(&[0.0, 0.0])),
            (ManifoldSpec::hyperbolic(2, 1.5).unwrap(), p(&[0.3, 0.7])),
            (ManifoldSpec::hyperbolic(3, 0.5).unwrap(), p(&[0.3, -0.2, 2.0])),
        ];
        for (m, base) in cases {
            let dir: &[f64] = if m.dim() == 2 { &dir2 } else { &dir3 };
            for r in [0.01, 0.5, 1.7] {
                let q = m.exp_map(&base, r, dir);
                m.validate_point(&q).unwrap();
                let d = m.distance(&base, &q);
                assert!((d - r).abs() < 1e-12, "{m:?} r={r} d={d}");
            }
            // Orthogonal directions: the law of cosines reproduces the distance.
            let (u, w): (&[f64], &[f64]) =
                if m.dim() == 2 { (&[1.0, 0.0], &[0.0, 1.0]) } else { (&[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]) };
            let a = m.exp_map(&base, 0.8, u);
            let b = m.exp_map(&base, 1.1, w);
            let direct = m.distance(&a, &b);
            let polar = m.distance_from_polar(0.8, 1.1, 0.0);
            assert!((direct - polar).abs() < 1e-12, "{m:?}");
        }
    }

    const H2_REF: &[(f64, f64, f64)] = &[
        (0.01, 0.05, 7.4491917482604255),
        (0.1, 0.5, 0.40365459509409944),
        (1.0, 1.0, 0.041491183957822217),
        (5.0, 3.0, 0.0012810148307919896),
        (0.5, 0.0, 0.13505600024041982),
        (20.0, 2.0, 1.0299851530394368e-5),
        (2.0, 8.0, 5.6252317248943872e-7),
    ];
    const S2_REF: &[(f64, f64, f64)] = &[
        (5e-6, 0.0, 15915.520835039907),
        (5e-6, 0.005, 4559.88256352376),
        (9.9e-6, 0.003, 6404.0307550719768),
        (1e-4, 0.0, 795.80124181385187),
        (1e-4, 0.02, 292.7686751103901),
        (2e-5, 0.01, 1139.9834656691012),
        (0.01, 0.3, 0.84790055373297615),
        (0.1, 1.0, 0.073678126173750647),
        (1.0, 2.5, 0.054149490734986549),
        (0.3, 3.14159, 0.00077889014240589928),
        (0.05, 1.5707963267948966, 8.9050583948934302e-6),
        (0.2, PI, 2.2845005301029841e-5),
        (0.49, PI, 0.0094956921993692485),
        (0.51, 2.0, 0.03981133137539889),
        (0.05, 2.9, 3.1317236329883727e-18),
        (0.02, 0.0, 4.0055059106803164),
    ];
}
