//! Numerical checks of the structural heat-kernel properties: symmetry, positivity,
//! the semigroup law, stochastic completeness, short-time diagonal behaviour, the
//! scaling law and the heat equation itself.

use alloc::vec::Vec;
use core::f64::consts::PI;
// unused when std is in the crate graph (dev builds)
#[allow(unused_imports)]
use num_traits::Float;

use super::{ManifoldSpec, Point};
use crate::quadrature::{gauss_legendre, integrate};

/// Outcome of one property check.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyCheck {
    /// Property name.
    pub name: &'static str,
    /// Worst deviation observed (relative unless stated otherwise).
    pub worst: f64,
    /// Threshold `worst` is compared with.
    pub tol: f64,
    /// `worst ≤ tol`.
    pub pass: bool,
}

fn check(name: &'static str, worst: f64, tol: f64) -> PropertyCheck {
    PropertyCheck { name, worst, tol, pass: worst <= tol }
}

/// Base point used by the sampled checks.
pub fn base_point(m: &ManifoldSpec) -> Point {
    let c: &[f64] = match (m, m.dim()) {
        (ManifoldSpec::FlatEuclidean { .. }, 2) => &[0.25, -0.5],
        (ManifoldSpec::FlatEuclidean { .. }, _) => &[0.25, -0.5, 1.0],
        (ManifoldSpec::Sphere2 { .. }, _) => &[1.0, 2.0],
        (ManifoldSpec::Hyperbolic { .. }, 2) => &[0.3, 1.2],
        (ManifoldSpec::Hyperbolic { .. }, _) => &[0.3, -0.1, 1.2],
    };
    Point::new(c).expect("static coordinates")
}

/// Unit tangent directions used to place sample points.
fn directions(dim: usize) -> Vec<[f64; 3]> {
    (0..6)
        .map(|k| {
            let a = 0.7 + 1.1 * k as f64;
            if dim == 2 {
                [a.cos(), a.sin(), 0.0]
            } else {
                let z = -0.8 + 0.3 * k as f64;
                let s = (1.0 - z * z).sqrt();
                [s * a.cos(), s * a.sin(), z]
            }
        })
        .collect()
}

/// Geodesic radii of the sampled points, scaled to the geometry.
fn radii(m: &ManifoldSpec) -> [f64; 4] {
    let s = match *m {
        ManifoldSpec::Sphere2 { radius } => radius,
        ManifoldSpec::Hyperbolic { kappa, .. } => 1.0 / kappa,
        ManifoldSpec::FlatEuclidean { .. } => 1.0,
    };
    [0.1 * s, 0.4 * s, 0.9 * s, 1.7 * s]
}

fn sample_points(m: &ManifoldSpec) -> Vec<Point> {
    let base = base_point(m);
    let mut out = alloc::vec![base];
    for (i, dir) in directions(m.dim()).iter().enumerate() {
        let r = radii(m)[i % 4];
        out.push(m.exp_map(&base, r, &dir[..m.dim()]));
    }
    out
}

/// Relative deviation of `K_t(x, y)` from `K_t(y, x)` over sampled pairs.
pub fn symmetry(m: &ManifoldSpec) -> PropertyCheck {
    let pts = sample_points(m);
    let mut worst: f64 = 0.0;
    for t in [0.05, 0.5, 2.0] {
        for x in &pts {
            for y in &pts {
                let a = m.heat_kernel(t, x, y).unwrap_or(f64::NAN);
                let b = m.heat_kernel(t, y, x).unwrap_or(f64::NAN);
                let dev = if a == b { 0.0 } else { ((a - b) / a.abs().max(b.abs())).abs() };
                worst = worst.max(if dev.is_nan() { f64::INFINITY } else { dev });
            }
        }
    }
    check("symmetry", worst, 1e-13)
}

/// `1` if some sampled kernel value is not strictly positive, `0` otherwise.
pub fn positivity(m: &ManifoldSpec) -> PropertyCheck {
    let pts = sample_points(m);
    let mut bad = 0.0;
    for t in [1e-3, 0.05, 0.5, 2.0, 20.0] {
        for x in &pts {
            for y in &pts {
                let d = m.distance(x, y);
                // skip values that underflow in double precision
                if d * d / (4.0 * t) > 600.0 {
                    continue;
                }
                let k = m.heat_kernel(t, x, y).unwrap_or(f64::NAN);
                if !(k > 0.0) {
                    bad = 1.0;
                }
            }
        }
    }
    check("positivity", bad, 0.0)
}

fn angular_nodes(dim: usize, n: usize) -> Vec<(f64, f64)> {
    // (cos of the angle to the reference direction, weight) for the normalized
    // average over directions.
    let (x, w) = gauss_legendre(n);
    x.iter()
        .zip(&w)
        .map(|(&xi, &wi)| {
            if dim == 3 {
                (xi, 0.5 * wi)
            } else {
                let phi = 0.5 * PI * (xi + 1.0);
                (phi.cos(), 0.5 * wi)
            }
        })
        .collect()
}

/// `∫ f(z) dvol(z)` for `f` depending on `z` through `r = d(x, z)` and
/// `δ = d(z, y)`, with `d(x, y) = d0`, over the ball `r ≤ r_max`.
fn polar_integral<F: Fn(f64, f64) -> f64>(m: &ManifoldSpec, d0: f64, r_max: f64, f: F) -> f64 {
    let nodes = angular_nodes(m.dim(), 64);
    let r_max = r_max.min(m.diameter());
    let mut pts = alloc::vec![0.0];
    if d0 > 0.0 && d0 < r_max {
        pts.push(d0);
    }
    pts.push(r_max);
    let shell = |r: f64| {
        let mut avg = 0.0;
        for &(c, w) in &nodes {
            avg += w * f(r, m.distance_from_polar(r, d0, c));
        }
        m.sphere_area(r) * avg
    };
    match integrate(shell, &pts, 1e-10, 0.0, 400) {
        Ok(r) => r.value,
        Err(crate::Error::Quadrature { value, .. }) => value,
        Err(_) => f64::NAN,
    }
}

/// Relative error of `∫ K_{t₁}(x, z) K_{t₂}(z, y) dz` against `K_{t₁+t₂}(x, y)`.
///
/// On the sphere the Legendre coefficients multiply exactly; that identity is
/// checked too, next to the numerical convolution.
pub fn semigroup(m: &ManifoldSpec) -> PropertyCheck {
    let s = match *m {
        ManifoldSpec::Sphere2 { radius } => radius,
        ManifoldSpec::Hyperbolic { kappa, .. } => 1.0 / kappa,
        ManifoldSpec::FlatEuclidean { .. } => 1.0,
    };
    let (t1, t2) = (0.2 * s * s, 0.35 * s * s);
    let mut worst: f64 = 0.0;
    for d0 in [0.0, 0.6 * s, 1.5 * s] {
        let r_max = (4.0 * t1 * 45.0).sqrt();
        let conv = polar_integral(m, d0, r_max, |r, delta| {
            m.radial_kernel(t1, r) * m.radial_kernel(t2, delta)
        });
        let want = m.radial_kernel(t1 + t2, d0);
        worst = worst.max(((conv - want) / want).abs());
    }
    if let ManifoldSpec::Sphere2 { radius } = *m {
        let r2 = radius * radius;
        for l in 0..200u32 {
            let ll = (l * (l + 1)) as f64;
            let prod = (-ll * t1 / r2).exp() * (-ll * t2 / r2).exp();
            let direct = (-ll * (t1 + t2) / r2).exp();
            if direct > 0.0 {
                worst = worst.max(((prod - direct) / direct).abs());
            }
        }
    }
    check("semigroup", worst, 1e-5)
}

/// `|∫ K_t(x, y) dy - 1|`.
pub fn stochastic_completeness(m: &ManifoldSpec) -> PropertyCheck {
    let s = match *m {
        ManifoldSpec::Sphere2 { radius } => radius,
        ManifoldSpec::Hyperbolic { kappa, .. } => 1.0 / kappa,
        ManifoldSpec::FlatEuclidean { .. } => 1.0,
    };
    let mut worst: f64 = 0.0;
    for t in [0.01 * s * s, 0.3 * s * s, 2.0 * s * s] {
        let r_max = (4.0 * t * 45.0).sqrt() + 2.0 * t / s;
        let total = polar_integral(m, 0.0, r_max, |r, _| m.radial_kernel(t, r));
        worst = worst.max((total - 1.0).abs());
    }
    check("stochastic completeness", worst, 1e-6)
}

/// `|(4πt)^{D/2} K_t(x, x) - 1|` at `t = 1e-4`.
pub fn short_time_diagonal(m: &ManifoldSpec) -> PropertyCheck {
    let t = 1e-4;
    let k = m.radial_kernel(t, 0.0);
    let v = (4.0 * PI * t).powf(0.5 * m.dim() as f64) * k;
    check("short-time diagonal", (v - 1.0).abs(), 1e-3)
}

/// Relative deviation from `K_t(x, y; g) = α^D K_{α²t}(x, y; α²g)`.
pub fn scaling(m: &ManifoldSpec) -> PropertyCheck {
    let pts = sample_points(m);
    let base = pts[0];
    let dim = m.dim() as i32;
    let mut worst: f64 = 0.0;
    for alpha in [0.5, 2.0, core::f64::consts::E] {
        let ms = m.rescaled(alpha);
        let xb = m.rescale_point(alpha, &base);
        for y in &pts[1..] {
            let ys = m.rescale_point(alpha, y);
            for t in [0.05, 0.7] {
                let a = m.heat_kernel(t, &base, y).unwrap_or(f64::NAN);
                let b = alpha.powi(dim) * ms.heat_kernel(alpha * alpha * t, &xb, &ys).unwrap_or(f64::NAN);
                let dev = ((a - b) / a).abs();
                worst = worst.max(if dev.is_nan() { f64::INFINITY } else { dev });
            }
        }
    }
    check("scaling", worst, 1e-10)
}

/// Relative mismatch between `∂K/∂t` and the radial Laplacian of `K`, both by
/// central differences.
pub fn heat_equation(m: &ManifoldSpec) -> PropertyCheck {
    let s = match *m {
        ManifoldSpec::Sphere2 { radius } => radius,
        ManifoldSpec::Hyperbolic { kappa, .. } => 1.0 / kappa,
        ManifoldSpec::FlatEuclidean { .. } => 1.0,
    };
    let mut worst: f64 = 0.0;
    for &(tf, df) in &[(0.1, 0.3), (0.5, 0.8), (1.0, 1.9), (0.3, 1.2)] {
        let (t, d) = (tf * s * s, df * s);
        let ht = 1e-4 * t;
        let dt = (m.radial_kernel(t + ht, d) - m.radial_kernel(t - ht, d)) / (2.0 * ht);
        let h = 1e-3 * s;
        let (km, k0, kp) = (m.radial_kernel(t, d - h), m.radial_kernel(t, d), m.radial_kernel(t, d + h));
        let lap = (kp - 2.0 * k0 + km) / (h * h) + m.mean_curvature(d) * (kp - km) / (2.0 * h);
        let scale = dt.abs().max(lap.abs()).max(k0 / t);
        worst = worst.max(((dt - lap) / scale).abs());
    }
    check("heat equation", worst, 1e-4)
}

/// Every property check on `m`.
pub fn run_property_suite(m: &ManifoldSpec) -> Vec<PropertyCheck> {
    alloc::vec![
        symmetry(m),
        positivity(m),
        semigroup(m),
        stochastic_completeness(m),
        short_time_diagonal(m),
        scaling(m),
        heat_equation(m),
    ]
}
