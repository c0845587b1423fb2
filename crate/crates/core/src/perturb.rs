//! Tunneling-regime perturbation theory around the isolated roots `ν_k = μ_k`.
//!
//! The diagonal of `δΦ` vanishes at `ν = μ_k`, so the first correction is
//! second order in the off-diagonal entries.

use alloc::vec::Vec;
use core::f64::consts::PI;
// unused when std is in the crate graph (dev builds)
#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::solve;
use crate::manifold::ManifoldSpec;
use crate::principal::{phi_diag_shifted, CenterSet, QuadratureConfig};
use crate::spectral::{solve_spectrum, MuScheme};
use crate::{Error, Result};

/// Smallest `min_l |Φ_ll| / max_l |Φ_kl|` accepted as tunneling regime.
pub const REGIME_DOMINANCE: f64 = 1e3;

/// Second-order shift of the root attached to center `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shift {
    /// `δν_k`.
    pub delta_nu: f64,
    /// `min_{l≠k} |Φ_ll(-μ_k²)| / max_{l≠k} |Φ_kl(-μ_k²)|`.
    pub dominance: f64,
}

impl Shift {
    /// Dominance reaches [`REGIME_DOMINANCE`].
    pub fn in_regime(&self) -> bool {
        self.dominance >= REGIME_DOMINANCE
    }
}

fn require_distinct(cs: &CenterSet) -> Result<()> {
    let mu = cs.mu();
    for i in 0..mu.len() {
        for j in i + 1..mu.len() {
            if (mu[i] - mu[j]).abs() <= 1e-12 * mu[i].max(mu[j]) {
                return Err(Error::Degenerate { k: j });
            }
        }
    }
    Ok(())
}

/// `δν_k ≈ (∂Φ_kk/∂ν)⁻¹ Σ_{l≠k} Φ_kl Φ_lk / Φ_ll`, everything at `ν = μ_k`.
pub fn delta_nu(m: &ManifoldSpec, cs: &CenterSet, k: usize, quad: &QuadratureConfig) -> Result<Shift> {
    if k >= cs.len() {
        return Err(Error::Domain("center index out of range"));
    }
    require_distinct(cs)?;
    let src = MuScheme::new(m, cs, *quad);
    let nu = cs.mu()[k];
    let mut sum = 0.0;
    let mut min_diag = f64::INFINITY;
    let mut max_off: f64 = 0.0;
    for l in (0..cs.len()).filter(|&l| l != k) {
        let off = src.entry(k, l, nu)?;
        let diag = src.entry(l, l, nu)?;
        sum += off * off / diag;
        min_diag = min_diag.min(diag.abs());
        max_off = max_off.max(off.abs());
    }
    if cs.len() == 1 {
        return Ok(Shift { delta_nu: 0.0, dominance: f64::INFINITY });
    }
    let slope = src.derivative_entry(k, k, nu)?;
    Ok(Shift { delta_nu: sum / slope, dominance: if max_off > 0.0 { min_diag / max_off } else { f64::INFINITY } })
}

/// Leading tunneling asymptotic of `Φ_ij(-μ_k²)` at separation `d`.
///
/// Flat space: `-e^{-dμ}/(4πd)` in 3D and `-(1/2π)√(π/2dμ) e^{-dμ}` in 2D. ℍ³: the
/// geodesic-spreading factor `1/sinh(κd)` with the rate `√(μ² + κ²)` that carries
/// the kernel's `e^{-κ²t}`. No explicit form exists elsewhere.
pub fn tunneling_offdiag_asymptotic(m: &ManifoldSpec, d: f64, mu_k: f64) -> Result<f64> {
    if !(d > 0.0 && mu_k > 0.0) {
        return Err(Error::Domain("need d > 0 and mu > 0"));
    }
    match *m {
        ManifoldSpec::FlatEuclidean { dim: 2 } => {
            Ok(-(PI / (2.0 * d * mu_k)).sqrt() * (-d * mu_k).exp() / (2.0 * PI))
        }
        ManifoldSpec::FlatEuclidean { .. } => Ok(-(-d * mu_k).exp() / (4.0 * PI * d)),
        ManifoldSpec::Hyperbolic { dim: 3, kappa } => {
            let rate = (mu_k * mu_k + kappa * kappa).sqrt();
            Ok(-kappa * (-d * rate).exp() / (4.0 * PI * (kappa * d).sinh()))
        }
        _ => Err(Error::Unsupported("no explicit geodesic-spreading factor for this geometry")),
    }
}

/// Schur complement `Φ_kk - bᵀ Φ_rest⁻¹ b` at `ν = μ_k + δ`; it vanishes exactly
/// where `det Φ` does (for invertible `Φ_rest`).
fn schur(m: &ManifoldSpec, cs: &CenterSet, src: &MuScheme, k: usize, delta: f64, quad: &QuadratureConfig) -> Result<f64> {
    let mu_k = cs.mu()[k];
    let nu = mu_k + delta;
    let head = phi_diag_shifted(m, mu_k, delta, quad)?;
    let rest: Vec<usize> = (0..cs.len()).filter(|&l| l != k).collect();
    if rest.is_empty() {
        return Ok(head);
    }
    let r = rest.len();
    let mut a = alloc::vec![0.0; r * r];
    let mut b = alloc::vec![0.0; r];
    for (p, &l) in rest.iter().enumerate() {
        b[p] = src.entry(k, l, nu)?;
        for (q, &l2) in rest.iter().enumerate() {
            a[p * r + q] = src.entry(l, l2, nu)?;
        }
    }
    let x = solve(&a, &b).ok_or(Error::Convergence("singular complement block"))?;
    Ok(head - b.iter().zip(&x).map(|(u, v)| u * v).sum::<f64>())
}

/// The exact root shift `ν - μ_k` of `det Φ(-ν²)` near `μ_k`, by bisection in
/// `δ` so that tiny shifts keep full relative precision.
pub fn exact_shift(m: &ManifoldSpec, cs: &CenterSet, k: usize, guess: f64, quad: &QuadratureConfig) -> Result<f64> {
    let src = MuScheme::new(m, cs, *quad);
    let f = |d: f64| schur(m, cs, &src, k, d, quad);
    if cs.len() == 1 {
        return Ok(0.0);
    }
    let f0 = f(0.0)?;
    if f0 == 0.0 {
        return Ok(0.0);
    }
    // the complement increases with δ, so the root lies on the side where f0 < 0
    let dir = if f0 < 0.0 { 1.0 } else { -1.0 };
    let mut step = if guess != 0.0 { 2.0 * guess.abs() } else { 1e-12 * cs.mu()[k] };
    let limit = 0.5 * cs.mu()[k];
    let (mut lo, mut hi) = (0.0, dir * step);
    let mut fh = f(hi)?;
    while fh.signum() == f0.signum() {
        lo = hi;
        step *= 2.0;
        if step > limit {
            return Err(Error::NoBracket { k });
        }
        hi = dir * step;
        fh = f(hi)?;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= 1e-13 * mid.abs() || mid == lo || mid == hi {
            break;
        }
        let fm = f(mid)?;
        if fm.signum() == f0.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Perturbative versus exact root for center `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationReport {
    /// Center index `k`.
    pub center: usize,
    /// Sorted branch whose root was matched to `μ_k`.
    pub branch: usize,
    /// `μ_k`.
    pub nu0: f64,
    /// Perturbative `δν_k`.
    pub delta_nu: f64,
    /// `-2μ_k δν_k`.
    pub delta_e: f64,
    /// Root from the spectrum solver.
    pub exact_nu: f64,
    /// Exact `ν - μ_k` from the determinant.
    pub exact_delta: f64,
    /// `|δν - δν_exact| / |δν_exact|`.
    pub relative_error: f64,
    /// `μ_d² / μ_min²`; small in the tunneling regime.
    pub regime_ratio: f64,
    /// Off-diagonal dominance at `ν = μ_k`.
    pub dominance: f64,
}

/// Runs the solver, matches the root nearest `μ_k` and compares shifts.
pub fn compare_with_exact(
    m: &ManifoldSpec,
    cs: &CenterSet,
    k: usize,
    quad: &QuadratureConfig,
    root_tol: f64,
) -> Result<PerturbationReport> {
    let shift = delta_nu(m, cs, k, quad)?;
    let mu = cs.mu();
    let mu_k = mu[k];
    let gap = mu
        .iter()
        .enumerate()
        .filter(|&(l, _)| l != k)
        .map(|(_, &v)| (v - mu_k).abs())
        .fold(mu_k, f64::min);
    let states = solve_spectrum(m, cs, quad, root_tol)?;
    let matched = states
        .iter()
        .min_by(|a, b| (a.nu - mu_k).abs().total_cmp(&(b.nu - mu_k).abs()))
        .filter(|s| (s.nu - mu_k).abs() < 0.5 * gap)
        .ok_or(Error::NoBracket { k })?;
    let exact_delta = exact_shift(m, cs, k, shift.delta_nu, quad)?;
    let mu_d = cs.mu_d(m);
    Ok(PerturbationReport {
        center: k,
        branch: matched.branch,
        nu0: mu_k,
        delta_nu: shift.delta_nu,
        delta_e: -2.0 * mu_k * shift.delta_nu,
        exact_nu: matched.nu,
        exact_delta,
        relative_error: ((shift.delta_nu - exact_delta) / exact_delta).abs(),
        regime_ratio: mu_d * mu_d / (cs.mu_min() * cs.mu_min()),
        dominance: shift.dominance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::Point;

    fn pair(dim: u8, d: f64) -> (ManifoldSpec, CenterSet) {
        let m = ManifoldSpec::flat(dim).unwrap();
        let (a, b) = if dim == 3 { (alloc::vec![0., 0., 0.], alloc::vec![d, 0., 0.]) } else { (alloc::vec![0., 0.], alloc::vec![d, 0.]) };
        let cs = CenterSet::new(&m, alloc::vec![Point::new(&a).unwrap(), Point::new(&b).unwrap()], alloc::vec![1.0, 2.0]).unwrap();
        (m, cs)
    }

    #[test]
    fn closed_form_shift() {
        let q = QuadratureConfig::default();
        for d in [2.0, 6.0] {
            let (m, cs) = pair(3, d);
            let s = delta_nu(&m, &cs, 1, &q).unwrap();
            let want = (-4.0 * d).exp() / (d * d);
            assert!((s.delta_nu - want).abs() < 1e-9 * want, "{d} {}", s.delta_nu);
        }
    }

    #[test]
    fn degenerate_mu_is_refused() {
        let m = ManifoldSpec::flat(3).unwrap();
        let cs = CenterSet::new(&m, alloc::vec![Point::new(&[0., 0., 0.]).unwrap(), Point::new(&[3., 0., 0.]).unwrap()], alloc::vec![1.0, 1.0]).unwrap();
        assert!(matches!(delta_nu(&m, &cs, 0, &QuadratureConfig::default()), Err(Error::Degenerate { .. })));
    }

    #[test]
    fn asymptotic_examples() {
        let f3 = ManifoldSpec::flat(3).unwrap();
        let v = tunneling_offdiag_asymptotic(&f3, 5.0, 2.0).unwrap();
        assert!((v + (-10.0f64).exp() / (20.0 * PI)).abs() < 1e-20);
        let f2 = ManifoldSpec::flat(2).unwrap();
        let exact = -crate::specfun::k0(10.0) / (2.0 * PI);
        let r = tunneling_offdiag_asymptotic(&f2, 5.0, 2.0).unwrap() / exact;
        assert!((r - 1.0).abs() < 0.04, "{r}");
        assert!(tunneling_offdiag_asymptotic(&ManifoldSpec::sphere(1.0).unwrap(), 1.0, 2.0).is_err());
    }
}
