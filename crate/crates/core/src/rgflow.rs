//! Renormalization-group form of the principal matrix: a single scale `M`, a
//! renormalized coupling and per-center offsets `Σ_i`, with the exact β functions
//! and coupling flows in two and three dimensions.
//!
//! `Φ^R_ii(-ν²) = C - ∫[K_t(a_i, a_i) e^{-tν²} - e^{-M²t}(4πt)^{-D/2}] dt - Σ_i`
//! with `C = 1/λ_R` (D = 2) or `M/λ̂_R` (D = 3); off-diagonal entries are those of
//! the μ-scheme.

use alloc::vec::Vec;
use core::f64::consts::PI;
// unused when std is in the crate graph (dev builds)
#[allow(unused_imports)]
use num_traits::Float;

use crate::manifold::ManifoldSpec;
use crate::principal::{
    assemble_derivative, phi_diag_shifted, resolvent_radial, time_integral, CenterSet, PrincipalMatrix,
    QuadratureConfig,
};
use crate::spectral::{default_nu_floor, PhiSource};
use crate::{Error, Result};

/// Scale, coupling and offsets of the renormalized matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RGState {
    /// Dimension, 2 or 3.
    pub dim: usize,
    /// Renormalization scale `M > 0`.
    pub scale: f64,
    /// `λ_R(M)` in 2D, the dimensionless `λ̂_R(M) = M λ_R(M)` in 3D.
    pub coupling: f64,
    /// `Σ_i`, with `Σ_1 = 0`.
    pub sigma: Vec<f64>,
}

impl RGState {
    /// `1/λ_R` or `M/λ̂_R`.
    pub fn leading(&self) -> f64 {
        if self.dim == 2 {
            1.0 / self.coupling
        } else {
            self.scale / self.coupling
        }
    }

    /// The state whose `Φ^R_ii(-μ_i²)` vanish at scale `M`: the coupling is fixed by
    /// center 1 and the offsets by [`sigma_offsets`].
    pub fn scheme_consistent(m: &ManifoldSpec, cs: &CenterSet, scale: f64, quad: &QuadratureConfig) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::Domain("scale M must be positive"));
        }
        let dim = m.dim();
        let c = counterterm_integral(m, cs.mu()[0], scale, quad)?;
        if c == 0.0 {
            return Err(Error::Domain("coupling is infinite at this scale"));
        }
        let coupling = if dim == 2 { 1.0 / c } else { scale / c };
        Ok(RGState { dim, scale, coupling, sigma: sigma_offsets(m, cs, quad)? })
    }

    /// The same physics described at scale `γM`.
    pub fn flowed(&self, gamma: f64) -> Result<Self> {
        Ok(RGState {
            dim: self.dim,
            scale: gamma * self.scale,
            coupling: flow_coupling(self.dim, self.coupling, gamma)?,
            sigma: self.sigma.clone(),
        })
    }
}

/// `∫[K_t(x, x) e^{-tν²} - e^{-M²t}(4πt)^{-D/2}] dt`, split into the curvature
/// excess `∫ (K_t(x, x) - (4πt)^{-D/2}) e^{-tν²}` and the flat difference
/// `∫ (4πt)^{-D/2}(e^{-tν²} - e^{-tM²})`, both by quadrature.
pub fn counterterm_integral(m: &ManifoldSpec, nu: f64, scale: f64, quad: &QuadratureConfig) -> Result<f64> {
    if !(nu > 0.0 && scale > 0.0) {
        return Err(Error::Domain("need nu > 0 and M > 0"));
    }
    let half_d = 0.5 * m.dim() as f64;
    let nu2 = nu * nu;
    let m2 = scale * scale;
    let excess = match m {
        ManifoldSpec::FlatEuclidean { .. } => 0.0,
        _ => time_integral(|t| m.diagonal_excess(t) * (-t * nu2).exp(), 0.0, nu2, quad)?.value,
    };
    let diff = m2 - nu2;
    let flat = if diff == 0.0 {
        0.0
    } else {
        time_integral(
            |t| {
                // e^{-tν²} - e^{-tM²} on the slower exponential
                let bracket = if diff > 0.0 { -(-t * nu2).exp() * (-t * diff).exp_m1() } else { (-t * m2).exp() * (t * diff).exp_m1() };
                (4.0 * PI * t).powf(-half_d) * bracket
            },
            0.0,
            nu2.min(m2),
            quad,
        )?
        .value
    };
    Ok(excess + flat)
}

/// `Σ_i = ∫ K_t(a_i, a_i)(e^{-tμ₁²} - e^{-tμ_i²}) dt`.
pub fn sigma_offsets(m: &ManifoldSpec, cs: &CenterSet, quad: &QuadratureConfig) -> Result<Vec<f64>> {
    let mu = cs.mu();
    mu.iter().map(|&mi| phi_diag_shifted(m, mu[0], mi - mu[0], quad)).collect()
}

/// `Φ^R(-ν²)`.
pub fn renormalized_phi(
    m: &ManifoldSpec,
    cs: &CenterSet,
    rg: &RGState,
    nu: f64,
    quad: &QuadratureConfig,
) -> Result<PrincipalMatrix> {
    if rg.dim != m.dim() || rg.sigma.len() != cs.len() {
        return Err(Error::Domain("renormalization state does not match the configuration"));
    }
    let n = cs.len();
    let dist = cs.distances(m);
    let diag = rg.leading() - counterterm_integral(m, nu, rg.scale, quad)?;
    let mut e = alloc::vec![0.0; n * n];
    for i in 0..n {
        e[i * n + i] = diag - rg.sigma[i];
        for j in i + 1..n {
            let v = -resolvent_radial(m, dist[i * n + j], nu, quad).map_err(|e| e.at(i, j))?;
            e[i * n + j] = v;
            e[j * n + i] = v;
        }
    }
    Ok(PrincipalMatrix::from_row_major(nu, n, e))
}

/// `β(λ_R) = -λ_R²/2π` (D = 2) or `β(λ̂) = λ̂ - λ̂²/4π` (D = 3).
pub fn beta(dim: usize, coupling: f64) -> f64 {
    if dim == 2 {
        -coupling * coupling / (2.0 * PI)
    } else {
        coupling - coupling * coupling / (4.0 * PI)
    }
}

/// Coupling at `γM` from the coupling at `M`.
///
/// A zero of the denominator between 1 and `γ` is a Landau pole and is reported,
/// never crossed.
pub fn flow_coupling(dim: usize, coupling: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::Domain("gamma must be positive"));
    }
    let between = |p: f64| (p - 1.0) * (gamma - p) >= 0.0 && p != 1.0;
    if dim == 2 {
        let den = 1.0 + coupling * gamma.ln() / (2.0 * PI);
        if coupling != 0.0 {
            let pole = (-2.0 * PI / coupling).exp();
            if between(pole) || den == 0.0 {
                return Err(Error::LandauPole { gamma_pole: pole });
            }
        }
        Ok(coupling / den)
    } else {
        let den = 1.0 - coupling * (1.0 - gamma) / (4.0 * PI);
        if coupling != 0.0 {
            let pole = 1.0 - 4.0 * PI / coupling;
            if (pole > 0.0 && between(pole)) || den == 0.0 {
                return Err(Error::LandauPole { gamma_pole: pole });
            }
        }
        Ok(gamma * coupling / den)
    }
}

/// `γ dλ/dγ` at `γ = 1` by central differences of the flow with step `h`.
pub fn beta_from_flow(dim: usize, coupling: f64, h: f64) -> Result<f64> {
    let up = flow_coupling(dim, coupling, 1.0 + h)?;
    let down = flow_coupling(dim, coupling, 1.0 - h)?;
    Ok((up - down) / (2.0 * h))
}

/// Relative residual `max |Φ^R(M, λ(M), γ²E; γ^{-2}g) - γ^{D-2} Φ^R(M, λ(γM), E; g)| / ‖Φ^R‖`.
///
/// The offsets on the rescaled metric are `γ^{D-2} Σ_i`, which is what
/// [`sigma_offsets`] returns there for the rescaled `μ_i`.
pub fn scaling_covariance_check(
    m: &ManifoldSpec,
    cs: &CenterSet,
    rg: &RGState,
    gamma: f64,
    energy: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    if !(energy < 0.0) {
        return Err(Error::Domain("energy must be negative"));
    }
    let nu = (-energy).sqrt();
    let w = gamma.powi(rg.dim as i32 - 2);
    let ms = m.rescaled(1.0 / gamma);
    let pts = cs.points().iter().map(|p| m.rescale_point(1.0 / gamma, p)).collect();
    let mu_s = cs.mu().iter().map(|&v| gamma * v).collect();
    let cs_s = CenterSet::new(&ms, pts, mu_s)?;
    let rg_s = RGState { sigma: rg.sigma.iter().map(|s| w * s).collect(), ..rg.clone() };
    let lhs = renormalized_phi(&ms, &cs_s, &rg_s, gamma * nu, quad)?;
    let rg_flow = RGState { coupling: flow_coupling(rg.dim, rg.coupling, gamma)?, ..rg.clone() };
    let rhs = renormalized_phi(m, cs, &rg_flow, nu, quad)?;
    let mut worst: f64 = 0.0;
    for (a, b) in lhs.as_slice().iter().zip(rhs.as_slice()) {
        worst = worst.max((a - w * b).abs());
    }
    let scale = (w * rhs.norm()).max(lhs.norm());
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

/// `Φ^R` as a spectral source; its roots are the bound states.
#[derive(Debug, Clone)]
pub struct RgScheme<'a> {
    /// Geometry.
    pub m: &'a ManifoldSpec,
    /// Centers.
    pub cs: &'a CenterSet,
    /// Renormalization state.
    pub rg: RGState,
    /// Quadrature settings.
    pub quad: QuadratureConfig,
}

impl PhiSource for RgScheme<'_> {
    fn len(&self) -> usize {
        self.cs.len()
    }

    fn matrix(&self, nu: f64) -> Result<PrincipalMatrix> {
        renormalized_phi(self.m, self.cs, &self.rg, nu, &self.quad)
    }

    fn derivative(&self, nu: f64) -> Result<Vec<f64>> {
        // M, λ and Σ are ν-independent, so ∂Φ^R/∂ν = ∂Φ/∂ν
        assemble_derivative(self.m, self.cs, nu, &self.quad)
    }

    fn nu_floor(&self) -> f64 {
        default_nu_floor(self.m, self.cs)
    }

    fn nu_scale(&self) -> f64 {
        let mu_d = self.cs.mu_d(self.m);
        self.cs.mu_max().max(if mu_d.is_finite() { mu_d } else { 0.0 })
    }

    fn probes(&self) -> Vec<f64> {
        let mut p = self.cs.mu().to_vec();
        p.sort_by(f64::total_cmp);
        p.dedup();
        p
    }
}
