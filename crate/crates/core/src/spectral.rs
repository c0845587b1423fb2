//! Eigenvalue branches `ω^k(-ν²)` of the principal matrix, their roots (the bound
//! states), Feynman–Hellmann slopes, interlacing and ground-state positivity checks.
//!
//! Branches are tracked by sorted order. Every analytic branch increases with `ν`,
//! hence so does every sorted envelope, and each sorted branch has at most one root.
//! The lowest branch crosses zero last, so its root is the ground state.

use alloc::vec::Vec;
// unused when std is in the crate graph (dev builds)
#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{bilinear, symmetric_eigen};
use crate::manifold::ManifoldSpec;
use crate::principal::{
    assemble_derivative, derivative_entry, entry, CenterSet, PrincipalMatrix, QuadratureConfig,
    NU_MIN_COMPACT,
};
use crate::{Error, Result};

/// Relative gap below which two branches count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Spectral decomposition of one `Φ(-ν²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    /// `ν`.
    pub nu: f64,
    /// Ascending eigenvalues `ω¹ ≤ … ≤ ω^N`.
    pub eigenvalues: Vec<f64>,
    /// Unit eigenvectors, largest-magnitude component positive.
    pub eigenvectors: Vec<Vec<f64>>,
}

impl EigenSystem {
    /// Frobenius norm of the decomposed matrix.
    pub fn norm(&self) -> f64 {
        self.eigenvalues.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    /// True when branch `k` is within the degeneracy tolerance of a neighbour.
    pub fn is_degenerate(&self, k: usize) -> bool {
        let tol = DEGENERACY_TOL * self.norm();
        let w = &self.eigenvalues;
        (k > 0 && w[k] - w[k - 1] <= tol) || (k + 1 < w.len() && w[k + 1] - w[k] <= tol)
    }
}

/// A bound state `E = -ν²` on branch `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundState {
    /// Sorted-branch index; 0 is the lowest branch.
    pub branch: usize,
    /// Root `ν_k`.
    pub nu: f64,
    /// `-ν_k²`.
    pub energy: f64,
    /// Unit amplitude vector `A(-ν_k²)`.
    pub amplitudes: Vec<f64>,
    /// `∂ω^k/∂ν` at the root.
    pub omega_slope: f64,
    /// `Σ A_i [∫ t K_t(a_i, a_j) e^{-tν²} dt] A_j`, equal to `omega_slope / 2ν`.
    pub norm_factor: f64,
}

/// What happened on one branch.
#[derive(Debug, Clone, PartialEq)]
pub enum BranchOutcome {
    /// A root inside the scan window.
    Bound(BoundState),
    /// Already positive at the lower end of the window: the root sits at or below
    /// the continuum threshold, so there is no bound state.
    Threshold,
    /// Still negative at the largest upper bracket tried.
    NoBracket,
}

/// Anything that yields `Φ(-ν²)` and `∂Φ/∂ν` for a fixed configuration.
pub trait PhiSource {
    /// Matrix size `N`.
    fn len(&self) -> usize;
    /// `Φ(-ν²)`.
    fn matrix(&self, nu: f64) -> Result<PrincipalMatrix>;
    /// `∂Φ/∂ν`, row-major.
    fn derivative(&self, nu: f64) -> Result<Vec<f64>>;
    /// Lower end of the ν scan window.
    fn nu_floor(&self) -> f64;
    /// Scale `max(μ_max, μ_d)` that bounds the upper-bracket expansion.
    fn nu_scale(&self) -> f64;
    /// Distinct `ν` values worth probing before bisection (roots are often near them).
    fn probes(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// The μ-scheme principal matrix of a center set.
#[derive(Debug, Clone)]
pub struct MuScheme<'a> {
    /// Geometry.
    pub m: &'a ManifoldSpec,
    /// Centers.
    pub cs: &'a CenterSet,
    /// Quadrature settings.
    pub quad: QuadratureConfig,
    dist: Vec<f64>,
}

impl<'a> MuScheme<'a> {
    /// Caches the distance matrix.
    pub fn new(m: &'a ManifoldSpec, cs: &'a CenterSet, quad: QuadratureConfig) -> Self {
        MuScheme { m, cs, quad, dist: cs.distances(m) }
    }

    /// Row-major distance matrix.
    pub fn distances(&self) -> &[f64] {
        &self.dist
    }

    /// Entry `(i, j)` of `Φ(-ν²)`; independent of the others.
    pub fn entry(&self, i: usize, j: usize, nu: f64) -> Result<f64> {
        entry(self.m, self.cs, &self.dist, i, j, nu, &self.quad)
    }

    /// Entry `(i, j)` of `∂Φ/∂ν`.
    pub fn derivative_entry(&self, i: usize, j: usize, nu: f64) -> Result<f64> {
        derivative_entry(self.m, self.cs, &self.dist, i, j, nu, &self.quad)
    }
}

/// Default lower end of the ν window for a center set.
pub fn default_nu_floor(m: &ManifoldSpec, cs: &CenterSet) -> f64 {
    let lo = (0.01 * cs.mu_min()).max(1e-6);
    if m.is_compact() {
        lo.max(NU_MIN_COMPACT * (1.0 + 1e-9))
    } else {
        lo
    }
}

impl PhiSource for MuScheme<'_> {
    fn len(&self) -> usize {
        self.cs.len()
    }

    fn matrix(&self, nu: f64) -> Result<PrincipalMatrix> {
        let n = self.cs.len();
        let mut e = alloc::vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = self.entry(i, j, nu)?;
                e[i * n + j] = v;
                e[j * n + i] = v;
            }
        }
        Ok(PrincipalMatrix::from_row_major(nu, n, e))
    }

    fn derivative(&self, nu: f64) -> Result<Vec<f64>> {
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

/// Spectral decomposition of `phi`.
pub fn eigensystem(phi: &PrincipalMatrix) -> Result<EigenSystem> {
    let e = symmetric_eigen(phi.as_slice(), phi.dim())?;
    Ok(EigenSystem { nu: phi.nu, eigenvalues: e.values, eigenvectors: e.vectors })
}

/// Eigensystem of `src` at `ν`.
pub fn eigensystem_at<S: PhiSource + ?Sized>(src: &S, nu: f64) -> Result<EigenSystem> {
    eigensystem(&src.matrix(nu)?)
}

/// `∂ω^k/∂ν = A^kᵀ (∂Φ/∂ν) A^k` at a non-degenerate branch.
pub fn eigen_derivative_fh(
    m: &ManifoldSpec,
    cs: &CenterSet,
    es: &EigenSystem,
    k: usize,
    quad: &QuadratureConfig,
) -> Result<f64> {
    fh_from_source(&MuScheme::new(m, cs, *quad), es, k)
}

fn fh_from_source<S: PhiSource + ?Sized>(src: &S, es: &EigenSystem, k: usize) -> Result<f64> {
    if k >= es.eigenvalues.len() {
        return Err(Error::Domain("branch index out of range"));
    }
    if es.is_degenerate(k) {
        return Err(Error::Degenerate { k });
    }
    let dphi = src.derivative(es.nu)?;
    Ok(bilinear(&dphi, &es.eigenvectors[k], &es.eigenvectors[k]))
}

/// Central difference `(ω^k(ν+h) - ω^k(ν-h))/2h` with `h = 1e-5 ν`.
pub fn eigen_derivative_fd<S: PhiSource + ?Sized>(src: &S, nu: f64, k: usize) -> Result<f64> {
    let h = 1e-5 * nu;
    let up = eigensystem_at(src, nu + h)?;
    let dn = eigensystem_at(src, nu - h)?;
    Ok((up.eigenvalues[k] - dn.eigenvalues[k]) / (2.0 * h))
}

/// Feynman–Hellmann slope, falling back to central differences on degenerate
/// branches; the flag reports whether the fallback was used.
pub fn eigen_derivative<S: PhiSource + ?Sized>(src: &S, es: &EigenSystem, k: usize) -> Result<(f64, bool)> {
    match fh_from_source(src, es, k) {
        Ok(v) => Ok((v, false)),
        Err(Error::Degenerate { .. }) => Ok((eigen_derivative_fd(src, es.nu, k)?, true)),
        Err(e) => Err(e),
    }
}

/// Largest bracket expansion factor over `nu_scale`.
const MAX_EXPANSION: f64 = 1024.0;

/// Solves every branch of `src` for its root. Outcomes are in branch order, so the
/// first bound state is the ground state.
pub fn solve_branches<S: PhiSource + ?Sized>(src: &S, root_tol: f64) -> Result<Vec<BranchOutcome>> {
    if !(root_tol > 0.0) {
        return Err(Error::Domain("root_tol must be positive"));
    }
    let n = src.len();
    let lo = src.nu_floor();
    let scale = src.nu_scale().max(lo);

    // Samples (ν, sorted eigenvalues), kept sorted by ν.
    let mut samples: Vec<(f64, Vec<f64>)> = Vec::new();
    let sample = |nu: f64, samples: &mut Vec<(f64, Vec<f64>)>| -> Result<Vec<f64>> {
        let es = eigensystem_at(src, nu)?;
        let pos = samples.partition_point(|s| s.0 < nu);
        samples.insert(pos, (nu, es.eigenvalues.clone()));
        Ok(es.eigenvalues)
    };
    let at_lo = sample(lo, &mut samples)?;
    for p in src.probes() {
        if p > lo {
            sample(p, &mut samples)?;
        }
    }
    let mut hi = 2.0 * scale;
    loop {
        let top = samples.last().map(|s| s.1[0]).unwrap_or(f64::NEG_INFINITY);
        if top > 0.0 || hi > MAX_EXPANSION * scale {
            break;
        }
        sample(hi, &mut samples)?;
        hi *= 2.0;
    }

    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        if at_lo[k] > 0.0 {
            out.push(BranchOutcome::Threshold);
            continue;
        }
        if let Some(s) = samples.iter().find(|s| s.1[k] == 0.0) {
            let nu = s.0;
            out.push(BranchOutcome::Bound(bound_state(src, nu, k)?));
            continue;
        }
        // Tightest bracket from the samples.
        let Some(ih) = samples.iter().position(|s| s.1[k] > 0.0) else {
            out.push(BranchOutcome::NoBracket);
            continue;
        };
        let (mut a, mut fa) = (samples[ih - 1].0, samples[ih - 1].1[k]);
        let (mut b, mut fb) = (samples[ih].0, samples[ih].1[k]);
        let mut side = 0i8;
        let mut root = None;
        for _ in 0..200 {
            let width_tol = (1e-3 * root_tol * b).max(4.0 * f64::EPSILON * b);
            if b - a <= width_tol {
                break;
            }
            // Illinois false position, with plain bisection when it stalls.
            let mut c = (a * fb - b * fa) / (fb - fa);
            if !(c > a && c < b) {
                c = 0.5 * (a + b);
            }
            let fc = eigensystem_at(src, c)?.eigenvalues[k];
            if fc == 0.0 {
                root = Some(c);
                break;
            }
            if fc < 0.0 {
                a = c;
                fa = fc;
                if side == -1 {
                    fb *= 0.5;
                }
                side = -1;
            } else {
                b = c;
                fb = fc;
                if side == 1 {
                    fa *= 0.5;
                }
                side = 1;
            }
        }
        let nu = root.unwrap_or_else(|| if -fa < fb { a } else { b });
        out.push(BranchOutcome::Bound(bound_state(src, nu, k)?));
    }
    Ok(out)
}

fn bound_state<S: PhiSource + ?Sized>(src: &S, nu: f64, k: usize) -> Result<BoundState> {
    let es = eigensystem_at(src, nu)?;
    let (slope, _) = eigen_derivative(src, &es, k)?;
    Ok(BoundState {
        branch: k,
        nu,
        energy: -nu * nu,
        amplitudes: es.eigenvectors[k].clone(),
        omega_slope: slope,
        norm_factor: slope / (2.0 * nu),
    })
}

/// Bound states of `src`, ground state first.
pub fn solve_source<S: PhiSource + ?Sized>(src: &S, root_tol: f64) -> Result<Vec<BoundState>> {
    let mut states: Vec<BoundState> = solve_branches(src, root_tol)?
        .into_iter()
        .filter_map(|o| match o {
            BranchOutcome::Bound(b) => Some(b),
            _ => None,
        })
        .collect();
    states.sort_by(|x, y| x.energy.total_cmp(&y.energy));
    Ok(states)
}

/// Bound states of the μ-scheme matrix, ground state first.
pub fn solve_spectrum(
    m: &ManifoldSpec,
    cs: &CenterSet,
    quad: &QuadratureConfig,
    root_tol: f64,
) -> Result<Vec<BoundState>> {
    solve_source(&MuScheme::new(m, cs, *quad), root_tol)
}

/// Result of [`check_interlacing`].
#[derive(Debug, Clone, PartialEq)]
pub struct InterlacingReport {
    /// Eigenvalues interlaced at every sampled `ν`.
    pub interlaced: bool,
    /// Smallest interlacing margin over samples (negative means violated).
    pub interlacing_margin: f64,
    /// Ground energy with all centers.
    pub ground_full: f64,
    /// Ground energy with the last center removed.
    pub ground_sub: f64,
    /// `ground_sub - ground_full`; positive when adding a center deepens binding.
    pub deepening: f64,
    /// `E_gr^N ≤ -max μ²` of the subset, to `root_tol` slack.
    pub below_single: bool,
}

impl InterlacingReport {
    /// All checks passed, deepening strictly.
    pub fn pass(&self) -> bool {
        self.interlaced && self.deepening > 0.0 && self.below_single
    }
}

/// Cauchy interlacing between `Φ` and its leading `N×N` block, plus the deepening of
/// the ground state when a center is added.
pub fn check_interlacing(
    m: &ManifoldSpec,
    cs_full: &CenterSet,
    quad: &QuadratureConfig,
    root_tol: f64,
) -> Result<InterlacingReport> {
    let n1 = cs_full.len();
    if n1 < 2 {
        return Err(Error::Domain("interlacing needs at least two centers"));
    }
    let sub = cs_full.leading(n1 - 1);
    let full_src = MuScheme::new(m, cs_full, *quad);
    let full = solve_source(&full_src, root_tol)?;
    let part = solve_spectrum(m, &sub, quad, root_tol)?;
    let ground_full = full.first().map(|s| s.energy).ok_or(Error::NoBracket { k: 0 })?;
    let ground_sub = part.first().map(|s| s.energy).ok_or(Error::NoBracket { k: 0 })?;

    let lo = full_src.nu_floor();
    let hi = 2.0 * (-ground_full).sqrt();
    let mut margin = f64::INFINITY;
    for s in 0..8 {
        let nu = lo * (hi / lo).powf(s as f64 / 7.0);
        let phi = full_src.matrix(nu)?;
        let big = eigensystem(&phi)?.eigenvalues;
        let small = eigensystem(&phi.leading(n1 - 1))?.eigenvalues;
        let tol = 1e-12 * phi.norm();
        for k in 0..n1 - 1 {
            margin = margin.min(small[k] - big[k] + tol).min(big[k + 1] - small[k] + tol);
        }
    }
    let mu_sub = sub.mu_max();
    let slack = root_tol * mu_sub * mu_sub;
    Ok(InterlacingReport {
        interlaced: margin >= 0.0,
        interlacing_margin: margin,
        ground_full,
        ground_sub,
        deepening: ground_sub - ground_full,
        below_single: ground_sub <= -mu_sub * mu_sub + slack,
    })
}

/// Result of [`ground_state_positivity`].
#[derive(Debug, Clone, PartialEq)]
pub struct PositivityReport {
    /// Every amplitude strictly positive.
    pub positive: bool,
    /// Smallest amplitude.
    pub min_amplitude: f64,
    /// `ν_gr - ν_next`, infinite without a second state.
    pub uniqueness_margin: f64,
    /// The ground root is strictly the largest.
    pub unique: bool,
}

/// Perron–Frobenius checks on a spectrum sorted ground state first.
pub fn ground_state_positivity(states: &[BoundState], root_tol: f64) -> Result<PositivityReport> {
    let g = states.first().ok_or(Error::Domain("empty spectrum"))?;
    let min_amplitude = g.amplitudes.iter().copied().fold(f64::INFINITY, f64::min);
    let uniqueness_margin = states.get(1).map(|s| g.nu - s.nu).unwrap_or(f64::INFINITY);
    Ok(PositivityReport {
        positive: min_amplitude > 0.0,
        min_amplitude,
        uniqueness_margin,
        unique: uniqueness_margin > root_tol,
    })
}
