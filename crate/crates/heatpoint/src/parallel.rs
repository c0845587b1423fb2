//! Rayon drivers over the core's sequential kernels.
//!
//! Every parallel map writes its results by index, so outputs do not depend on
//! the thread count.

use heatpoint_core::spectral::{MuScheme, PhiSource};
use heatpoint_core::wavefield::{PsiEvaluator, Sample};
use heatpoint_core::{PrincipalMatrix, Point, Result};
use rayon::prelude::*;

/// The μ-scheme source with entries assembled in parallel.
pub struct ParallelMu<'a>(pub MuScheme<'a>);

fn upper(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect()
}

fn mirror(n: usize, vals: Vec<(usize, usize, f64)>) -> Vec<f64> {
    let mut e = vec![0.0; n * n];
    for (i, j, v) in vals {
        e[i * n + j] = v;
        e[j * n + i] = v;
    }
    e
}

impl PhiSource for ParallelMu<'_> {
    fn len(&self) -> usize {
        self.0.len()
    }

    fn matrix(&self, nu: f64) -> Result<PrincipalMatrix> {
        let n = self.0.len();
        if n == 1 {
            return self.0.matrix(nu);
        }
        let vals = upper(n)
            .into_par_iter()
            .map(|(i, j)| self.0.entry(i, j, nu).map(|v| (i, j, v)))
            .collect::<Result<Vec<_>>>()?;
        Ok(PrincipalMatrix::from_row_major(nu, n, mirror(n, vals)))
    }

    fn derivative(&self, nu: f64) -> Result<Vec<f64>> {
        let n = self.0.len();
        if n == 1 {
            return self.0.derivative(nu);
        }
        let vals = upper(n)
            .into_par_iter()
            .map(|(i, j)| self.0.derivative_entry(i, j, nu).map(|v| (i, j, v)))
            .collect::<Result<Vec<_>>>()?;
        Ok(mirror(n, vals))
    }

    fn nu_floor(&self) -> f64 {
        self.0.nu_floor()
    }

    fn nu_scale(&self) -> f64 {
        self.0.nu_scale()
    }

    fn probes(&self) -> Vec<f64> {
        self.0.probes()
    }
}

/// `ψ` at every point, in input order.
pub fn psi_at(ev: &PsiEvaluator<'_>, points: &[Point]) -> Result<Vec<Sample>> {
    points
        .par_iter()
        .map(|p| ev.psi(p).map(|(psi, d_min)| Sample { point: *p, d_min, psi }))
        .collect()
}
