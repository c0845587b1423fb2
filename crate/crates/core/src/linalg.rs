//! Dense symmetric eigendecomposition by cyclic Jacobi rotations, plus a small
//! pivoted linear solve.

use alloc::vec::Vec;
// unused when std is in the crate graph (dev builds)
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

/// Eigenvalues (ascending) and column eigenvectors of a symmetric matrix.
///
/// `vectors[k]` is the unit eigenvector of `values[k]`, with its largest-magnitude
/// component made positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Matching unit eigenvectors.
    pub vectors: Vec<Vec<f64>>,
}

/// Decomposes the symmetric row-major `n×n` matrix `a`.
pub fn symmetric_eigen(a: &[f64], n: usize) -> Result<SymmetricEigen> {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut v = alloc::vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut converged = n < 2 || scale == 0.0;
    for _sweep in 0..100 {
        if converged {
            break;
        }
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..i {
                off += m[i * n + j] * m[i * n + j];
            }
        }
        if off.sqrt() <= 1e-17 * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::Convergence("Jacobi sweeps"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[x * n + x].total_cmp(&m[y * n + y]));
    let values = order.iter().map(|&k| m[k * n + k]).collect();
    let vectors = order
        .iter()
        .map(|&k| {
            let mut col: Vec<f64> = (0..n).map(|i| v[i * n + k]).collect();
            let mut big = 0;
            for i in 1..n {
                if col[i].abs() > col[big].abs() + 1e-14 {
                    big = i;
                }
            }
            if col[big] < 0.0 {
                for c in col.iter_mut() {
                    *c = -*c;
                }
            }
            col
        })
        .collect();
    Ok(SymmetricEigen { values, vectors })
}

/// `vᵀ A w` for row-major `A`.
pub fn bilinear(a: &[f64], v: &[f64], w: &[f64]) -> f64 {
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n {
        let mut r = 0.0;
        for j in 0..n {
            r += a[i * n + j] * w[j];
        }
        s += v[i] * r;
    }
    s
}

/// Solves `A x = b` for row-major `n×n` `A` by Gaussian elimination with partial
/// pivoting; `None` if a pivot vanishes.
pub fn solve(a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i * n + c].abs().total_cmp(&m[j * n + c].abs()))?;
        if m[p * n + c] == 0.0 {
            return None;
        }
        if p != c {
            for k in 0..n {
                m.swap(c * n + k, p * n + k);
            }
            x.swap(c, p);
        }
        for r in c + 1..n {
            let f = m[r * n + c] / m[c * n + c];
            for k in c..n {
                m[r * n + k] -= f * m[c * n + k];
            }
            x[r] -= f * x[c];
        }
    }
    for c in (0..n).rev() {
        let mut s = x[c];
        for k in c + 1..n {
            s -= m[c * n + k] * x[k];
        }
        x[c] = s / m[c * n + c];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_examples() {
        let e = symmetric_eigen(&[0.0], 1).unwrap();
        assert_eq!(e.values, [0.0]);
        assert_eq!(e.vectors[0], [1.0]);
        let c = (-1.0f64).exp() / (4.0 * core::f64::consts::PI);
        let e = symmetric_eigen(&[0.0, -c, -c, 0.0], 2).unwrap();
        assert!((e.values[0] + c).abs() < 1e-17 && (e.values[1] - c).abs() < 1e-17);
        let h = core::f64::consts::FRAC_1_SQRT_2;
        assert!((e.vectors[0][0] - h).abs() < 1e-15 && (e.vectors[0][1] - h).abs() < 1e-15);
        let e = symmetric_eigen(&[0.1, 0.0, 0.0, 0.3], 2).unwrap();
        assert_eq!(e.values, [0.1, 0.3]);
        assert_eq!(e.vectors, [[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn solve_examples() {
        let x = solve(&[0.0, 2.0, 1.0, 1.0], &[4.0, 3.0]).unwrap();
        assert_eq!(x, [1.0, 2.0]);
        assert!(solve(&[1.0, 2.0, 2.0, 4.0], &[1.0, 2.0]).is_none());
    }

    proptest! {
        #[test]
        fn solve_reproduces_rhs(
            n in 1usize..7,
            seed in proptest::collection::vec(-1.0f64..1.0, 49),
            rhs in proptest::collection::vec(-1.0f64..1.0, 7),
        ) {
            // diagonally dominant, so well conditioned
            let mut a = alloc::vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    a[i * n + j] = seed[i * 7 + j] + if i == j { 2.0 * n as f64 } else { 0.0 };
                }
            }
            let x = solve(&a, &rhs[..n]).unwrap();
            for i in 0..n {
                let ax: f64 = (0..n).map(|j| a[i * n + j] * x[j]).sum();
                prop_assert!((ax - rhs[i]).abs() <= 1e-13 * n as f64);
            }
        }

        #[test]
        fn decomposition_is_orthonormal_and_exact(
            n in 1usize..8,
            seed in proptest::collection::vec(-1.0f64..1.0, 64),
        ) {
            let mut a = alloc::vec![0.0; n * n];
            for i in 0..n {
                for j in 0..=i {
                    a[i * n + j] = seed[i * 8 + j];
                    a[j * n + i] = seed[i * 8 + j];
                }
            }
            let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let e = symmetric_eigen(&a, n).unwrap();
            for k in 0..n {
                prop_assert!(k == 0 || e.values[k - 1] <= e.values[k]);
                for i in 0..n {
                    let av: f64 = (0..n).map(|j| a[i * n + j] * e.vectors[k][j]).sum();
                    prop_assert!((av - e.values[k] * e.vectors[k][i]).abs() <= 1e-12 * norm.max(1e-300));
                }
                for l in 0..n {
                    let dot: f64 = (0..n).map(|i| e.vectors[k][i] * e.vectors[l][i]).sum();
                    let want = if k == l { 1.0 } else { 0.0 };
                    prop_assert!((dot - want).abs() <= 1e-12);
                }
            }
        }
    }
}
