//! Globally adaptive 7/15-point Gauss–Kronrod integration and Gauss–Legendre rules.

use alloc::vec::Vec;
// unused when std is in the crate graph (dev builds)
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Outcome of an integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    /// Kronrod estimate.
    pub value: f64,
    /// Error estimate.
    pub error: f64,
    /// `∫|f|` estimate, used for cancellation-aware tolerances.
    pub abs_value: f64,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs_value: f64,
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(centre - dx);
        let f2 = f(centre + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = resk * half;
    let abs_value = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut error = ((resk - resg) * half).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    let round = 50.0 * f64::EPSILON * abs_value;
    if round > error {
        error = round;
    }
    Segment { a, b, value, error, abs_value }
}

/// Adaptive integration over `[a, b]` with optional interior breakpoints.
///
/// Converges when the summed error is below `max(rel_tol·|I|, abs_tol, 100ε∫|f|)`;
/// `max_subdivisions` bounds the number of bisections.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    points: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    max_subdivisions: usize,
) -> Result<Integral> {
    debug_assert!(points.len() >= 2);
    let mut segs: Vec<Segment> = Vec::with_capacity(points.len() + max_subdivisions);
    for w in points.windows(2) {
        if w[1] > w[0] {
            segs.push(gk15(&mut f, w[0], w[1]));
        }
    }
    if segs.is_empty() {
        return Ok(Integral { value: 0.0, error: 0.0, abs_value: 0.0 });
    }
    let mut splits = 0;
    loop {
        let mut value = 0.0;
        let mut error = 0.0;
        let mut abs_value = 0.0;
        let mut worst = 0;
        for (i, s) in segs.iter().enumerate() {
            value += s.value;
            error += s.error;
            abs_value += s.abs_value;
            if s.error > segs[worst].error {
                worst = i;
            }
        }
        let tol = (rel_tol * value.abs()).max(abs_tol).max(100.0 * f64::EPSILON * abs_value);
        if error <= tol {
            return Ok(Integral { value, error, abs_value });
        }
        if splits >= max_subdivisions || !value.is_finite() {
            return Err(Error::Quadrature { value, error });
        }
        let s = segs[worst];
        let mid = 0.5 * (s.a + s.b);
        if !(mid > s.a && mid < s.b) {
            return Err(Error::Quadrature { value, error });
        }
        segs[worst] = gk15(&mut f, s.a, mid);
        segs.push(gk15(&mut f, mid, s.b));
        splits += 1;
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = alloc::vec![0.0; n];
    let mut w = alloc::vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut z = (core::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let jf = j as f64;
                let p2 = p1;
                p1 = p0;
                p0 = ((2.0 * jf + 1.0) * z * p1 - jf * p2) / (jf + 1.0);
            }
            dp = nf * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_rule_is_exact_to_degree_22() {
        for k in 0..=22 {
            let mut f = |x: f64| x.powi(k);
            let s = gk15(&mut f, -1.0, 1.0);
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert!((s.value - exact).abs() < 1e-15, "degree {k}");
        }
    }

    #[test]
    fn adaptive_handles_peaks_and_endpoints() {
        let r = integrate(|x: f64| x.sqrt(), &[0.0, 1.0], 1e-12, 0.0, 200).unwrap();
        assert!((r.value - 2.0 / 3.0).abs() < 1e-12);
        let r = integrate(|x: f64| (-1e4 * (x - 0.3).powi(2)).exp(), &[0.0, 0.3, 1.0], 1e-12, 0.0, 200)
            .unwrap();
        assert!((r.value - (core::f64::consts::PI / 1e4).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let r = integrate(|x: f64| (1.0 / x).sin(), &[1e-9, 1.0], 1e-14, 0.0, 3);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(12);
        for k in 0..24 {
            let s: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(k)).sum();
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert!((s - exact).abs() < 1e-14);
        }
    }
}
