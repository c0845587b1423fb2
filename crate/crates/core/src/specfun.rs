//! Modified Bessel functions of the second kind, the principal Lambert W branch,
//! Legendre polynomials and the elementary envelope inequalities used by the
//! pointwise and ground-state bounds.

use core::f64::consts::{E, FRAC_PI_2, PI};
// unused when std is in the crate graph (dev builds)
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Order of a modified Bessel function of the second kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BesselOrder {
    /// `K₀`.
    Zero,
    /// `K₁`.
    One,
    /// `K_{1/2}`, elementary.
    Half,
}

/// `K_ν(x)` for `ν ∈ {0, 1, 1/2}`.
pub fn bessel_k(order: BesselOrder, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain("bessel_k needs x > 0"));
    }
    Ok(match order {
        BesselOrder::Zero => k0(x),
        BesselOrder::One => k1(x),
        BesselOrder::Half => (FRAC_PI_2 / x).sqrt() * (-x).exp(),
    })
}

/// `K₀(x)` for `x > 0`, unchecked.
pub fn k0(x: f64) -> f64 {
    if x <= 2.0 {
        k01_series(x).0
    } else {
        let (a, _) = k01_scaled_cf(x);
        a * (-x).exp()
    }
}

/// `K₁(x)` for `x > 0`, unchecked.
pub fn k1(x: f64) -> f64 {
    if x <= 2.0 {
        k01_series(x).1
    } else {
        let (_, b) = k01_scaled_cf(x);
        b * (-x).exp()
    }
}

/// `eˣ K₀(x)`, finite for every `x > 0`.
pub fn k0e(x: f64) -> f64 {
    if x <= 2.0 {
        k01_series(x).0 * x.exp()
    } else {
        k01_scaled_cf(x).0
    }
}

/// `eˣ K₁(x)`.
pub fn k1e(x: f64) -> f64 {
    if x <= 2.0 {
        k01_series(x).1 * x.exp()
    } else {
        k01_scaled_cf(x).1
    }
}

// Ascending series; I₀, I₁ and the digamma sums converge in ~20 terms for x ≤ 2.
fn k01_series(x: f64) -> (f64, f64) {
    let y = 0.25 * x * x;
    let ln_half = (0.5 * x).ln();
    let mut term0 = 1.0; // y^k / (k!)²
    let mut term1 = 1.0; // y^k / (k! (k+1)!)
    let mut harmonic = 0.0; // H_k
    let mut i0 = 1.0;
    let mut s0 = 0.0;
    let mut i1 = 1.0;
    let mut s1 = 1.0 - 2.0 * EULER_GAMMA; // ψ(1) + ψ(2)
    let mut k = 0.0;
    loop {
        k += 1.0;
        term0 *= y / (k * k);
        term1 *= y / (k * (k + 1.0));
        harmonic += 1.0 / k;
        i0 += term0;
        s0 += term0 * harmonic;
        i1 += term1;
        // ψ(k+1) + ψ(k+2) = H_k + H_{k+1} − 2γ
        s1 += term1 * (2.0 * harmonic + 1.0 / (k + 1.0) - 2.0 * EULER_GAMMA);
        if term0 < 1e-18 * i0 && term1 < 1e-18 * i1 {
            break;
        }
    }
    let k0 = -(ln_half + EULER_GAMMA) * i0 + s0;
    let i1 = 0.5 * x * i1;
    let k1 = 1.0 / x + i1 * ln_half - 0.25 * x * s1;
    (k0, k1)
}

// Steed/Temme continued fraction for x > 2, returning eˣK₀ and eˣK₁.
fn k01_scaled_cf(x: f64) -> (f64, f64) {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 1..10_000 {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    h *= a1;
    let k0 = (PI / (2.0 * x)).sqrt() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    (k0, k1)
}

/// Which closed-form Bessel envelope to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BesselBoundKind {
    /// `(2/x) e^{-x/2} ≥ K₀(x)`.
    K0Coarse,
    /// `e^{-x/2} [2/(1+x) + ln((x+1)/x)] ≥ K₀(x)`.
    K0Sharp,
    /// `e^{-x/2} (1/x + 1/2) ≥ K₁(x)`.
    K1,
}

/// Closed-form upper envelope for `K₀` or `K₁`.
pub fn bessel_bound(kind: BesselBoundKind, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain("bessel_bound needs x > 0"));
    }
    let damp = (-0.5 * x).exp();
    Ok(match kind {
        BesselBoundKind::K0Coarse => 2.0 / x * damp,
        BesselBoundKind::K0Sharp => damp * (2.0 / (1.0 + x) + (1.0 / x).ln_1p()),
        BesselBoundKind::K1 => damp * (1.0 / x + 0.5),
    })
}

/// Principal branch `W₀(x)` of the inverse of `w ↦ w eʷ`, for `x ≥ -1/e`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    let branch = -1.0 / E;
    if x.is_nan() || x < branch {
        return Err(Error::Domain("lambert_w0 needs x >= -1/e"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    // p² = 2(ex + 1), with e·x + 1 formed in two pieces to limit cancellation.
    let ex1 = E.mul_add(x, 1.0) + 1.445_646_891_729_250_2e-16 * x;
    let mut w = if x < -0.25 {
        let p = (2.0 * ex1.max(0.0)).sqrt();
        if p < 1e-8 {
            return Ok(-1.0 + p - p * p / 3.0);
        }
        -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * 11.0 / 72.0))
    } else if x <= 3.0 {
        x.ln_1p() * (1.0 - 0.1 * x.ln_1p()).max(0.5)
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };
    for _ in 0..50 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            return Ok(w);
        }
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        let next = (w - step).max(-1.0);
        if (next - w).abs() <= 1e-14 * (1.0 + next.abs()) {
            return Ok(next);
        }
        w = next;
    }
    Err(Error::Convergence("lambert_w0 Halley iteration"))
}

/// `P_l(x)` by the three-term recurrence, with double-double accumulation for `l > 1000`.
pub fn legendre_p(l: u32, x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain("legendre_p needs |x| <= 1"));
    }
    if l > 10_000 {
        return Err(Error::Domain("legendre_p supports l <= 10000"));
    }
    let mut it = Legendre::new(x);
    let mut p = it.next_value();
    for _ in 0..l {
        p = it.next_value();
    }
    Ok(p)
}

/// Streams `P_0(x), P_1(x), …`; switches to double-double arithmetic past degree 1000.
#[derive(Debug, Clone)]
pub struct Legendre {
    x: f64,
    l: u32,
    prev: Dd,
    cur: Dd,
}

/// Degree above which the recurrence is carried in double-double.
pub const LEGENDRE_DD_THRESHOLD: u32 = 1000;

impl Legendre {
    /// Starts the sequence at `P_0`.
    pub fn new(x: f64) -> Self {
        Legendre { x, l: 0, prev: Dd::ZERO, cur: Dd::ZERO }
    }

    /// Returns the next polynomial value.
    pub fn next_value(&mut self) -> f64 {
        let out = match self.l {
            0 => Dd::from(1.0),
            1 => Dd::from(self.x),
            l if l <= LEGENDRE_DD_THRESHOLD => {
                let n = (l - 1) as f64;
                let v = ((2.0 * n + 1.0) * self.x * self.cur.hi - n * self.prev.hi) / (n + 1.0);
                Dd::from(v)
            }
            l => {
                let n = (l - 1) as f64;
                let a = self.cur.mul_f64(2.0 * n + 1.0).mul_f64(self.x);
                a.sub(self.prev.mul_f64(n)).div_f64(n + 1.0)
            }
        };
        self.prev = self.cur;
        self.cur = out;
        self.l += 1;
        out.hi + out.lo
    }
}

// Unevaluated sum hi + lo with |lo| ≤ ulp(hi)/2.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    fn from(v: f64) -> Dd {
        Dd { hi: v, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        let err = (a - (s - bb)) + (b - bb);
        Dd { hi: s, lo: err }
    }

    fn quick(hi: f64, lo: f64) -> Dd {
        let s = hi + lo;
        Dd { hi: s, lo: lo - (s - hi) }
    }

    fn mul_f64(self, b: f64) -> Dd {
        let p = self.hi * b;
        let e = self.hi.mul_add(b, -p);
        Dd::quick(p, e + self.lo * b)
    }

    fn sub(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.hi, -o.hi);
        Dd::quick(s.hi, s.lo + self.lo - o.lo)
    }

    fn div_f64(self, b: f64) -> Dd {
        let q1 = self.hi / b;
        let r = self.sub(Dd::from(q1).mul_f64(b));
        let q2 = (r.hi + r.lo) / b;
        Dd::quick(q1, q2)
    }
}

/// `ln u - (u-1)/u`, positive for every `u > 0, u ≠ 1`.
pub fn log_lower_gap(u: f64) -> Result<f64> {
    if !(u > 0.0) {
        return Err(Error::Domain("log_lower_gap needs u > 0"));
    }
    Ok(u.ln() - (u - 1.0) / u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    // 40-digit reference values of K₀ and K₁.
    const K0_REF: [(f64, f64); 9] = [
        (1e-6, 13.93144207362642),
        (0.1, 2.427069024702017),
        (1.0, 0.42102443824070834),
        (1.999, 0.11403383058923293),
        (2.001, 0.11375409873668461),
        (5.0, 0.0036910983340425942),
        (20.0, 5.741237815336525e-10),
        (100.0, 4.656628229175902e-45),
        (700.0, 4.669776431685377e-306),
    ];
    const K1_REF: [(f64, f64); 9] = [
        (1e-6, 999999.9999927842),
        (0.1, 9.853844780870606),
        (1.0, 0.6019072301972346),
        (1.999, 0.1400498420771097),
        (2.001, 0.13968218830176754),
        (5.0, 0.004044613445452165),
        (20.0, 5.883057969557038e-10),
        (100.0, 4.6798537356369095e-45),
        (700.0, 4.6731107967079664e-306),
    ];

    #[test]
    fn k0_k1_match_reference_values() {
        for &(x, v) in &K0_REF {
            assert!(rel(k0(x), v) < 1e-13, "K0({x}) = {} vs {v}", k0(x));
        }
        for &(x, v) in &K1_REF {
            assert!(rel(k1(x), v) < 1e-13, "K1({x}) = {} vs {v}", k1(x));
        }
    }

    #[test]
    fn half_order_is_elementary() {
        let v = bessel_k(BesselOrder::Half, 1.0).unwrap();
        assert!(rel(v, (PI / 2.0).sqrt() * (-1.0f64).exp()) < 1e-15);
    }

    #[test]
    fn bessel_domain() {
        assert!(bessel_k(BesselOrder::Zero, 0.0).is_err());
        assert!(bessel_k(BesselOrder::One, -1.0).is_err());
        assert!(bessel_bound(BesselBoundKind::K1, 0.0).is_err());
        assert_eq!(k0(800.0), 0.0);
    }

    #[test]
    fn bound_examples() {
        let e1 = (-1.0f64).exp();
        assert!(rel(bessel_bound(BesselBoundKind::K0Coarse, 2.0).unwrap(), e1) < 1e-15);
        assert!(rel(bessel_bound(BesselBoundKind::K1, 2.0).unwrap(), e1) < 1e-15);
        let sharp = bessel_bound(BesselBoundKind::K0Sharp, 1.0).unwrap();
        assert!(rel(sharp, (-0.5f64).exp() * (1.0 + 2f64.ln())) < 1e-15);
        assert!(sharp >= k0(1.0));
    }

    #[test]
    fn lambert_examples() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert!((lambert_w0(E).unwrap() - 1.0).abs() < 1e-15);
        assert!(rel(lambert_w0(1.0).unwrap(), 0.567_143_290_409_783_8) < 1e-15);
        assert!((lambert_w0(-1.0 / E).unwrap() + 1.0).abs() < 1e-7);
        assert!(lambert_w0(-0.37).is_err());
    }

    #[test]
    fn legendre_examples() {
        assert_eq!(legendre_p(0, 0.3).unwrap(), 1.0);
        assert_eq!(legendre_p(1, 0.3).unwrap(), 0.3);
        assert!((legendre_p(2, 0.5).unwrap() + 0.125).abs() < 1e-16);
        assert!(legendre_p(3, 1.5).is_err());
    }

    #[test]
    fn legendre_matches_explicit_polynomials() {
        for i in 0..=200 {
            let x = -1.0 + 2.0 * i as f64 / 200.0;
            let explicit = [
                1.0,
                x,
                0.5 * (3.0 * x * x - 1.0),
                0.5 * (5.0 * x * x * x - 3.0 * x),
                (35.0 * x.powi(4) - 30.0 * x * x + 3.0) / 8.0,
            ];
            let mut it = Legendre::new(x);
            for p in explicit {
                assert!((it.next_value() - p).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn legendre_high_degree_reference() {
        // 40-digit evaluations at the same binary x.
        let c = 0.9999995000000417;
        // Near x = 1 the recurrence loses about l·ε before the double-double switch.
        assert!((legendre_p(900, c).unwrap() - 0.80732082728500834).abs() < 2e-12);
        assert!((legendre_p(1500, c).unwrap() - 0.51154871314721659).abs() < 2e-12);
        assert!((legendre_p(10_000, c).unwrap() + 0.24595749021234673).abs() < 2e-12);
        assert!((legendre_p(5000, 0.3).unwrap() + 0.011533781931550164).abs() < 1e-14);
        assert!((legendre_p(3000, 0.7).unwrap() + 0.0039441390701832639).abs() < 1e-14);
    }
}
