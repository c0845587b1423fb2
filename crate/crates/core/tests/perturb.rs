mod common;

use heatpoint_core::perturb::{compare_with_exact, delta_nu, tunneling_offdiag_asymptotic};
use heatpoint_core::principal::phi_offdiagonal;
use heatpoint_core::specfun::k0;
use heatpoint_core::{CenterSet, ManifoldSpec, Point, QuadratureConfig};
use std::f64::consts::PI;

fn q() -> QuadratureConfig {
    QuadratureConfig::default()
}

#[test]
fn shift_accuracy_improves_with_separation() {
    let m = ManifoldSpec::flat(3).unwrap();
    let mut prev = f64::INFINITY;
    let mut prev_dom = 0.0;
    for d in [2.0, 3.0, 4.0, 6.0] {
        let cs = common::pair(&m, (1.0, 2.0), d);
        let r = compare_with_exact(&m, &cs, 1, &q(), 1e-13).unwrap();
        assert!(r.relative_error < prev, "d = {d}: {r:?}");
        assert!(r.dominance > prev_dom);
        assert_eq!(r.delta_e, -2.0 * r.nu0 * r.delta_nu);
        assert!((r.exact_nu - (r.nu0 + r.exact_delta)).abs() < 1e-6 * r.nu0);
        prev = r.relative_error;
        prev_dom = r.dominance;
    }
    let r = compare_with_exact(&m, &common::pair(&m, (1.0, 2.0), 2.0), 1, &q(), 1e-13).unwrap();
    assert!(r.relative_error <= 5e-2);
}

#[test]
fn two_dimensional_shift_converges() {
    let m = ManifoldSpec::flat(2).unwrap();
    let errs: Vec<f64> = [2.0, 3.0, 4.0]
        .iter()
        .map(|&d| compare_with_exact(&m, &common::pair(&m, (1.0, 2.0), d), 1, &q(), 1e-13).unwrap().relative_error)
        .collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2] && errs[2] < 1e-5, "{errs:?}");
}

#[test]
fn levels_repel() {
    // the deeper-bound center's root moves deeper, the other's moves toward threshold
    let m = ManifoldSpec::flat(3).unwrap();
    let cs = common::pair(&m, (1.0, 2.0), 3.0);
    let s0 = delta_nu(&m, &cs, 0, &q()).unwrap();
    let s1 = delta_nu(&m, &cs, 1, &q()).unwrap();
    assert!(s1.delta_nu > 0.0 && s0.delta_nu < 0.0, "{s0:?} {s1:?}");
    assert!(s1.in_regime());
}

#[test]
fn single_center_has_no_shift() {
    let m = ManifoldSpec::flat(3).unwrap();
    let cs = CenterSet::new(&m, vec![Point::new(&[0.0, 0.0, 0.0]).unwrap()], vec![1.0]).unwrap();
    assert_eq!(delta_nu(&m, &cs, 0, &q()).unwrap().delta_nu, 0.0);
}

#[test]
fn asymptotics_agree_with_exact_entries() {
    let f3 = ManifoldSpec::flat(3).unwrap();
    let h3 = ManifoldSpec::hyperbolic(3, 1.0).unwrap();
    let o = Point::new(&[0.0, 0.0, 1.0]).unwrap();
    for d in [1.0, 3.0, 6.0] {
        let p = Point::new(&[0.0, 0.0, d]).unwrap();
        let exact = phi_offdiagonal(&f3, &Point::new(&[0.0, 0.0, 0.0]).unwrap(), &p, 1.5, &q()).unwrap();
        let asym = tunneling_offdiag_asymptotic(&f3, d, 1.5).unwrap();
        assert!(((asym - exact) / exact).abs() < 1e-9);
        // (0,0,1) to (0,0,e^d) is a geodesic of length d
        let p = Point::new(&[0.0, 0.0, d.exp()]).unwrap();
        let exact = phi_offdiagonal(&h3, &o, &p, 1.5, &q()).unwrap();
        let asym = tunneling_offdiag_asymptotic(&h3, d, 1.5).unwrap();
        assert!(((asym - exact) / exact).abs() < 1e-9);
    }
}

#[test]
fn two_dimensional_asymptotic_error_is_one_over_8x() {
    let f2 = ManifoldSpec::flat(2).unwrap();
    let rel = |x: f64| {
        let exact = -k0(x) / (2.0 * PI);
        ((tunneling_offdiag_asymptotic(&f2, x, 1.0).unwrap() - exact) / exact).abs()
    };
    let e12 = rel(12.0);
    assert!(e12 > 0.01 && e12 < 0.011, "{e12}");
    assert!((e12 * 8.0 * 12.0 - 1.0).abs() < 0.05);
    for x in [13.0, 20.0, 40.0] {
        assert!(rel(x) < 0.01);
    }
}

#[test]
fn no_asymptotic_on_curved_compact_geometries() {
    assert!(tunneling_offdiag_asymptotic(&ManifoldSpec::sphere(1.0).unwrap(), 1.0, 1.0).is_err());
    assert!(tunneling_offdiag_asymptotic(&ManifoldSpec::hyperbolic(2, 1.0).unwrap(), 1.0, 1.0).is_err());
}
