mod common;

use heatpoint_core::manifold::properties::base_point;
use heatpoint_core::rgflow::{
    beta, beta_from_flow, flow_coupling, renormalized_phi, scaling_covariance_check, RGState,
    RgScheme,
};
use heatpoint_core::spectral::{solve_source, solve_spectrum};
use heatpoint_core::{CenterSet, Error, ManifoldSpec, Point, QuadratureConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{E, PI};

fn q() -> QuadratureConfig {
    QuadratureConfig::default()
}

fn configurations() -> Vec<(ManifoldSpec, CenterSet)> {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut out = Vec::new();
    for m in [ManifoldSpec::flat(2).unwrap(), ManifoldSpec::flat(3).unwrap(), ManifoldSpec::hyperbolic(3, 1.0).unwrap()] {
        out.push((m, common::random_centers(&mut rng, &m, 3, 0.4)));
    }
    let s = ManifoldSpec::sphere(1.0).unwrap();
    let pts = vec![Point::new(&[1.0, 0.0]).unwrap(), Point::new(&[1.6, 0.9]).unwrap()];
    out.push((s, CenterSet::new(&s, pts, vec![1.0, 1.4]).unwrap()));
    let h2 = ManifoldSpec::hyperbolic(2, 1.0).unwrap();
    let b = base_point(&h2);
    out.push((h2, CenterSet::new(&h2, vec![b, h2.exp_map(&b, 0.8, &[0.6, 0.8])], vec![1.2, 0.9]).unwrap()));
    out
}

#[test]
fn roots_do_not_depend_on_the_scale() {
    for (m, cs) in configurations() {
        let reference = solve_spectrum(&m, &cs, &q(), 1e-13).unwrap();
        for factor in [3.0, 30.0, 300.0] {
            let rg = RGState::scheme_consistent(&m, &cs, factor * cs.mu_max(), &q()).unwrap();
            let src = RgScheme { m: &m, cs: &cs, rg, quad: q() };
            let states = solve_source(&src, 1e-13).unwrap();
            assert_eq!(states.len(), reference.len(), "{m:?}");
            for (a, b) in states.iter().zip(&reference) {
                assert!((a.nu - b.nu).abs() <= 1e-8, "{m:?} M = {factor}: {} vs {}", a.nu, b.nu);
            }
        }
    }
}

#[test]
fn flowed_coupling_describes_the_same_physics() {
    // moving M → γM with the flowed coupling leaves Φ^R unchanged
    for (m, cs) in configurations().into_iter().take(3) {
        let rg = RGState::scheme_consistent(&m, &cs, 3.0 * cs.mu_max(), &q()).unwrap();
        for gamma in [2.0, 10.0, 100.0] {
            let direct = RGState::scheme_consistent(&m, &cs, gamma * rg.scale, &q()).unwrap();
            let flowed = rg.flowed(gamma).unwrap();
            assert!((flowed.coupling - direct.coupling).abs() <= 1e-9 * direct.coupling.abs(), "{m:?} {gamma}");
            let a = renormalized_phi(&m, &cs, &flowed, 1.3, &q()).unwrap();
            let b = renormalized_phi(&m, &cs, &rg, 1.3, &q()).unwrap();
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                assert!((x - y).abs() <= 1e-9 * a.norm());
            }
        }
    }
}

#[test]
fn beta_matches_flow_differences() {
    for lam in [0.05, 0.5, 1.0, 2.0 * PI, 10.0, 40.0] {
        let b = beta(2, lam);
        assert!((beta_from_flow(2, lam, 1e-6).unwrap() - b).abs() <= 1e-6 * b.abs());
    }
    for lam in [-20.0, -1.0, 0.3, 4.0, 4.0 * PI, 20.0, 60.0] {
        let b = beta(3, lam);
        let fd = beta_from_flow(3, lam, 1e-6).unwrap();
        assert!((fd - b).abs() <= 1e-6 * b.abs().max(lam.abs()), "{lam}: {fd} {b}");
    }
}

#[test]
fn two_dimensional_flow_is_asymptotically_free() {
    for lam in [0.1, 1.0, 2.0 * PI, 30.0] {
        let mut prev = lam;
        for i in 1..=40 {
            let g = 1.0 + 0.5 * i as f64;
            let next = flow_coupling(2, lam, g).unwrap();
            assert!(next < prev);
            prev = next;
        }
    }
    assert!(matches!(flow_coupling(2, 2.0 * PI, 0.1), Err(Error::LandauPole { .. })));
}

#[test]
fn three_dimensional_fixed_point() {
    let star = 4.0 * PI;
    for g in [0.1, 0.5, 2.0, E, 50.0, 1e4] {
        assert!((flow_coupling(3, star, g).unwrap() - star).abs() <= 1e-12 * star);
        for lam in [0.5, 5.0, 12.0] {
            assert!(flow_coupling(3, lam, g).unwrap() < star);
        }
    }
}

#[test]
fn scaling_covariance_holds() {
    for (m, cs) in configurations() {
        let rg = RGState::scheme_consistent(&m, &cs, 3.0 * cs.mu_max(), &q()).unwrap();
        for gamma in [0.5, 2.0, E] {
            let r = scaling_covariance_check(&m, &cs, &rg, gamma, -1.7, &q()).unwrap();
            assert!(r <= 1e-8, "{m:?} {gamma}: {r}");
        }
        assert_eq!(scaling_covariance_check(&m, &cs, &rg, 1.0, -1.7, &q()).unwrap(), 0.0);
    }
}

#[test]
fn flat_plane_coupling_values() {
    let m = ManifoldSpec::flat(2).unwrap();
    let cs = CenterSet::new(&m, vec![Point::new(&[0.0, 0.0]).unwrap()], vec![1.3]).unwrap();
    let rg = RGState::scheme_consistent(&m, &cs, E * 1.3, &q()).unwrap();
    assert!((rg.coupling - 2.0 * PI).abs() < 1e-9);
    assert!((rg.flowed(E).unwrap().coupling - PI).abs() < 1e-9);
    let phi = renormalized_phi(&m, &cs, &rg, 1.3, &q()).unwrap();
    assert!(phi.get(0, 0).abs() < 1e-10);
}
