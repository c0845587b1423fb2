#![allow(dead_code)]

use heatpoint_core::{CenterSet, ManifoldSpec, Point};
use rand::Rng;

/// `n` centers with pairwise separation at least `min_sep` and `μ ∈ [0.5, 2]`.
/// Flat points lie in a cube of side 3, hyperbolic ones near `(0, …, 1)`.
pub fn random_centers<R: Rng>(rng: &mut R, m: &ManifoldSpec, n: usize, min_sep: f64) -> CenterSet {
    let dim = m.dim();
    let mut pts: Vec<Point> = Vec::with_capacity(n);
    while pts.len() < n {
        let mut c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.5..1.5)).collect();
        match m {
            ManifoldSpec::Hyperbolic { .. } => c[dim - 1] = rng.gen_range(-1.0f64..1.0).exp(),
            ManifoldSpec::Sphere2 { .. } => {
                c[0] = rng.gen_range(0.0..std::f64::consts::PI);
                c[1] = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
            }
            ManifoldSpec::FlatEuclidean { .. } => {}
        }
        let p = Point::new(&c).unwrap();
        if pts.iter().all(|q| m.geodesic_distance(q, &p).unwrap() >= min_sep) {
            pts.push(p);
        }
    }
    let mu = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
    CenterSet::new(m, pts, mu).unwrap()
}

/// Two centers at distance `d` along the first axis.
pub fn pair(m: &ManifoldSpec, mu: (f64, f64), d: f64) -> CenterSet {
    let (a, b) = match (*m, m.dim()) {
        (ManifoldSpec::FlatEuclidean { .. }, 2) => (vec![0.0, 0.0], vec![d, 0.0]),
        (ManifoldSpec::FlatEuclidean { .. }, _) => (vec![0.0, 0.0, 0.0], vec![d, 0.0, 0.0]),
        _ => panic!("pair() is for flat space"),
    };
    CenterSet::new(m, vec![Point::new(&a).unwrap(), Point::new(&b).unwrap()], vec![mu.0, mu.1]).unwrap()
}
