//! Seeded random problem instances for tests, benches and examples.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::PointSequence;
use crate::measure::CircleMeasure;

/// A point in the disk `|z| < radius`, uniform in area.
pub fn disk_point(rng: &mut impl Rng, radius: f64) -> C64 {
    let r = radius * rng.random::<f64>().sqrt();
    C64::from_polar(r, rng.random_range(0.0..std::f64::consts::TAU))
}

/// `∏ (1 - r_i z)` for `degree` random `r_i` with `|r_i| < radius`.
pub fn stable_poly(rng: &mut impl Rng, degree: usize, radius: f64) -> Vec<C64> {
    let mut p = vec![C64::new(1.0, 0.0)];
    for _ in 0..degree {
        let r = disk_point(rng, radius);
        let mut next = vec![C64::new(0.0, 0.0); p.len() + 1];
        for (i, c) in p.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= r * c;
        }
        p = next;
    }
    p
}

/// Rational Szegő-class density with numerator and denominator roots of
/// modulus at least `1/0.6`.
pub fn rational_measure(rng: &mut impl Rng) -> CircleMeasure {
    let dt = rng.random_range(0..=2);
    let theta = stable_poly(rng, dt, 0.6);
    let dp = rng.random_range(1..=2);
    let phi = stable_poly(rng, dp, 0.6);
    let delta2 = rng.random_range(0.5..2.0);
    CircleMeasure::rational(theta, phi, delta2).expect("roots lie outside the closed disk")
}

/// `α_0 = 0` followed by `n` distinct points with `|α_k| < radius`.
pub fn random_points(rng: &mut impl Rng, n: usize, radius: f64) -> PointSequence {
    loop {
        let mut alphas = vec![C64::new(0.0, 0.0)];
        alphas.extend((0..n).map(|_| disk_point(rng, radius)));
        if let Ok(p) = PointSequence::new(alphas) {
            let min_gap = (0..=n)
                .flat_map(|j| ((j + 1)..=n).map(move |k| (j, k)))
                .map(|(j, k)| (p.alpha(j) - p.alpha(k)).norm())
                .fold(f64::INFINITY, f64::min);
            if min_gap > 0.05 {
                return p;
            }
        }
    }
}

/// Instance `index` of a reproducible suite of `(measure, points)` pairs.
pub fn instance(seed: u64, index: u64, n: usize) -> (CircleMeasure, PointSequence) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let measure = rational_measure(&mut rng);
    let points = random_points(&mut rng, n, 0.7);
    (measure, points)
}
