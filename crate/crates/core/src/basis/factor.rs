use num_complex::Complex64 as C64;

use super::BasisSystem;
use crate::error::{Error, Result};
use crate::linalg::{lstsq, poly_eval, poly_roots, CMatrix, CVector};
use crate::measure::grid_nodes;

/// Roots closer than this to the circle are treated as boundary roots.
/// Double roots on the circle split by about the square root of machine
/// precision, so the window is wider than the final residual tolerance.
const BOUNDARY_TOL: f64 = 1e-6;
const FACTOR_TOL: f64 = 1e-8;

/// An outer `h ∈ L_n` with `|h|^2 = f` on the circle.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFactor {
    /// Numerator polynomial of `h = p / ∏(1 - ᾱ_k t)`, ascending powers.
    pub numerator: Vec<C64>,
    /// Coordinates of `h` in the system it was computed for.
    pub coordinates: Vec<C64>,
    /// Worst `|f - |h|^2|` on an offset grid, relative to `max f`.
    pub residual: f64,
    denominator_points: Vec<C64>,
}

impl SpectralFactor {
    pub fn eval(&self, t: C64) -> C64 {
        let mut den = C64::new(1.0, 0.0);
        for a in &self.denominator_points {
            den *= C64::new(1.0, 0.0) - a.conj() * t;
        }
        poly_eval(&self.numerator, t) / den
    }
}

fn real_part_combination(system: &BasisSystem, coeffs: &[C64], t: C64) -> Result<f64> {
    let w = system.eval_all(t)?;
    Ok(2.0 * coeffs.iter().zip(&w).map(|(a, v)| (a * v).re).sum::<f64>())
}

/// Factors `f(t) = 2 Re Σ_{k<=n} a_k w_k(t)`, assumed nonnegative on the
/// circle, as `|h(t)|^2` with `h ∈ L_n` free of zeros in the open disk.
pub fn fejer_riesz_factor(system: &BasisSystem, coeffs: &[C64]) -> Result<SpectralFactor> {
    let n = system.n();
    if coeffs.len() != n + 1 {
        return Err(Error::DimensionMismatch(format!(
            "expected {} coefficients, got {}",
            n + 1,
            coeffs.len()
        )));
    }
    let alphas = &system.points().alphas()[1..=n];
    let m = 64usize.max(8 * (n + 1)).next_power_of_two();
    let nodes = grid_nodes(m);
    let f: Vec<f64> = nodes
        .iter()
        .map(|&t| real_part_combination(system, coeffs, t))
        .collect::<Result<_>>()?;
    let fmax = f.iter().copied().fold(0.0, f64::max);
    let fmin = f.iter().copied().fold(f64::INFINITY, f64::min);
    if fmax <= 0.0 || fmin < -1e-10 * fmax {
        return Err(Error::Indefinite {
            min_eig: fmin,
            tol: 1e-10 * fmax.max(0.0),
        });
    }

    // g = f ∏|1 - ᾱ_k t|^2 is a trigonometric polynomial of degree <= n.
    let g: Vec<f64> = nodes
        .iter()
        .zip(&f)
        .map(|(&t, &fv)| {
            fv * alphas
                .iter()
                .map(|a| (C64::new(1.0, 0.0) - a.conj() * t).norm_sqr())
                .product::<f64>()
        })
        .collect();
    let fourier = |k: isize| -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (j, gv) in g.iter().enumerate() {
            acc += C64::from_polar(*gv, -2.0 * std::f64::consts::PI * (k * j as isize) as f64 / m as f64);
        }
        acc / m as f64
    };
    let gk: Vec<C64> = (0..=n as isize).map(fourier).collect();
    let scale = gk.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let degree = (0..=n).rev().find(|&k| gk[k].norm() > 1e-13 * scale).unwrap_or(0);

    // z^d g(z) has coefficient g_{i-d} at z^i, with g_{-k} = conj(g_k).
    let poly: Vec<C64> = (0..=2 * degree)
        .map(|i| {
            let k = i as isize - degree as isize;
            if k >= 0 {
                gk[k as usize]
            } else {
                gk[(-k) as usize].conj()
            }
        })
        .collect();
    let roots = poly_roots(&poly)?;
    let mut chosen: Vec<C64> = roots
        .iter()
        .copied()
        .filter(|r| r.norm() > 1.0 + BOUNDARY_TOL)
        .collect();
    let mut boundary: Vec<C64> = roots
        .iter()
        .copied()
        .filter(|r| (r.norm() - 1.0).abs() <= BOUNDARY_TOL)
        .map(|r| r / r.norm())
        .collect();
    if boundary.len() % 2 == 1 {
        return Err(Error::NoConvergence(format!(
            "odd number ({}) of boundary roots in spectral factorization",
            boundary.len()
        )));
    }
    // Pair each boundary root with its nearest neighbour and keep one per pair.
    while let Some(r) = boundary.pop() {
        let (idx, _) = boundary
            .iter()
            .enumerate()
            .map(|(i, s)| (i, (s - r).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("even count");
        let partner = boundary.swap_remove(idx);
        let mid = r + partner;
        chosen.push(if mid.norm() > 0.0 { mid / mid.norm() } else { r });
    }
    if chosen.len() != degree {
        return Err(Error::NoConvergence(format!(
            "spectral factor has {} roots outside the disk, expected {degree}",
            chosen.len()
        )));
    }

    let mut numerator = vec![C64::new(1.0, 0.0)];
    for r in &chosen {
        let mut next = vec![C64::new(0.0, 0.0); numerator.len() + 1];
        for (i, c) in numerator.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= c * r;
        }
        numerator = next;
    }
    let p_energy: f64 = nodes.iter().map(|&t| poly_eval(&numerator, t).norm_sqr()).sum();
    let g_energy: f64 = g.iter().sum();
    let amp = (g_energy / p_energy).sqrt();
    for c in numerator.iter_mut() {
        *c *= amp;
    }

    let mut factor = SpectralFactor {
        numerator,
        coordinates: Vec::new(),
        residual: 0.0,
        denominator_points: alphas.to_vec(),
    };

    let fit_nodes = grid_nodes(256usize.max(16 * (n + 1)).next_power_of_two());
    let a = CMatrix::from_fn(fit_nodes.len(), n + 1, |r, c| {
        system.eval(c, fit_nodes[r]).unwrap_or_default()
    });
    let b = CVector::from_fn(fit_nodes.len(), |r, _| factor.eval(fit_nodes[r]));
    factor.coordinates = lstsq(&a, &b, 1e-13, "spectral factor coordinates")?
        .iter()
        .copied()
        .collect();

    let shift = C64::from_polar(1.0, std::f64::consts::PI / m as f64 * 0.57);
    for &t in &nodes {
        let t = t * shift;
        let target = real_part_combination(system, coeffs, t)?;
        factor.residual = factor.residual.max((target - factor.eval(t).norm_sqr()).abs() / fmax);
    }
    if !(factor.residual < FACTOR_TOL) {
        return Err(Error::ResidualTooLarge {
            what: "spectral factorization".into(),
            residual: factor.residual,
            tol: FACTOR_TOL,
        });
    }
    Ok(factor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{PointSequence, SystemId};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn factors_a_positive_blaschke_combination() {
        let p = PointSequence::new(vec![c(0.0, 0.0), c(0.4, 0.2), c(-0.5, 0.1)]).unwrap();
        let sys = BasisSystem::new(SystemId::W1, p, 2).unwrap();
        // 2 Re(1.5 + 0.4 B_1 + 0.3i B_2) >= 3 - 1.4 > 0
        let f = fejer_riesz_factor(&sys, &[c(1.5, 0.0), c(0.4, 0.0), c(0.0, 0.3)]).unwrap();
        assert!(f.residual < 1e-8);
        for k in 0..16 {
            let z = C64::from_polar(0.9 * k as f64 / 16.0, 0.7 * k as f64);
            assert!(f.eval(z).norm() > 0.0);
        }
    }

    #[test]
    fn handles_a_double_boundary_root() {
        // f = |1 - t|^2 = 2 - t - conj(t) in the classical system.
        let sys = BasisSystem::new(SystemId::W1, PointSequence::classical(1), 1).unwrap();
        let f = fejer_riesz_factor(&sys, &[c(1.0, 0.0), c(-1.0, 0.0)]).unwrap();
        assert!(f.residual < 1e-8, "{}", f.residual);
        assert!((f.eval(c(1.0, 0.0))).norm() < 1e-6);
    }

    #[test]
    fn rejects_negative_functions() {
        let sys = BasisSystem::new(SystemId::W1, PointSequence::classical(1), 1).unwrap();
        assert!(matches!(
            fejer_riesz_factor(&sys, &[c(0.2, 0.0), c(1.0, 0.0)]),
            Err(Error::Indefinite { .. })
        ));
    }
}
