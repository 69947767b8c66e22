//! Blaschke factors and the four rational basis systems of `L_n`.
//!
//! All four systems span the same space `L_n` of rational functions with
//! poles at `1/ᾱ_1, …, 1/ᾱ_n`:
//!
//! | id    | `w_k(t)`, `k >= 1`                   |
//! |-------|--------------------------------------|
//! | `W1`  | `B_k = ζ_1 ⋯ ζ_k`                    |
//! | `W2`  | `1/(1 - ᾱ_k t)`                      |
//! | `W2P` | `(1 - |α_k|)/(1 - ᾱ_k t)`            |
//! | `W3`  | `t^k / ∏_{j<=k} (1 - ᾱ_j t)`         |
//!
//! and `w_0 = 1` in every system.

mod change;
mod factor;
mod points;
mod structure;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use change::{change_of_basis_matrix, partial_fraction_coeffs, PartialFractions, TriangularMatrix};
pub use factor::{fejer_riesz_factor, SpectralFactor};
pub use points::{PointSequence, MAX_MODULUS, MIN_SEPARATION};
pub use structure::{structure_coeffs, StructureCoeffs, StructureTable};

const POLE_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SystemId {
    #[serde(rename = "w1")]
    W1,
    #[serde(rename = "w2")]
    W2,
    #[serde(rename = "w2p")]
    W2P,
    #[serde(rename = "w3")]
    W3,
}

impl SystemId {
    pub const ALL: [SystemId; 4] = [SystemId::W1, SystemId::W2, SystemId::W2P, SystemId::W3];

    pub fn as_str(self) -> &'static str {
        match self {
            SystemId::W1 => "w1",
            SystemId::W2 => "w2",
            SystemId::W2P => "w2p",
            SystemId::W3 => "w3",
        }
    }
}

impl fmt::Display for SystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SystemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "w1" => Ok(SystemId::W1),
            "w2" => Ok(SystemId::W2),
            "w2p" | "w2'" => Ok(SystemId::W2P),
            "w3" => Ok(SystemId::W3),
            other => Err(Error::config("system", format!("unknown system `{other}`"))),
        }
    }
}

fn pole_guard(denom: C64, what: &str, t: C64) -> Result<C64> {
    if denom.norm() < POLE_TOL {
        return Err(Error::PoleHit {
            what: what.to_string(),
            value: denom.norm(),
            t: t.to_string(),
        });
    }
    Ok(denom)
}

/// `ζ_k(t) = (t - α_k)/(1 - ᾱ_k t)` for `k >= 1`.
pub fn blaschke_factor(points: &PointSequence, k: usize, t: C64) -> Result<C64> {
    if k == 0 || k > points.max_index() {
        return Err(Error::DimensionMismatch(format!(
            "Blaschke factor index {k} outside 1..={}",
            points.max_index()
        )));
    }
    let a = points.alpha(k);
    let d = pole_guard(C64::new(1.0, 0.0) - a.conj() * t, "1 - conj(alpha_k) t", t)?;
    Ok((t - a) / d)
}

/// `B_{jk}(t) = ∏_{s=j+1}^{k} ζ_s(t)`; `B_{kk} = 1` and `B_{0k} = B_k`.
pub fn blaschke_product(points: &PointSequence, j: usize, k: usize, t: C64) -> Result<C64> {
    if j > k {
        return Err(Error::DimensionMismatch(format!(
            "Blaschke product needs j <= k, got ({j}, {k})"
        )));
    }
    let mut acc = C64::new(1.0, 0.0);
    for s in (j + 1)..=k {
        acc *= blaschke_factor(points, s, t)?;
    }
    Ok(acc)
}

/// One of the four systems over a point sequence, truncated at index `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSystem {
    id: SystemId,
    points: PointSequence,
    n: usize,
}

impl BasisSystem {
    pub fn new(id: SystemId, points: PointSequence, n: usize) -> Result<Self> {
        if n > points.max_index() {
            return Err(Error::InvalidPoints(format!(
                "basis index {n} exceeds the {} available parameters",
                points.max_index()
            )));
        }
        if matches!(id, SystemId::W2 | SystemId::W2P) && !points.distinct_range(0, n) {
            return Err(Error::RepeatedPoints(format!(
                "system {id} degenerates when alphas repeat or vanish"
            )));
        }
        Ok(BasisSystem { id, points, n })
    }

    pub fn id(&self) -> SystemId {
        self.id
    }

    pub fn points(&self) -> &PointSequence {
        &self.points
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Same system and points, different maximal index.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(self.id, self.points.clone(), n)
    }

    pub fn with_id(&self, id: SystemId) -> Result<Self> {
        Self::new(id, self.points.clone(), self.n)
    }

    /// `w_k(t)`.
    pub fn eval(&self, k: usize, t: C64) -> Result<C64> {
        if k > self.n {
            return Err(Error::DimensionMismatch(format!(
                "basis index {k} exceeds n = {}",
                self.n
            )));
        }
        if k == 0 {
            return Ok(C64::new(1.0, 0.0));
        }
        let one = C64::new(1.0, 0.0);
        let alphas = self.points.alphas();
        match self.id {
            SystemId::W1 => blaschke_product(&self.points, 0, k, t),
            SystemId::W2 => {
                let d = pole_guard(one - alphas[k].conj() * t, "1 - conj(alpha_k) t", t)?;
                Ok(one / d)
            }
            SystemId::W2P => {
                let d = pole_guard(one - alphas[k].conj() * t, "1 - conj(alpha_k) t", t)?;
                Ok((1.0 - alphas[k].norm()) / d)
            }
            SystemId::W3 => {
                let mut acc = one;
                for a in &alphas[1..=k] {
                    acc *= t / pole_guard(one - a.conj() * t, "1 - conj(alpha_j) t", t)?;
                }
                Ok(acc)
            }
        }
    }

    /// `[w_0(t), …, w_n(t)]`, sharing the running products.
    pub fn eval_all(&self, t: C64) -> Result<Vec<C64>> {
        let one = C64::new(1.0, 0.0);
        let alphas = self.points.alphas();
        let mut out = Vec::with_capacity(self.n + 1);
        out.push(one);
        let mut acc = one;
        for (k, a) in alphas.iter().enumerate().take(self.n + 1).skip(1) {
            let d = pole_guard(one - a.conj() * t, "1 - conj(alpha_k) t", t)?;
            let v = match self.id {
                SystemId::W1 => {
                    acc *= (t - a) / d;
                    acc
                }
                SystemId::W2 => one / d,
                SystemId::W2P => (1.0 - alphas[k].norm()) / d,
                SystemId::W3 => {
                    acc *= t / d;
                    acc
                }
            };
            out.push(v);
        }
        Ok(out)
    }

    /// `w_s` for signed `s`, with `w_{-s}(t) = conj(w_s(1/t̄))` (equal to
    /// `conj(w_s(t))` on the circle).
    pub fn eval_signed(&self, s: isize, t: C64) -> Result<C64> {
        if s >= 0 {
            self.eval(s as usize, t)
        } else if (t.norm() - 1.0).abs() < 1e-14 {
            Ok(self.eval((-s) as usize, t)?.conj())
        } else {
            Ok(self.eval((-s) as usize, C64::new(1.0, 0.0) / t.conj())?.conj())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pts(v: &[C64]) -> PointSequence {
        PointSequence::new(v.to_vec()).unwrap()
    }

    #[test]
    fn blaschke_factor_examples() {
        let p = pts(&[c(0.0, 0.0), c(0.5, 0.0)]);
        assert_eq!(blaschke_factor(&p, 1, c(1.0, 0.0)).unwrap(), c(1.0, 0.0));
        assert_eq!(blaschke_factor(&p, 1, c(0.5, 0.0)).unwrap(), c(0.0, 0.0));
        let q = pts(&[c(0.0, 0.0), c(0.0, 0.3)]);
        let v = blaschke_factor(&q, 1, c(0.0, 1.0)).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-12);
        assert!(blaschke_factor(&p, 0, c(0.1, 0.0)).is_err());
    }

    #[test]
    fn pole_is_detected() {
        let p = pts(&[c(0.0, 0.0), c(0.5, 0.0)]);
        assert!(matches!(
            blaschke_factor(&p, 1, c(2.0, 0.0)),
            Err(Error::PoleHit { .. })
        ));
    }

    #[test]
    fn blaschke_products() {
        let p = pts(&[c(0.0, 0.0), c(0.5, 0.0), c(-0.3, 0.0)]);
        assert_eq!(blaschke_product(&p, 2, 2, c(0.7, 0.1)).unwrap(), c(1.0, 0.0));
        assert!((blaschke_product(&p, 0, 2, c(0.0, 0.0)).unwrap() - c(-0.15, 0.0)).norm() < 1e-15);
        let q = pts(&[
            c(0.0, 0.0),
            c(0.5, 0.1),
            c(-0.3, 0.6),
            c(0.2, -0.7),
            c(0.8, 0.0),
            c(-0.1, -0.1),
        ]);
        for k in 0..20 {
            let t = C64::from_polar(1.0, 0.37 * k as f64);
            assert!((blaschke_product(&q, 0, 5, t).unwrap().norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn eval_basis_examples() {
        let p = pts(&[c(0.0, 0.0), c(0.5, 0.0), c(-0.3, 0.2)]);
        for id in SystemId::ALL {
            let sys = BasisSystem::new(id, p.clone(), 2).unwrap();
            assert_eq!(sys.eval(0, c(0.3, 0.9)).unwrap(), c(1.0, 0.0));
        }
        let w2 = BasisSystem::new(SystemId::W2, p.clone(), 2).unwrap();
        assert!((w2.eval(1, c(-1.0, 0.0)).unwrap() - c(1.0 / 1.5, 0.0)).norm() < 1e-15);
        let w1 = BasisSystem::new(SystemId::W1, p.clone(), 2).unwrap();
        for k in 0..10 {
            let t = C64::from_polar(1.0, 2.0 * PI * k as f64 / 10.0 + 0.2);
            let direct = blaschke_factor(&p, 1, t).unwrap() * blaschke_factor(&p, 2, t).unwrap();
            assert!((w1.eval(2, t).unwrap() - direct).norm() < 1e-13);
            assert!((w1.eval(2, t).unwrap().norm() - 1.0).abs() < 1e-12);
            for id in SystemId::ALL {
                let sys = BasisSystem::new(id, p.clone(), 2).unwrap();
                let all = sys.eval_all(t).unwrap();
                for (j, v) in all.iter().enumerate() {
                    assert!((v - sys.eval(j, t).unwrap()).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn w2_rejects_repeats_but_w1_accepts() {
        let p = PointSequence::constant_tail(c(0.5, 0.0), 3).unwrap();
        assert!(BasisSystem::new(SystemId::W1, p.clone(), 3).is_ok());
        assert!(matches!(
            BasisSystem::new(SystemId::W2, p, 3),
            Err(Error::RepeatedPoints(_))
        ));
    }

    #[test]
    fn system_ids_parse() {
        assert_eq!("w2p".parse::<SystemId>().unwrap(), SystemId::W2P);
        assert!("w9".parse::<SystemId>().is_err());
    }
}
