use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Largest admissible modulus of a parameter.
pub const MAX_MODULUS: f64 = 1.0 - 1e-9;
/// Smallest admissible separation between two parameters of a distinct sequence.
pub const MIN_SEPARATION: f64 = 1e-9;

/// Blaschke parameters `α_0 = 0, α_1, …, α_N` in the open unit disk.
///
/// [`PointSequence::new`] enforces pairwise distinct parameters, the setting in
/// which partial fractions and the `W2`/`W2′` systems make sense.
/// [`PointSequence::allowing_repeats`] drops that requirement for workflows
/// that only touch the Blaschke system (constant tails, the classical case).
#[derive(Debug, Clone, PartialEq)]
pub struct PointSequence {
    alphas: Vec<C64>,
    divergence_sum: f64,
    distinct: bool,
}

impl PointSequence {
    pub fn new(alphas: Vec<C64>) -> Result<Self> {
        let seq = Self::allowing_repeats(alphas)?;
        if !seq.distinct {
            let (j, k) = seq.closest_pair().unwrap_or((0, 0));
            return Err(Error::InvalidPoints(format!(
                "alpha_{j} = {} and alpha_{k} = {} are closer than {MIN_SEPARATION:e}",
                seq.alphas[j], seq.alphas[k]
            )));
        }
        Ok(seq)
    }

    pub fn allowing_repeats(alphas: Vec<C64>) -> Result<Self> {
        match alphas.first() {
            None => return Err(Error::InvalidPoints("empty sequence".into())),
            Some(a0) if *a0 != C64::new(0.0, 0.0) => {
                return Err(Error::InvalidPoints(format!("alpha_0 must be 0, got {a0}")))
            }
            _ => {}
        }
        for (k, a) in alphas.iter().enumerate() {
            if !(a.re.is_finite() && a.im.is_finite()) || a.norm() > MAX_MODULUS {
                return Err(Error::InvalidPoints(format!(
                    "alpha_{k} = {a} is not inside the disk |z| <= 1 - 1e-9"
                )));
            }
        }
        let divergence_sum = alphas.iter().map(|a| 1.0 - a.norm()).sum();
        let mut seq = PointSequence {
            alphas,
            divergence_sum,
            distinct: true,
        };
        seq.distinct = seq.closest_pair().is_none();
        Ok(seq)
    }

    /// `α_k = 0` for every `k`: the classical stationary setting.
    pub fn classical(n: usize) -> Self {
        Self::allowing_repeats(vec![C64::new(0.0, 0.0); n + 1]).expect("zeros are valid")
    }

    /// `α_0 = 0` followed by `n` copies of `alpha`.
    pub fn constant_tail(alpha: C64, n: usize) -> Result<Self> {
        let mut v = vec![C64::new(0.0, 0.0)];
        v.extend(std::iter::repeat_n(alpha, n));
        Self::allowing_repeats(v)
    }

    fn closest_pair(&self) -> Option<(usize, usize)> {
        for j in 0..self.alphas.len() {
            for k in (j + 1)..self.alphas.len() {
                if (self.alphas[j] - self.alphas[k]).norm() <= MIN_SEPARATION {
                    return Some((j, k));
                }
            }
        }
        None
    }

    pub fn alphas(&self) -> &[C64] {
        &self.alphas
    }

    pub fn alpha(&self, k: usize) -> C64 {
        self.alphas[k]
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    /// Largest usable basis index `N`.
    pub fn max_index(&self) -> usize {
        self.alphas.len() - 1
    }

    /// Partial sum `Σ (1 - |α_k|)`.
    pub fn divergence_sum(&self) -> f64 {
        self.divergence_sum
    }

    pub fn is_distinct(&self) -> bool {
        self.distinct
    }

    /// True when every parameter is zero.
    pub fn is_classical(&self) -> bool {
        self.alphas.iter().all(|a| *a == C64::new(0.0, 0.0))
    }

    /// Whether `α_lo..=α_hi` are pairwise distinct.
    pub fn distinct_range(&self, lo: usize, hi: usize) -> bool {
        for j in lo..=hi {
            for k in (j + 1)..=hi {
                if (self.alphas[j] - self.alphas[k]).norm() <= MIN_SEPARATION {
                    return false;
                }
            }
        }
        true
    }

    /// The first `n + 1` parameters.
    pub fn truncate(&self, n: usize) -> Result<Self> {
        if n > self.max_index() {
            return Err(Error::InvalidPoints(format!(
                "cannot truncate {} points to index {n}",
                self.len()
            )));
        }
        Self::allowing_repeats(self.alphas[..=n].to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonzero_alpha0_and_outside_points() {
        assert!(PointSequence::new(vec![C64::new(0.1, 0.0)]).is_err());
        assert!(PointSequence::new(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]).is_err());
        assert!(PointSequence::new(vec![]).is_err());
    }

    #[test]
    fn distinctness_is_enforced_or_recorded() {
        let v = vec![C64::new(0.0, 0.0), C64::new(0.5, 0.0), C64::new(0.5, 0.0)];
        assert!(PointSequence::new(v.clone()).is_err());
        let seq = PointSequence::allowing_repeats(v).unwrap();
        assert!(!seq.is_distinct());
        assert!(seq.distinct_range(0, 1));
    }

    #[test]
    fn divergence_sum_is_partial_sum() {
        let seq = PointSequence::new(vec![C64::new(0.0, 0.0), C64::new(0.5, 0.0), C64::new(0.0, -0.3)]).unwrap();
        assert!((seq.divergence_sum() - (1.0 + 0.5 + 0.7)).abs() < 1e-15);
    }
}
