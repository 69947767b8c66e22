//! Forward, backward and mixed one-step predictors and their innovation
//! energies.
//!
//! Each report carries the energy twice: from the Gram–Schmidt family and
//! from an independent solve of the Gram normal equations. Forward reports in
//! the Blaschke system add a third value from the reproducing kernel at
//! `α_n`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisSystem, SystemId};
use crate::error::{Error, Result};
use crate::linalg::projection_residual;
use crate::measure::CircleMeasure;
use crate::orf::{orthonormalize, LaurentOrdering, LaurentOrfFamily, OrfFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionKind {
    Forward,
    Backward,
    MixedSym,
    MixedPlus,
    MixedMinus,
}

impl std::str::FromStr for PredictionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(PredictionKind::Forward),
            "backward" => Ok(PredictionKind::Backward),
            "mixed_sym" | "sym" => Ok(PredictionKind::MixedSym),
            "mixed_plus" | "plus" => Ok(PredictionKind::MixedPlus),
            "mixed_minus" | "minus" => Ok(PredictionKind::MixedMinus),
            other => Err(Error::config("kind", format!("unknown prediction kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub orf_vs_oracle: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_vs_orf: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorReport {
    pub kind: PredictionKind,
    pub n: usize,
    /// Signed basis indices of the conditioning span.
    pub conditioning: Vec<isize>,
    /// Predictor coefficients over `conditioning`, as `[re, im]` pairs.
    pub coefficients: Vec<C64>,
    pub energy_orf: f64,
    pub energy_oracle: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_eval: Option<f64>,
    pub residuals: Residuals,
}

fn report(
    kind: PredictionKind,
    n: usize,
    conditioning: Vec<isize>,
    coefficients: Vec<C64>,
    energy_orf: f64,
    energy_oracle: f64,
    energy_eval: Option<f64>,
) -> PredictorReport {
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
    PredictorReport {
        kind,
        n,
        conditioning,
        coefficients,
        energy_orf,
        energy_oracle,
        energy_eval,
        residuals: Residuals {
            orf_vs_oracle: rel(energy_orf, energy_oracle),
            eval_vs_orf: energy_eval.map(|e| rel(e, energy_orf)),
        },
    }
}

/// Projection of `w_n` on `span{w_0..w_{n-1}}`; the innovation is `Φ_n`.
pub fn forward_predict(family: &OrfFamily, n: usize) -> Result<PredictorReport> {
    if n == 0 || n > family.n() {
        return Err(Error::DimensionMismatch(format!(
            "forward prediction needs 1 <= n <= {}, got {n}",
            family.n()
        )));
    }
    let coefficients: Vec<C64> = (0..n).map(|s| -family.monic_coeffs()[(n, s)]).collect();
    let span: Vec<usize> = (0..n).collect();
    let (_, energy_oracle) = projection_residual(family.gram(), n, &span);
    let energy_eval = if family.system().id() == SystemId::W1 {
        let a = family.system().points().alpha(n);
        Some(1.0 / family.kernel_diagonal(n, a)?.sqrt())
    } else {
        None
    };
    Ok(report(
        PredictionKind::Forward,
        n,
        span.iter().map(|&s| s as isize).collect(),
        coefficients,
        family.norms()[n],
        energy_oracle,
        energy_eval,
    ))
}

/// Projection of `w_0` on `span{w_1..w_n}`; the innovation is `Φ*_n`.
pub fn backward_predict(family: &OrfFamily, n: usize) -> Result<PredictorReport> {
    if n == 0 || n > family.n() {
        return Err(Error::DimensionMismatch(format!(
            "backward prediction needs 1 <= n <= {}, got {n}",
            family.n()
        )));
    }
    let coefficients: Vec<C64> = (1..=n).map(|s| -family.reversed_coeffs()[(n, s)]).collect();
    let span: Vec<usize> = (1..=n).collect();
    let (_, energy_oracle) = projection_residual(family.gram(), 0, &span);
    Ok(report(
        PredictionKind::Backward,
        n,
        span.iter().map(|&s| s as isize).collect(),
        coefficients,
        family.reversed_norms()[n],
        energy_oracle,
        None,
    ))
}

/// Positions of the conditioning set and the ordering it lives in.
pub fn mixed_layout(kind: PredictionKind, n: usize) -> Result<(LaurentOrdering, usize)> {
    match kind {
        PredictionKind::MixedSym => Ok((LaurentOrdering::Chi, 2 * n)),
        PredictionKind::MixedPlus => Ok((LaurentOrdering::Chi, 2 * n + 1)),
        PredictionKind::MixedMinus => Ok((LaurentOrdering::X, 2 * n + 1)),
        other => Err(Error::Unsupported(format!("{other:?} is not a mixed prediction"))),
    }
}

/// Projection of `w_0` on the mixed conditioning span of `kind`:
/// `{±1..±n}` (sym), `{-n..n+1} \ {0}` (plus) or `{-(n+1)..n} \ {0}` (minus).
pub fn mixed_predict(laurent: &LaurentOrfFamily, n: usize, kind: PredictionKind) -> Result<PredictorReport> {
    let (ordering, m) = mixed_layout(kind, n)?;
    if laurent.ordering() != ordering {
        return Err(Error::DimensionMismatch(format!(
            "{kind:?} needs the {ordering:?} ordering, family has {:?}",
            laurent.ordering()
        )));
    }
    if m == 0 || m > laurent.positions() {
        return Err(Error::DimensionMismatch(format!(
            "{kind:?} at n = {n} needs {m} Laurent positions, family has {}",
            laurent.positions()
        )));
    }
    let coefficients: Vec<C64> = (1..=m).map(|s| -laurent.starred_coeffs()[(m, s)]).collect();
    let span: Vec<usize> = (1..=m).collect();
    let (_, energy_oracle) = projection_residual(laurent.gram(), 0, &span);
    Ok(report(
        kind,
        n,
        laurent.indices()[1..=m].to_vec(),
        coefficients,
        laurent.starred_norms()[m],
        energy_oracle,
        None,
    ))
}

/// Limit of the forward energies along `α_{m_n} → alpha`:
/// `sqrt(1 - |α|²) |S(α)|` inside the disk and 0 on the circle.
pub fn asymptotic_energy_limit(measure: &CircleMeasure, alpha: C64) -> Result<f64> {
    let r = alpha.norm();
    if (r - 1.0).abs() <= 1e-12 {
        return Ok(0.0);
    }
    if r > 1.0 {
        return Err(Error::InvalidPoints(format!(
            "limit point {alpha} lies outside the closed disk"
        )));
    }
    Ok((1.0 - r * r).sqrt() * measure.szego_function(alpha)?.norm())
}

/// Forward energies `E_1..E_n` in the Blaschke system.
pub fn energy_trajectory(system: &BasisSystem, measure: &CircleMeasure) -> Result<Vec<f64>> {
    if system.id() != SystemId::W1 {
        return Err(Error::Unsupported(
            "energy trajectories are defined for the w1 system".into(),
        ));
    }
    let family = orthonormalize(system, measure)?;
    Ok(family.norms()[1..].to_vec())
}
