//! Sampling and filtering of varying Gaussian processes.
//!
//! Complex Gaussians are circularly symmetric: real and imaginary parts are
//! independent with variance `c/2`, so `E|X|² = c` and `E X² = 0`. Paths are
//! produced in blocks of [`BLOCK`] rows, each from its own ChaCha stream keyed
//! by `(seed, block index)`, so output does not depend on the thread count.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisSystem, TriangularMatrix};
use crate::error::{Error, Result};
use crate::linalg::{
    max_generalized_eigenvalue, mirror_upper, poly_eval, poly_roots, projection_residual, psd_factor, trace_re,
    trim_poly, CMatrix,
};
use crate::measure::CircleMeasure;
use crate::moments::{gt_from_measure, POSITIVITY_TOL};

/// Paths per RNG stream.
pub const BLOCK: usize = 1024;
const BIN_SUBNODES: usize = 8;

/// `N` sampled paths over consecutive time indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePaths {
    values: Vec<C64>,
    paths: usize,
    width: usize,
    seed: u64,
}

impl SamplePaths {
    pub fn from_rows(values: Vec<C64>, paths: usize, width: usize, seed: u64) -> Result<Self> {
        if values.len() != paths * width {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {paths} paths of width {width}",
                values.len()
            )));
        }
        Ok(SamplePaths {
            values,
            paths,
            width,
            seed,
        })
    }

    pub fn paths(&self) -> usize {
        self.paths
    }

    /// Time points per path, `n + 1`.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self, p: usize) -> &[C64] {
        &self.values[p * self.width..(p + 1) * self.width]
    }

    /// Row-major values, path after path.
    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// `Ĉ[j][k] = (1/N) Σ_p X_{p,k} conj(X_{p,j})`.
    pub fn empirical_covariance(&self) -> CMatrix {
        let w = self.width;
        let mut c = CMatrix::zeros(w, w);
        if self.paths == 0 {
            return c;
        }
        for p in 0..self.paths {
            let x = self.path(p);
            for j in 0..w {
                let xj = x[j].conj();
                for k in j..w {
                    c[(j, k)] += x[k] * xj;
                }
            }
        }
        c /= C64::new(self.paths as f64, 0.0);
        mirror_upper(&mut c);
        c
    }

    pub fn empirical_mean(&self) -> Vec<C64> {
        let mut m = vec![C64::new(0.0, 0.0); self.width];
        for p in 0..self.paths {
            for (a, x) in m.iter_mut().zip(self.path(p)) {
                *a += x;
            }
        }
        let n = self.paths.max(1) as f64;
        m.iter().map(|v| v / n).collect()
    }

    /// Coordinates whose empirical mean exceeds `5 sqrt(c_kk / N)`.
    pub fn mean_outliers(&self, covariance: &CMatrix) -> Vec<usize> {
        if self.paths == 0 {
            return Vec::new();
        }
        let n = self.paths as f64;
        self.empirical_mean()
            .iter()
            .enumerate()
            .filter(|(k, m)| m.norm() > 5.0 * (covariance[(*k, *k)].re / n).sqrt())
            .map(|(k, _)| k)
            .collect()
    }

    /// Standard deviation of the residual of regressing `X_k` on
    /// `X_0..X_{k-1}` across paths.
    pub fn regression_residual_std(&self, k: usize) -> Result<f64> {
        if k >= self.width {
            return Err(Error::DimensionMismatch(format!(
                "index {k} outside width {}",
                self.width
            )));
        }
        let c = self.empirical_covariance();
        let span: Vec<usize> = (0..k).collect();
        Ok(projection_residual(&c, k, &span).1)
    }

    /// `X_k = Σ_{s<=k} d[s][k] Y_s` on every path.
    pub fn filtered(&self, d: &TriangularMatrix) -> Result<Self> {
        if d.order() != self.width {
            return Err(Error::DimensionMismatch(format!(
                "filter order {} against path width {}",
                d.order(),
                self.width
            )));
        }
        let m = d.matrix();
        let mut out = Vec::with_capacity(self.values.len());
        for p in 0..self.paths {
            let y = self.path(p);
            for k in 0..self.width {
                out.push((0..=k).map(|s| m[(s, k)] * y[s]).sum());
            }
        }
        Self::from_rows(out, self.paths, self.width, self.seed)
    }
}

fn block_rng(seed: u64, block: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block as u64);
    rng
}

fn complex_normal(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn block_sizes(paths: usize) -> Vec<(usize, usize)> {
    (0..paths.div_ceil(BLOCK))
        .map(|b| (b, BLOCK.min(paths - b * BLOCK)))
        .collect()
}

/// Paths with `E(X_k conj(X_j)) = C[j][k]`, from an eigen-factor of `C`
/// with eigenvalues above `-1e-10 trace` clipped to zero.
pub fn sample_paths(covariance: &CMatrix, paths: usize, seed: u64) -> Result<SamplePaths> {
    let w = covariance.nrows();
    let tol = POSITIVITY_TOL * trace_re(covariance).abs();
    // X = conj(F) ξ with F F^H = C gives E(X X^H) = conj(C) = C^T.
    let f = psd_factor(covariance, tol)?.map(|v| v.conj());
    let blocks: Vec<Vec<C64>> = block_sizes(paths)
        .into_par_iter()
        .map(|(b, rows)| {
            let mut rng = block_rng(seed, b);
            let mut out = Vec::with_capacity(rows * w);
            let mut xi = vec![C64::new(0.0, 0.0); w];
            for _ in 0..rows {
                xi.iter_mut().for_each(|v| *v = complex_normal(&mut rng));
                for k in 0..w {
                    out.push((0..w).map(|c| f[(k, c)] * xi[c]).sum());
                }
            }
            out
        })
        .collect();
    SamplePaths::from_rows(blocks.concat(), paths, w, seed)
}

/// Arc `[2πb/B, 2π(b+1)/B)` containing `angle`.
pub fn bin_of_angle(angle: f64, bins: usize) -> usize {
    let x = angle.rem_euclid(2.0 * PI) / (2.0 * PI) * bins as f64;
    (x.floor() as usize).min(bins - 1)
}

/// The discretized spectral measure used by [`spectral_sample`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBins {
    /// Midpoint tags `ξ_b`.
    pub tags: Vec<C64>,
    /// `σ(I_b)` of the absolutely continuous part.
    pub masses: Vec<f64>,
    /// Bin index holding each atom.
    pub atom_bins: Vec<usize>,
}

pub fn spectral_bins(measure: &CircleMeasure, bins: usize) -> Result<SpectralBins> {
    if bins == 0 {
        return Err(Error::config("bins", "need at least one bin"));
    }
    let width = 2.0 * PI / bins as f64;
    let mut tags = Vec::with_capacity(bins);
    let mut masses = Vec::with_capacity(bins);
    for b in 0..bins {
        let lo = width * b as f64;
        tags.push(C64::from_polar(1.0, lo + 0.5 * width));
        let sub = width / BIN_SUBNODES as f64;
        let mass: f64 = (0..BIN_SUBNODES)
            .map(|i| measure.density_at_angle(lo + (i as f64 + 0.5) * sub))
            .sum::<f64>()
            / (BIN_SUBNODES * bins) as f64;
        masses.push(mass);
    }
    let atom_bins = measure
        .atoms()
        .iter()
        .map(|a| bin_of_angle(a.location.arg(), bins))
        .collect();
    Ok(SpectralBins {
        tags,
        masses,
        atom_bins,
    })
}

/// `X_k = Σ_b w_k(ξ_b) Z_b` with independent `Z_b` of variance `σ(I_b)`;
/// every atom contributes its own term at its exact location.
pub fn spectral_sample(
    system: &BasisSystem,
    measure: &CircleMeasure,
    paths: usize,
    seed: u64,
    bins: usize,
) -> Result<SamplePaths> {
    let layout = spectral_bins(measure, bins)?;
    let mut nodes = layout.tags.clone();
    let mut scales: Vec<f64> = layout.masses.iter().map(|m| m.sqrt()).collect();
    for a in measure.atoms() {
        nodes.push(a.location);
        scales.push(a.mass.sqrt());
    }
    let w = system.n() + 1;
    let basis: Vec<Vec<C64>> = nodes
        .iter()
        .zip(&scales)
        .map(|(&t, &s)| Ok(system.eval_all(t)?.into_iter().map(|v| v * s).collect()))
        .collect::<Result<_>>()?;
    let blocks: Vec<Vec<C64>> = block_sizes(paths)
        .into_par_iter()
        .map(|(b, rows)| {
            let mut rng = block_rng(seed, b);
            let mut out = vec![C64::new(0.0, 0.0); rows * w];
            for r in 0..rows {
                let row = &mut out[r * w..(r + 1) * w];
                for weights in &basis {
                    let z = complex_normal(&mut rng);
                    for (x, v) in row.iter_mut().zip(weights) {
                        *x += v * z;
                    }
                }
            }
            out
        })
        .collect();
    SamplePaths::from_rows(blocks.concat(), paths, w, seed)
}

/// `D^H C D`.
pub fn filter_covariance(covariance: &CMatrix, d: &TriangularMatrix) -> Result<CMatrix> {
    if d.order() != covariance.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "filter order {} against covariance order {}",
            d.order(),
            covariance.nrows()
        )));
    }
    let mut out = d.matrix().adjoint() * covariance * d.matrix();
    mirror_upper(&mut out);
    Ok(out)
}

/// Coefficients `ψ_j` for `j = lag_min..=lag_max` of a summable filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub psi: Vec<C64>,
    pub lag_min: isize,
    pub lag_max: isize,
    #[serde(rename = "R")]
    pub radius: f64,
    /// `Σ |ψ_j| R^{|j|}` over the stored window.
    pub weighted_norm: f64,
    /// `Σ_{j > lag_max} |ψ_j| R^j` for the discarded causal tail.
    pub tail_bound: f64,
}

impl FilterSpec {
    /// `δ_0`.
    pub fn identity() -> Self {
        FilterSpec {
            psi: vec![C64::new(1.0, 0.0)],
            lag_min: 0,
            lag_max: 0,
            radius: 1.0,
            weighted_norm: 1.0,
            tail_bound: 0.0,
        }
    }

    pub fn psi_at(&self, j: isize) -> C64 {
        if j < self.lag_min || j > self.lag_max {
            C64::new(0.0, 0.0)
        } else {
            self.psi[(j - self.lag_min) as usize]
        }
    }

    /// `Σ_j ψ_j z^j`.
    pub fn eval(&self, z: C64) -> C64 {
        (self.lag_min..=self.lag_max)
            .map(|j| self.psi_at(j) * z.powi(j as i32))
            .sum()
    }
}

const COPRIME_TOL: f64 = 1e-10;
const MAX_TERMS: usize = 1_000_000;

fn normalized(p: &[C64]) -> Vec<C64> {
    let s = p.iter().map(|c| c.norm()).fold(0.0, f64::max);
    p.iter().map(|c| c / s).collect()
}

/// `|Res(θ, φ)|` for coefficient vectors scaled to unit max-modulus.
pub fn resultant_modulus(theta: &[C64], phi: &[C64]) -> Result<f64> {
    let t = normalized(&trim_poly(theta, 0.0));
    let p = normalized(&trim_poly(phi, 0.0));
    if t.is_empty() || p.is_empty() {
        return Ok(0.0);
    }
    let dt = t.len() - 1;
    let roots = poly_roots(&p)?;
    let lead = p[p.len() - 1].norm().powi(dt as i32);
    Ok(roots.iter().map(|r| poly_eval(&t, *r).norm()).product::<f64>() * lead)
}

/// One-sided expansion `θ(z)/φ(z) = Σ ψ_j z^j`, truncated at the first `J`
/// with `Σ_{j>J} |ψ_j| R^j < tol`.
pub fn varma_causal_expansion(theta: &[C64], phi: &[C64], radius: f64, tol: f64) -> Result<FilterSpec> {
    if !(radius >= 1.0) || !radius.is_finite() {
        return Err(Error::config(
            "R",
            format!("must be a finite number >= 1, got {radius}"),
        ));
    }
    if !(tol > 0.0) {
        return Err(Error::config("tol", format!("must be positive, got {tol}")));
    }
    let theta = trim_poly(theta, 0.0);
    let phi = trim_poly(phi, 0.0);
    if theta.is_empty() {
        return Err(Error::config("theta", "numerator is the zero polynomial"));
    }
    if phi.is_empty() {
        return Err(Error::config("phi", "denominator is the zero polynomial"));
    }
    for r in poly_roots(&phi)? {
        if r.norm() <= radius {
            return Err(Error::NotCausal {
                radius,
                root: r.to_string(),
                modulus: r.norm(),
            });
        }
    }
    if phi[0].norm() == 0.0 {
        return Err(Error::NotCausal {
            radius,
            root: "0".into(),
            modulus: 0.0,
        });
    }
    if phi.len() > 1 && theta.len() > 1 {
        let res = resultant_modulus(&theta, &phi)?;
        if res <= COPRIME_TOL {
            return Err(Error::CommonRoots(res));
        }
    }

    let mut psi: Vec<C64> = Vec::new();
    let mut weighted: Vec<f64> = Vec::new();
    let mut quiet = 0usize;
    let floor = tol * 1e-6;
    let mut j = 0usize;
    // Terms decay geometrically once past the numerator degree; stop after a
    // long run of negligible terms.
    while quiet < 256 || j <= theta.len() {
        if j >= MAX_TERMS {
            return Err(Error::NoConvergence(format!(
                "psi expansion did not decay within {MAX_TERMS} terms"
            )));
        }
        let mut v = theta.get(j).copied().unwrap_or_default();
        for i in 1..phi.len().min(j + 1) {
            v -= phi[i] * psi[j - i];
        }
        v /= phi[0];
        let wv = v.norm() * radius.powi(j as i32);
        if !wv.is_finite() {
            return Err(Error::NoConvergence("psi expansion overflowed".into()));
        }
        quiet = if wv < floor { quiet + 1 } else { 0 };
        psi.push(v);
        weighted.push(wv);
        j += 1;
    }
    // tails[J] = Σ_{j > J} |ψ_j| R^j
    let mut tails = vec![0.0; weighted.len()];
    for i in (0..weighted.len() - 1).rev() {
        tails[i] = tails[i + 1] + weighted[i + 1];
    }
    let cut = tails.iter().position(|&t| t < tol).unwrap_or(weighted.len() - 1);
    psi.truncate(cut + 1);
    Ok(FilterSpec {
        weighted_norm: weighted[..=cut].iter().sum(),
        tail_bound: tails[cut],
        psi,
        lag_min: 0,
        lag_max: cut as isize,
        radius,
    })
}

/// A covariance block on consecutive indices starting at `offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceBlock {
    pub matrix: CMatrix,
    pub offset: isize,
}

/// Covariance of `Y_k = Σ_j ψ_j X_{k-j}` from the covariance of `X` on
/// indices `offset..offset + order`: `C_Y = Ψ^H C_X Ψ` with `Ψ[s][k] = ψ_{k-s}`.
/// Only outputs whose inputs all lie in the window are returned.
pub fn filtered_covariance(cx: &CMatrix, offset: isize, filter: &FilterSpec) -> Result<CovarianceBlock> {
    let len = cx.nrows() as isize;
    let lo = offset + filter.lag_max;
    let hi = offset + len - 1 + filter.lag_min;
    if hi < lo {
        return Err(Error::InsufficientWindow(format!(
            "{} input indices cannot support a filter with lags {}..={}",
            len, filter.lag_min, filter.lag_max
        )));
    }
    let out = (hi - lo + 1) as usize;
    let psi = CMatrix::from_fn(cx.nrows(), out, |s, k| {
        let src = offset + s as isize;
        let dst = lo + k as isize;
        filter.psi_at(dst - src)
    });
    let mut m = psi.adjoint() * cx * psi;
    mirror_upper(&mut m);
    Ok(CovarianceBlock { matrix: m, offset: lo })
}

/// Applies `Y_k = Σ_j ψ_j X_{k-j}` to every path, keeping the outputs whose
/// inputs lie inside the path window. Path index 0 is time `offset`.
pub fn filter_paths(paths: &SamplePaths, offset: isize, filter: &FilterSpec) -> Result<(SamplePaths, isize)> {
    let len = paths.width() as isize;
    let lo = offset + filter.lag_max;
    let hi = offset + len - 1 + filter.lag_min;
    if hi < lo {
        return Err(Error::InsufficientWindow(format!(
            "paths of width {len} cannot support lags {}..={}",
            filter.lag_min, filter.lag_max
        )));
    }
    let out = (hi - lo + 1) as usize;
    let mut values = Vec::with_capacity(paths.paths() * out);
    for p in 0..paths.paths() {
        let x = paths.path(p);
        for k in 0..out {
            let t = lo + k as isize;
            let mut acc = C64::new(0.0, 0.0);
            for j in filter.lag_min..=filter.lag_max {
                acc += filter.psi_at(j) * x[(t - j - offset) as usize];
            }
            values.push(acc);
        }
    }
    Ok((SamplePaths::from_rows(values, paths.paths(), out, paths.seed())?, lo))
}

/// Finite-section lower bound on the norm of `w_k ↦ w_{k-1}`: the largest
/// `sqrt(λ)` over `C[0..m-1] a = λ C[1..m] a`, `m = 1..=n`.
pub fn shift_norm_estimate(system: &BasisSystem, measure: &CircleMeasure) -> Result<f64> {
    let c = gt_from_measure(system, measure)?.into_matrix();
    let n = system.n();
    let mut best: f64 = 0.0;
    for m in 1..=n {
        let a = c.view((0, 0), (m, m)).into_owned();
        let b = c.view((1, 1), (m, m)).into_owned();
        best = best.max(max_generalized_eigenvalue(&a, &b)?.max(0.0).sqrt());
    }
    Ok(best)
}
