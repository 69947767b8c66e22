//! Orthogonal rational functions by measure-weighted Gram–Schmidt.
//!
//! Basis functions are sampled at the quadrature nodes and scaled by the
//! square roots of the quadrature weights, so Euclidean inner products of the
//! sampled columns are `L²(dσ)` inner products. Orthogonalization is modified
//! Gram–Schmidt with one reorthogonalization pass.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::basis::BasisSystem;
use crate::error::{Error, Result};
use crate::linalg::{max_abs, upper_triangular_inverse, CMatrix, CVector};
use crate::measure::{CircleMeasure, Quadrature};
use crate::moments::{gt_from_measure, weighted_design};

/// Columns whose remaining squared norm falls below this fraction of the
/// trace of the Gram matrix count as linearly dependent.
pub const RANK_TOL: f64 = 1e-12;

/// Column-wise QR of `cols` by modified Gram–Schmidt with reorthogonalization.
struct Orthogonalized {
    q: CMatrix,
    r: CMatrix,
}

fn orthogonalize(cols: &CMatrix, trace: f64) -> Result<Orthogonalized> {
    let (rows, n) = cols.shape();
    let mut q = CMatrix::zeros(rows, n);
    let mut r = CMatrix::zeros(n, n);
    for k in 0..n {
        let mut v: CVector = cols.column(k).into_owned();
        for _pass in 0..2 {
            for i in 0..k {
                let qi = q.column(i);
                let h = qi.dotc(&v);
                v.axpy(-h, &qi, C64::new(1.0, 0.0));
                r[(i, k)] += h;
            }
        }
        let norm = v.norm();
        if norm * norm <= RANK_TOL * trace {
            return Err(Error::SingularGram {
                index: k,
                pivot: norm * norm,
                tol: RANK_TOL * trace,
            });
        }
        r[(k, k)] = C64::new(norm, 0.0);
        q.set_column(k, &(v / C64::new(norm, 0.0)));
    }
    Ok(Orthogonalized { q, r })
}

/// `target - P_m target` for every prefix `basis[.., 0..m]`, `m = 0..=ncols`,
/// returned as coefficients over the prefix (target coefficient is 1) and the
/// residual norm.
fn prefix_residuals(target: &CVector, basis: &CMatrix, trace: f64) -> Result<Vec<(Vec<C64>, f64)>> {
    let n = basis.ncols();
    let mut out = Vec::with_capacity(n + 1);
    out.push((Vec::new(), target.norm()));
    if n == 0 {
        return Ok(out);
    }
    let o = orthogonalize(basis, trace)?;
    let rinv = upper_triangular_inverse(&o.r);
    let mut proj = Vec::with_capacity(n);
    let mut residual = target.clone();
    for i in 0..n {
        let qi = o.q.column(i);
        let mut h = qi.dotc(&residual);
        residual.axpy(-h, &qi, C64::new(1.0, 0.0));
        let h2 = qi.dotc(&residual);
        residual.axpy(-h2, &qi, C64::new(1.0, 0.0));
        h += h2;
        proj.push(h);
        let m = i + 1;
        // target - Σ_{i<m} h_i q_i, with q_i = Σ_s rinv[s][i] basis_s.
        let coeffs = (0..m)
            .map(|s| -(s..m).map(|i| rinv[(s, i)] * proj[i]).sum::<C64>())
            .collect();
        out.push((coeffs, residual.norm()));
    }
    Ok(out)
}

fn design_and_trace(system: &BasisSystem, measure: &CircleMeasure) -> Result<(CMatrix, Quadrature, f64)> {
    let quad = measure.quadrature();
    let v = weighted_design(system, &quad)?;
    let trace = (0..v.ncols()).map(|c| v.column(c).norm_squared()).sum();
    Ok((v, quad, trace))
}

/// `φ_k`, `Φ_k` and the reversed `Φ*_k` for `k = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrfFamily {
    system: BasisSystem,
    gram: CMatrix,
    /// Row `k`: coefficients of `φ_k` over `w_0..w_k`.
    coeffs: CMatrix,
    /// Row `k`: coefficients of `Φ_k`, with a 1 on `w_k`.
    monic: CMatrix,
    norms: Vec<f64>,
    /// Row `k`: coefficients of `Φ*_k`, with a 1 on `w_0`.
    reversed: CMatrix,
    reversed_norms: Vec<f64>,
}

/// Orthonormal family of `system` in `L²(σ)` up to `system.n()`.
pub fn orthonormalize(system: &BasisSystem, measure: &CircleMeasure) -> Result<OrfFamily> {
    let n = system.n();
    let gram = gt_from_measure(system, measure)?.into_matrix();
    let (v, _, trace) = design_and_trace(system, measure)?;
    let o = orthogonalize(&v, trace)?;
    let rinv = upper_triangular_inverse(&o.r);
    let mut coeffs = CMatrix::zeros(n + 1, n + 1);
    let mut monic = CMatrix::zeros(n + 1, n + 1);
    let mut norms = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let rkk = o.r[(k, k)].re;
        norms.push(rkk);
        for s in 0..=k {
            coeffs[(k, s)] = rinv[(s, k)];
            monic[(k, s)] = rinv[(s, k)] * rkk;
        }
        monic[(k, k)] = C64::new(1.0, 0.0);
    }

    let target: CVector = v.column(0).into_owned();
    let tail = v.columns(1, n).into_owned();
    let starred = prefix_residuals(&target, &tail, trace)?;
    let mut reversed = CMatrix::zeros(n + 1, n + 1);
    let mut reversed_norms = Vec::with_capacity(n + 1);
    for (k, (c, norm)) in starred.into_iter().enumerate() {
        reversed[(k, 0)] = C64::new(1.0, 0.0);
        for (s, x) in c.into_iter().enumerate() {
            reversed[(k, s + 1)] = x;
        }
        reversed_norms.push(norm);
    }
    Ok(OrfFamily {
        system: system.clone(),
        gram,
        coeffs,
        monic,
        norms,
        reversed,
        reversed_norms,
    })
}

impl OrfFamily {
    pub fn system(&self) -> &BasisSystem {
        &self.system
    }

    pub fn n(&self) -> usize {
        self.system.n()
    }

    /// Gram matrix `[∫ w̄_j w_k dσ]` the family was built against.
    pub fn gram(&self) -> &CMatrix {
        &self.gram
    }

    pub fn coeffs(&self) -> &CMatrix {
        &self.coeffs
    }

    pub fn monic_coeffs(&self) -> &CMatrix {
        &self.monic
    }

    pub fn reversed_coeffs(&self) -> &CMatrix {
        &self.reversed
    }

    /// `‖Φ_k‖`.
    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// `‖Φ*_k‖`.
    pub fn reversed_norms(&self) -> &[f64] {
        &self.reversed_norms
    }

    /// Coefficients of `φ*_k = Φ*_k / ‖Φ*_k‖`.
    pub fn reversed_orthonormal(&self, k: usize) -> Vec<C64> {
        let s = 1.0 / self.reversed_norms[k];
        (0..=k).map(|i| self.reversed[(k, i)] * s).collect()
    }

    fn combine(&self, row: &[C64], t: C64) -> Result<C64> {
        let w = self.system.eval_all(t)?;
        Ok(row.iter().zip(&w).map(|(a, b)| a * b).sum())
    }

    /// `φ_k(t)`.
    pub fn eval(&self, k: usize, t: C64) -> Result<C64> {
        if k > self.n() {
            return Err(Error::DimensionMismatch(format!(
                "ORF index {k} exceeds n = {}",
                self.n()
            )));
        }
        let row: Vec<C64> = (0..=k).map(|s| self.coeffs[(k, s)]).collect();
        self.combine(&row, t)
    }

    /// `Φ_k(t)`.
    pub fn eval_monic(&self, k: usize, t: C64) -> Result<C64> {
        if k > self.n() {
            return Err(Error::DimensionMismatch(format!(
                "ORF index {k} exceeds n = {}",
                self.n()
            )));
        }
        let row: Vec<C64> = (0..=k).map(|s| self.monic[(k, s)]).collect();
        self.combine(&row, t)
    }

    /// `φ*_k(t)` for the Gram–Schmidt reversed family.
    pub fn eval_reversed(&self, k: usize, t: C64) -> Result<C64> {
        if k > self.n() {
            return Err(Error::DimensionMismatch(format!(
                "ORF index {k} exceeds n = {}",
                self.n()
            )));
        }
        self.combine(&self.reversed_orthonormal(k), t)
    }

    /// Reproducing kernel diagonal `K_k(z, z) = Σ_{i<=k} |φ_i(z)|²`.
    pub fn kernel_diagonal(&self, k: usize, z: C64) -> Result<f64> {
        let mut acc = 0.0;
        for i in 0..=k {
            acc += self.eval(i, z)?.norm_sqr();
        }
        Ok(acc)
    }

    /// Coefficients of the normalized kernel `K_k(·, α_k)/√K_k(α_k, α_k)`,
    /// the unit vector of `L_k` maximizing `|f(α_k)|`.
    pub fn superstar(&self, k: usize) -> Result<Vec<C64>> {
        let a = self.system.points().alpha(k);
        let norm = self.kernel_diagonal(k, a)?.sqrt();
        let mut out = vec![C64::new(0.0, 0.0); k + 1];
        for i in 0..=k {
            let w = self.eval(i, a)?.conj() / norm;
            for (s, o) in out.iter_mut().enumerate().take(i + 1) {
                *o += w * self.coeffs[(i, s)];
            }
        }
        Ok(out)
    }

    /// `max |<φ_i, φ_j> - δ_ij|` against the stored Gram matrix.
    pub fn orthonormality_residual(&self) -> f64 {
        orthonormality_residual(&self.coeffs, &self.gram)
    }
}

/// `max |L̄ C Lᵀ - I|` for coefficient rows `L` and Gram matrix `C`.
pub fn orthonormality_residual(coeffs: &CMatrix, gram: &CMatrix) -> f64 {
    let g = coeffs.map(|v| v.conj()) * gram * coeffs.transpose();
    max_abs(&(g - CMatrix::identity(coeffs.nrows(), coeffs.nrows())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LaurentOrdering {
    /// `w_0, w_1, w_{-1}, w_2, w_{-2}, …`
    Chi,
    /// `w_0, w_{-1}, w_1, w_{-2}, w_2, …`
    X,
}

impl LaurentOrdering {
    /// Signed basis index at position `p`.
    pub fn index(self, p: usize) -> isize {
        if p == 0 {
            return 0;
        }
        let m = p.div_ceil(2) as isize;
        let first_positive = matches!(self, LaurentOrdering::Chi);
        if (p % 2 == 1) == first_positive {
            m
        } else {
            -m
        }
    }
}

/// Orthonormal Laurent family over the bilateral basis in a fixed ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentOrfFamily {
    system: BasisSystem,
    ordering: LaurentOrdering,
    indices: Vec<isize>,
    gram: CMatrix,
    coeffs: CMatrix,
    monic: CMatrix,
    norms: Vec<f64>,
    starred: CMatrix,
    starred_norms: Vec<f64>,
}

/// Laurent family on positions `0..=positions` of `ordering`.
pub fn laurent_families(
    system: &BasisSystem,
    measure: &CircleMeasure,
    ordering: LaurentOrdering,
    positions: usize,
) -> Result<LaurentOrfFamily> {
    let indices: Vec<isize> = (0..=positions).map(|p| ordering.index(p)).collect();
    let reach = indices.iter().map(|i| i.unsigned_abs()).max().unwrap_or(0);
    if reach > system.n() {
        return Err(Error::DimensionMismatch(format!(
            "{positions} Laurent positions need n >= {reach}, have {}",
            system.n()
        )));
    }
    let (v, _, _) = design_and_trace(&system.with_n(reach)?, measure)?;
    let cols = CMatrix::from_fn(v.nrows(), positions + 1, |r, c| {
        let i = indices[c];
        if i >= 0 {
            v[(r, i as usize)]
        } else {
            v[(r, (-i) as usize)].conj()
        }
    });
    let gram = cols.adjoint() * &cols;
    let trace = (0..gram.nrows()).map(|i| gram[(i, i)].re).sum();
    let o = orthogonalize(&cols, trace)?;
    let rinv = upper_triangular_inverse(&o.r);
    let p = positions;
    let mut coeffs = CMatrix::zeros(p + 1, p + 1);
    let mut monic = CMatrix::zeros(p + 1, p + 1);
    let mut norms = Vec::with_capacity(p + 1);
    for k in 0..=p {
        let rkk = o.r[(k, k)].re;
        norms.push(rkk);
        for s in 0..=k {
            coeffs[(k, s)] = rinv[(s, k)];
            monic[(k, s)] = rinv[(s, k)] * rkk;
        }
        monic[(k, k)] = C64::new(1.0, 0.0);
    }
    let target: CVector = cols.column(0).into_owned();
    let rest = cols.columns(1, p).into_owned();
    let mut starred = CMatrix::zeros(p + 1, p + 1);
    let mut starred_norms = Vec::with_capacity(p + 1);
    for (m, (c, norm)) in prefix_residuals(&target, &rest, trace)?.into_iter().enumerate() {
        starred[(m, 0)] = C64::new(1.0, 0.0);
        for (s, x) in c.into_iter().enumerate() {
            starred[(m, s + 1)] = x;
        }
        starred_norms.push(norm);
    }
    Ok(LaurentOrfFamily {
        system: system.clone(),
        ordering,
        indices,
        gram,
        coeffs,
        monic,
        norms,
        starred,
        starred_norms,
    })
}

impl LaurentOrfFamily {
    pub fn ordering(&self) -> LaurentOrdering {
        self.ordering
    }

    /// Signed basis index at each position.
    pub fn indices(&self) -> &[isize] {
        &self.indices
    }

    pub fn positions(&self) -> usize {
        self.indices.len() - 1
    }

    /// Gram matrix of the ordered bilateral basis.
    pub fn gram(&self) -> &CMatrix {
        &self.gram
    }

    pub fn system(&self) -> &BasisSystem {
        &self.system
    }

    /// Row `p`: coefficients of the `p`-th orthonormal element over positions `0..=p`.
    pub fn coeffs(&self) -> &CMatrix {
        &self.coeffs
    }

    pub fn monic_coeffs(&self) -> &CMatrix {
        &self.monic
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// Row `m`: `w_0` minus its projection onto positions `1..=m`.
    pub fn starred_coeffs(&self) -> &CMatrix {
        &self.starred
    }

    pub fn starred_norms(&self) -> &[f64] {
        &self.starred_norms
    }

    pub fn eval(&self, p: usize, t: C64) -> Result<C64> {
        if p > self.positions() {
            return Err(Error::DimensionMismatch(format!(
                "position {p} exceeds {}",
                self.positions()
            )));
        }
        let mut acc = C64::new(0.0, 0.0);
        for s in 0..=p {
            acc += self.coeffs[(p, s)] * self.system.eval_signed(self.indices[s], t)?;
        }
        Ok(acc)
    }

    pub fn orthonormality_residual(&self) -> f64 {
        orthonormality_residual(&self.coeffs, &self.gram)
    }
}
