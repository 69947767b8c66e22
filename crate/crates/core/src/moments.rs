//! Generalized Toeplitz (GT) matrices: Gram matrices of a basis system in
//! `L²(dσ)`, their reconstruction from moments, positivity and moment-problem
//! solvability tests, congruence under change of basis and block extension.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{partial_fraction_coeffs, BasisSystem, PointSequence, StructureTable, SystemId, TriangularMatrix};
use crate::error::{Error, Result};
use crate::linalg::{max_abs, min_eigenvalue, mirror_upper, nnls, trace_re, CMatrix};
use crate::measure::{grid_nodes, CircleMeasure, Quadrature};

/// Relative tolerance on the minimum eigenvalue in positivity tests.
pub const POSITIVITY_TOL: f64 = 1e-10;
/// Largest admissible change of a Gram entry under grid doubling, relative to
/// the largest entry.
pub const QUADRATURE_TOL: f64 = 1e-8;
const CORNER_TOL: f64 = 1e-6;
const WITNESS_ATOMS: usize = 720;
const WITNESS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Quadrature,
    Recurrence,
    Conjugated,
    Extended,
}

/// A Hermitian block `[c_{jk}]` for `j, k` in `offset..offset + order`.
#[derive(Debug, Clone, PartialEq)]
pub struct GtMatrix {
    matrix: CMatrix,
    system: SystemId,
    offset: usize,
    provenance: Provenance,
}

impl GtMatrix {
    /// Wraps a matrix, mirroring its upper triangle to make it Hermitian.
    pub fn new(mut matrix: CMatrix, system: SystemId, offset: usize, provenance: Provenance) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "GT matrix must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        mirror_upper(&mut matrix);
        Ok(GtMatrix {
            matrix,
            system,
            offset,
            provenance,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn system(&self) -> SystemId {
        self.system
    }

    /// First basis index covered by the block.
    pub fn offset(&self) -> usize {
        self.offset
    }

    /// Number of rows.
    pub fn order(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// `c_{jk}` by absolute basis indices.
    pub fn get(&self, j: usize, k: usize) -> C64 {
        self.matrix[(j - self.offset, k - self.offset)]
    }

    /// First row `c_{00}, …, c_{0n}` of a block starting at index 0.
    pub fn moments(&self) -> Result<MomentSequence> {
        if self.offset != 0 {
            return Err(Error::DimensionMismatch(
                "moments need a block starting at index 0".into(),
            ));
        }
        MomentSequence::new(self.matrix.row(0).iter().copied().collect(), self.system)
    }

    pub fn positivity(&self) -> Positivity {
        is_positive(&self.matrix)
    }

    /// Worst `|c_{jk} - Σ_s β_{jk,s} c_s|` relative to `c_00`, for a block
    /// starting at index 0.
    pub fn recurrence_residual(&self, table: &StructureTable) -> Result<f64> {
        let moments = self.moments()?;
        let n = self.order() - 1;
        if table.n() < n {
            return Err(Error::DimensionMismatch(format!(
                "structure table covers n = {}, block needs {n}",
                table.n()
            )));
        }
        let mut worst: f64 = 0.0;
        for j in 0..=n {
            for k in j..=n {
                let v = table.get(j, k).apply(moments.values())?;
                worst = worst.max((v - self.matrix[(j, k)]).norm());
            }
        }
        Ok(worst / moments.c0())
    }
}

/// Generalized moments `c_0, …, c_n` with respect to a system.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSequence {
    values: Vec<C64>,
    system: SystemId,
}

impl MomentSequence {
    pub fn new(mut values: Vec<C64>, system: SystemId) -> Result<Self> {
        let Some(c0) = values.first().copied() else {
            return Err(Error::config("moments", "empty moment sequence"));
        };
        if values.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::config("moments", "moments must be finite"));
        }
        if !(c0.re > 0.0) || c0.im.abs() > 1e-12 * c0.re {
            return Err(Error::config(
                "moments",
                format!("c_0 must be real and positive, got {c0}"),
            ));
        }
        values[0] = C64::new(c0.re, 0.0);
        Ok(MomentSequence { values, system })
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn system(&self) -> SystemId {
        self.system
    }

    pub fn c0(&self) -> f64 {
        self.values[0].re
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Positivity {
    pub positive: bool,
    pub min_eigenvalue: f64,
}

/// PSD test with tolerance `-1e-10 * trace` on the smallest eigenvalue.
pub fn is_positive(m: &CMatrix) -> Positivity {
    let min_eig = min_eigenvalue(m);
    Positivity {
        positive: min_eig >= -POSITIVITY_TOL * trace_re(m).abs(),
        min_eigenvalue: min_eig,
    }
}

/// `w_0..w_n` at every node, in node order.
pub(crate) fn sample_basis(system: &BasisSystem, nodes: &[C64]) -> Result<Vec<Vec<C64>>> {
    nodes.par_iter().map(|&t| system.eval_all(t)).collect()
}

/// Rows `√weight_i · w_k(t_i)`, so that `V^H V` is the Gram matrix.
pub(crate) fn weighted_design(system: &BasisSystem, quad: &Quadrature) -> Result<CMatrix> {
    let rows = sample_basis(system, &quad.nodes)?;
    let cols = system.n() + 1;
    Ok(CMatrix::from_fn(rows.len(), cols, |r, c| {
        rows[r][c] * quad.weights[r].sqrt()
    }))
}

fn gram_on(system: &BasisSystem, quad: &Quadrature) -> Result<CMatrix> {
    let v = weighted_design(system, quad)?;
    let mut g = v.adjoint() * v;
    mirror_upper(&mut g);
    Ok(g)
}

/// Gram matrix `[∫ w̄_j w_k dσ]` of `w_0..w_n`, checked against the doubled grid.
pub fn gt_from_measure(system: &BasisSystem, measure: &CircleMeasure) -> Result<GtMatrix> {
    let coarse = gram_on(system, &measure.quadrature())?;
    let fine = gram_on(system, &measure.quadrature_on(2 * measure.grid_size()))?;
    let gap = max_abs(&(&coarse - &fine)) / max_abs(&fine).max(f64::MIN_POSITIVE);
    if gap > QUADRATURE_TOL {
        return Err(Error::QuadratureUnstable {
            what: format!("Gram matrix of {} up to n = {}", system.id(), system.n()),
            gap,
        });
    }
    GtMatrix::new(coarse, system.id(), 0, Provenance::Quadrature)
}

/// The sub-block of [`gt_from_measure`] on indices `lo..=hi`.
pub fn gt_window(system: &BasisSystem, measure: &CircleMeasure, lo: usize, hi: usize) -> Result<GtMatrix> {
    if lo > hi || hi > system.n() {
        return Err(Error::DimensionMismatch(format!(
            "window {lo}..={hi} outside 0..={}",
            system.n()
        )));
    }
    let full = gt_from_measure(&system.with_n(hi)?, measure)?;
    let m = full.matrix.view((lo, lo), (hi - lo + 1, hi - lo + 1)).into_owned();
    GtMatrix::new(m, system.id(), lo, Provenance::Quadrature)
}

/// Fills `c_{jk} = Σ_s β_{jk,s} c_s`. The result is Hermitian but need not be
/// positive.
pub fn gt_from_moments(system: &BasisSystem, moments: &MomentSequence) -> Result<GtMatrix> {
    let n = system.n();
    if moments.len() < n + 1 {
        return Err(Error::DimensionMismatch(format!(
            "{} moments supplied, n = {n} needs {}",
            moments.len(),
            n + 1
        )));
    }
    if moments.system() != system.id() {
        return Err(Error::DimensionMismatch(format!(
            "moments are for {} but the system is {}",
            moments.system(),
            system.id()
        )));
    }
    let table = StructureTable::build(system)?;
    gt_from_moments_with(&table, moments)
}

/// [`gt_from_moments`] with a prebuilt structure table.
pub fn gt_from_moments_with(table: &StructureTable, moments: &MomentSequence) -> Result<GtMatrix> {
    let n = table.n();
    let mut m = CMatrix::zeros(n + 1, n + 1);
    for j in 0..=n {
        for k in j..=n {
            m[(j, k)] = table.get(j, k).apply(moments.values())?;
        }
    }
    GtMatrix::new(m, moments.system(), 0, Provenance::Recurrence)
}

/// The Pick matrix of a moment sequence and its positivity.
#[derive(Debug, Clone, PartialEq)]
pub struct PickReport {
    pub matrix: CMatrix,
    pub min_eigenvalue: f64,
    pub solvable: bool,
}

/// `z_k = ∫ ζ_k dσ` from Blaschke moments; `z_k = c_{k-1,k}` with `z_0 = c_0`.
pub fn zeta_moments(system: &BasisSystem, moments: &MomentSequence) -> Result<Vec<C64>> {
    if system.id() != SystemId::W1 || moments.system() != SystemId::W1 {
        return Err(Error::Unsupported(
            "zeta moments are defined for the Blaschke system".into(),
        ));
    }
    let table = StructureTable::build(system)?;
    let mut z = vec![C64::new(moments.c0(), 0.0)];
    for k in 1..=system.n() {
        z.push(table.get(k - 1, k).apply(moments.values())?);
    }
    Ok(z)
}

/// `c²_k = (ᾱ_k z_k + c_0)/ρ_k` with `ρ_k = 1 - |α_k|²`.
pub fn w2_moments_from_zeta(points: &PointSequence, zeta: &[C64]) -> Vec<C64> {
    let c0 = zeta[0];
    let mut out = vec![c0];
    for (k, z) in zeta.iter().enumerate().skip(1) {
        let a = points.alpha(k);
        out.push((a.conj() * z + c0) / (1.0 - a.norm_sqr()));
    }
    out
}

/// Inverse of [`w2_moments_from_zeta`]; needs `α_k ≠ 0` for `k >= 1`.
pub fn zeta_from_w2_moments(points: &PointSequence, c2: &[C64]) -> Result<Vec<C64>> {
    let c0 = c2[0];
    let mut out = vec![c0];
    for (k, c) in c2.iter().enumerate().skip(1) {
        let a = points.alpha(k);
        if a.norm() < 1e-12 {
            return Err(Error::RepeatedPoints(format!("alpha_{k} = 0 coincides with alpha_0")));
        }
        out.push(((1.0 - a.norm_sqr()) * c - c0) / a.conj());
    }
    Ok(out)
}

fn pick_w2(points: &PointSequence, c: &[C64]) -> CMatrix {
    let n = c.len() - 1;
    let c0 = c[0].re;
    let a = points.alphas();
    let mut m = CMatrix::from_fn(n + 1, n + 1, |j, k| {
        (c[k] + c[j].conj() - c0) / (C64::new(1.0, 0.0) - a[j] * a[k].conj())
    });
    mirror_upper(&mut m);
    m
}

fn pick_w1(points: &PointSequence, zeta: &[C64]) -> CMatrix {
    let n = zeta.len() - 1;
    let c0 = zeta[0].re;
    let a = points.alphas();
    let rho: Vec<f64> = a.iter().map(|x| 1.0 - x.norm_sqr()).collect();
    let mut m = CMatrix::from_fn(n + 1, n + 1, |j, k| {
        let num = rho[j] * a[k].conj() * zeta[k]
            + rho[k] * a[j] * zeta[j].conj()
            + c0 * (1.0 - a[k].norm_sqr() * a[j].norm_sqr());
        num / (C64::new(1.0, 0.0) - a[j] * a[k].conj())
    });
    mirror_upper(&mut m);
    m
}

/// Solvability of the moment problem through its Pick matrix.
///
/// For `W2` the matrix is `[(c_k + c̄_j - c_0)/(1 - α_j ᾱ_k)]`, the Gram matrix
/// of the Cauchy kernels. For `W1` the Blaschke moments are first turned into
/// `z_k = ∫ ζ_k dσ`; the matrix
/// `[(ρ_j ᾱ_k z_k + ρ_k α_j z̄_j + c_0(1 - |α_j|²|α_k|²))/(1 - α_j ᾱ_k)]`
/// equals `diag(ρ) P_W2 diag(ρ)` and so carries the same verdict.
pub fn pick_solvability(system: &BasisSystem, moments: &MomentSequence) -> Result<PickReport> {
    let n = system.n();
    if moments.len() < n + 1 {
        return Err(Error::DimensionMismatch(format!(
            "{} moments for n = {n}",
            moments.len()
        )));
    }
    let matrix = match system.id() {
        SystemId::W2 => pick_w2(system.points(), &moments.values()[..=n]),
        SystemId::W1 => pick_w1(system.points(), &zeta_moments(system, moments)?),
        other => {
            return Err(Error::Unsupported(format!(
                "Pick criterion is stated for w1 and w2, not {other}"
            )))
        }
    };
    let p = is_positive(&matrix);
    Ok(PickReport {
        matrix,
        min_eigenvalue: p.min_eigenvalue,
        solvable: p.positive,
    })
}

/// A nonnegative combination of point masses on a uniform angular grid that
/// reproduces the moments, when one exists.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteWitness {
    pub locations: Vec<C64>,
    pub masses: Vec<f64>,
    pub residual: f64,
    pub feasible: bool,
}

/// Searches for a representing measure over 720 candidate atoms with
/// nonnegative least squares.
pub fn discrete_witness(system: &BasisSystem, moments: &MomentSequence) -> Result<DiscreteWitness> {
    let n = system.n();
    let locations = grid_nodes(WITNESS_ATOMS);
    let vals = sample_basis(system, &locations)?;
    let mut a = DMatrix::<f64>::zeros(2 * (n + 1), WITNESS_ATOMS);
    let mut b = DVector::<f64>::zeros(2 * (n + 1));
    for k in 0..=n {
        for (i, v) in vals.iter().enumerate() {
            a[(2 * k, i)] = v[k].re;
            a[(2 * k + 1, i)] = v[k].im;
        }
        b[2 * k] = moments.values()[k].re;
        b[2 * k + 1] = moments.values()[k].im;
    }
    let (x, residual) = nnls(&a, &b, 20 * WITNESS_ATOMS);
    let scale = b.amax().max(1.0);
    Ok(DiscreteWitness {
        locations,
        masses: x.iter().copied().collect(),
        residual,
        feasible: residual <= WITNESS_TOL * scale,
    })
}

/// `D^H C D`, the GT matrix of the target system of `d`.
pub fn conjugate_gt(c: &GtMatrix, d: &TriangularMatrix) -> Result<GtMatrix> {
    if c.order() != d.order() {
        return Err(Error::DimensionMismatch(format!(
            "GT order {} against change-of-basis order {}",
            c.order(),
            d.order()
        )));
    }
    if c.system != d.from_system() {
        return Err(Error::DimensionMismatch(format!(
            "GT matrix is in {} but the change of basis starts from {}",
            c.system,
            d.from_system()
        )));
    }
    let m = d.matrix().adjoint() * &c.matrix * d.matrix();
    GtMatrix::new(m, d.to_system(), c.offset, Provenance::Conjugated)
}

/// Grows a block on `n..=n+m` to `n..=n+m+1` given the new corner
/// `c_{n+m, n+m+1}`.
///
/// In the Blaschke system the new column follows from the partial fractions
/// of `B_{j,K}`: `c_{jK} = A_{jK} c_00 + Σ_s coeff_s c_{s-1,s}`, which only
/// touches the superdiagonal and the corner. Other systems need moments and
/// use the structure coefficients. When moments reaching index `K` are
/// supplied the new column is also checked against them.
pub fn extend_covariance_block(
    system: &BasisSystem,
    block: &GtMatrix,
    corner: C64,
    moments: Option<&MomentSequence>,
) -> Result<GtMatrix> {
    let lo = block.offset;
    let hi = lo + block.order() - 1;
    let new = hi + 1;
    if block.system != system.id() {
        return Err(Error::DimensionMismatch("block and system disagree".into()));
    }
    if new > system.n() {
        return Err(Error::DimensionMismatch(format!(
            "extension to index {new} exceeds n = {}",
            system.n()
        )));
    }
    let size = block.order() + 1;
    let mut m = CMatrix::zeros(size, size);
    m.view_mut((0, 0), (size - 1, size - 1)).copy_from(&block.matrix);

    let table = match (system.id(), moments) {
        (SystemId::W1, _) => None,
        (_, Some(_)) => Some(StructureTable::build(system)?),
        (other, None) => return Err(Error::Unsupported(format!("extending a {other} block needs moments"))),
    };
    match &table {
        None => {
            let c00 = block.matrix[(0, 0)];
            let superdiag = |s: usize| -> C64 {
                if s == new {
                    corner
                } else {
                    block.get(s - 1, s)
                }
            };
            for j in lo..new {
                let v = if j + 1 == new {
                    corner
                } else {
                    let pf = partial_fraction_coeffs(system.points(), j, new)?;
                    let mut acc = pf.constant * c00;
                    for (i, c) in pf.coeffs.iter().enumerate() {
                        acc += c * superdiag(j + 1 + i);
                    }
                    acc
                };
                m[(j - lo, size - 1)] = v;
            }
            m[(size - 1, size - 1)] = c00;
        }
        Some(table) => {
            let mom = moments.expect("checked above");
            if mom.len() <= new {
                return Err(Error::DimensionMismatch(format!("moments stop before index {new}")));
            }
            for j in lo..=new {
                m[(j - lo, size - 1)] = table.get(j, new).apply(mom.values())?;
            }
            let residual = (m[(size - 2, size - 1)] - corner).norm() / mom.c0();
            if residual > CORNER_TOL {
                return Err(Error::InconsistentEntry {
                    row: hi,
                    col: new,
                    residual,
                });
            }
        }
    }
    if let (None, Some(mom)) = (&table, moments) {
        if mom.len() > new {
            let t = StructureTable::build(&system.with_n(new)?)?;
            for j in lo..=new {
                let expected = t.get(j, new).apply(mom.values())?;
                let residual = (expected - m[(j - lo, size - 1)]).norm() / mom.c0();
                if residual > CORNER_TOL {
                    return Err(Error::InconsistentEntry {
                        row: j,
                        col: new,
                        residual,
                    });
                }
            }
        }
    }
    GtMatrix::new(m, block.system, lo, Provenance::Extended)
}

/// Drops the first `l` rows and columns.
pub fn shift_block(block: &GtMatrix, l: usize) -> Result<GtMatrix> {
    if l >= block.order() {
        return Err(Error::DimensionMismatch(format!(
            "cannot drop {l} rows of an order-{} block",
            block.order()
        )));
    }
    let size = block.order() - l;
    let m = block.matrix.view((l, l), (size, size)).into_owned();
    GtMatrix::new(m, block.system, block.offset + l, block.provenance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::change_of_basis_matrix;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pts() -> PointSequence {
        PointSequence::new(vec![c(0.0, 0.0), c(0.5, 0.0), c(-0.3, 0.0)]).unwrap()
    }

    fn rational() -> CircleMeasure {
        CircleMeasure::rational(vec![c(1.0, 0.0), c(0.3, -0.2)], vec![c(1.0, 0.0), c(-0.4, 0.3)], 1.5).unwrap()
    }

    #[test]
    fn lebesgue_blaschke_gram_is_mean_value() {
        let sys = BasisSystem::new(SystemId::W1, pts(), 2).unwrap();
        let g = gt_from_measure(&sys, &CircleMeasure::lebesgue()).unwrap();
        assert!((g.get(0, 1) - c(-0.5, 0.0)).norm() < 1e-14);
        assert!((g.get(0, 2) - c(-0.15, 0.0)).norm() < 1e-14);
        assert!((g.get(1, 2) - c(0.3, 0.0)).norm() < 1e-14);
        for k in 0..3 {
            assert!((g.get(k, k) - c(1.0, 0.0)).norm() < 1e-14);
        }
        assert!(g.positivity().positive);
    }

    #[test]
    fn lebesgue_cauchy_moments_are_one() {
        let sys = BasisSystem::new(SystemId::W2, pts(), 2).unwrap();
        let g = gt_from_measure(&sys, &CircleMeasure::lebesgue()).unwrap();
        for k in 0..3 {
            assert!((g.get(0, k) - c(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn moments_reproduce_measure_gram() {
        for id in [SystemId::W1, SystemId::W2, SystemId::W2P] {
            let sys = BasisSystem::new(id, pts(), 2).unwrap();
            let g = gt_from_measure(&sys, &rational()).unwrap();
            let r = gt_from_moments(&sys, &g.moments().unwrap()).unwrap();
            assert!(max_abs(&(g.matrix() - r.matrix())) < 1e-9, "{id}");
            assert!(g.recurrence_residual(&StructureTable::build(&sys).unwrap()).unwrap() < 1e-8);
        }
    }

    #[test]
    fn unit_moment_sequence() {
        let sys = BasisSystem::new(SystemId::W1, pts(), 2).unwrap();
        let mut v = vec![c(0.0, 0.0); 3];
        v[0] = c(1.0, 0.0);
        let g = gt_from_moments(&sys, &MomentSequence::new(v, SystemId::W1).unwrap()).unwrap();
        let table = StructureTable::build(&sys).unwrap();
        for j in 0..3 {
            for k in 0..3 {
                assert!((g.get(j, k) - table.get(j, k).get(0)).norm() < 1e-15);
            }
        }
        let single = BasisSystem::new(SystemId::W1, pts(), 0).unwrap();
        let g0 = gt_from_moments(&single, &MomentSequence::new(vec![c(2.0, 0.0)], SystemId::W1).unwrap()).unwrap();
        assert_eq!(g0.matrix()[(0, 0)], c(2.0, 0.0));
    }

    #[test]
    fn positivity_examples() {
        assert!(is_positive(&CMatrix::identity(3, 3)).positive);
        let mut d = CMatrix::identity(2, 2);
        d[(1, 1)] = c(-1.0, 0.0);
        assert!(!is_positive(&d).positive);
    }

    #[test]
    fn pick_lebesgue_is_szego_kernel() {
        let sys = BasisSystem::new(SystemId::W2, pts(), 2).unwrap();
        let mom = MomentSequence::new(vec![c(1.0, 0.0); 3], SystemId::W2).unwrap();
        let rep = pick_solvability(&sys, &mom).unwrap();
        assert!(rep.solvable);
        let a = pts();
        for j in 0..3 {
            for k in 0..3 {
                let want = C64::new(1.0, 0.0) / (C64::new(1.0, 0.0) - a.alpha(j) * a.alpha(k).conj());
                assert!((rep.matrix[(j, k)] - want).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn pick_forms_agree_on_measure_moments() {
        let p = PointSequence::new(vec![c(0.0, 0.0), c(0.4, 0.3), c(-0.2, 0.6), c(0.1, -0.5)]).unwrap();
        let w1 = BasisSystem::new(SystemId::W1, p.clone(), 3).unwrap();
        let w2 = BasisSystem::new(SystemId::W2, p.clone(), 3).unwrap();
        let g1 = gt_from_measure(&w1, &rational()).unwrap();
        let g2 = gt_from_measure(&w2, &rational()).unwrap();
        let r1 = pick_solvability(&w1, &g1.moments().unwrap()).unwrap();
        let r2 = pick_solvability(&w2, &g2.moments().unwrap()).unwrap();
        assert!(r1.solvable && r2.solvable);
        // The Cauchy Pick matrix is the W2 Gram matrix itself.
        assert!(max_abs(&(&r2.matrix - g2.matrix())) < 1e-12);
        let z = zeta_moments(&w1, &g1.moments().unwrap()).unwrap();
        let c2 = w2_moments_from_zeta(&p, &z);
        for (k, v) in c2.iter().enumerate() {
            assert!((v - g2.get(0, k)).norm() < 1e-10);
        }
        let back = zeta_from_w2_moments(&p, &c2).unwrap();
        for (b, v) in back.iter().zip(&z) {
            assert!((b - v).norm() < 1e-10);
        }
    }

    #[test]
    fn pick_boundary_and_infeasible_cases() {
        let p = PointSequence::new(vec![c(0.0, 0.0), c(0.9, 0.0)]).unwrap();
        let sys = BasisSystem::new(SystemId::W2, p, 1).unwrap();
        // c_1 = 10 is the single atom at 1 scaled to mass 1: singular but PSD.
        let edge = MomentSequence::new(vec![c(1.0, 0.0), c(10.0, 0.0)], SystemId::W2).unwrap();
        let rep = pick_solvability(&sys, &edge).unwrap();
        assert!(rep.solvable);
        assert!(discrete_witness(&sys, &edge).unwrap().feasible);
        let bad = MomentSequence::new(vec![c(1.0, 0.0), c(11.0, 0.0)], SystemId::W2).unwrap();
        let rep = pick_solvability(&sys, &bad).unwrap();
        assert!(!rep.solvable);
        assert!(!discrete_witness(&sys, &bad).unwrap().feasible);
    }

    #[test]
    fn conjugation_matches_quadrature() {
        let w1 = BasisSystem::new(SystemId::W1, pts(), 2).unwrap();
        let w2 = BasisSystem::new(SystemId::W2, pts(), 2).unwrap();
        let g1 = gt_from_measure(&w1, &rational()).unwrap();
        let g2 = gt_from_measure(&w2, &rational()).unwrap();
        let d = change_of_basis_matrix(&w1, &w2).unwrap();
        let conj = conjugate_gt(&g1, &d).unwrap();
        assert_eq!(conj.system(), SystemId::W2);
        assert!(max_abs(&(conj.matrix() - g2.matrix())) < 1e-9);
        let id = conjugate_gt(&g1, &TriangularMatrix::identity(SystemId::W1, 2)).unwrap();
        assert!(max_abs(&(id.matrix() - g1.matrix())) < 1e-15);
        assert!(conjugate_gt(&g2, &d).is_err());
    }

    #[test]
    fn extend_then_shift_matches_window() {
        let p = PointSequence::new(vec![
            c(0.0, 0.0),
            c(0.5, 0.1),
            c(-0.3, 0.4),
            c(0.2, -0.6),
            c(0.7, 0.0),
            c(-0.5, -0.2),
        ])
        .unwrap();
        let sys = BasisSystem::new(SystemId::W1, p, 5).unwrap();
        let sigma = rational();
        let full = gt_from_measure(&sys, &sigma).unwrap();
        let block = gt_window(&sys, &sigma, 1, 3).unwrap();
        let ext = extend_covariance_block(&sys, &block, full.get(3, 4), None).unwrap();
        let want = gt_window(&sys, &sigma, 1, 4).unwrap();
        assert!(max_abs(&(ext.matrix() - want.matrix())) < 1e-9);
        let shifted = shift_block(&ext, 1).unwrap();
        assert_eq!(shifted.offset(), 2);
        let want = gt_window(&sys, &sigma, 2, 4).unwrap();
        assert!(max_abs(&(shifted.matrix() - want.matrix())) < 1e-9);

        let mom = full.moments().unwrap();
        assert!(extend_covariance_block(&sys, &block, full.get(3, 4), Some(&mom)).is_ok());
        let err = extend_covariance_block(&sys, &block, full.get(3, 4) + 0.01, Some(&mom)).unwrap_err();
        assert!(matches!(err, Error::InconsistentEntry { col: 4, .. }));
    }

    #[test]
    fn extend_single_entry() {
        let sys = BasisSystem::new(SystemId::W1, pts(), 2).unwrap();
        let block = GtMatrix::new(
            CMatrix::from_element(1, 1, c(1.0, 0.0)),
            SystemId::W1,
            0,
            Provenance::Quadrature,
        )
        .unwrap();
        let ext = extend_covariance_block(&sys, &block, c(-0.5, 0.0), None).unwrap();
        assert_eq!(ext.order(), 2);
        assert_eq!(ext.get(1, 0), c(-0.5, 0.0));
        assert_eq!(ext.get(1, 1), c(1.0, 0.0));
    }

    #[test]
    fn unstable_quadrature_is_flagged() {
        // Poles close to the circle need far more than 64 nodes.
        let sigma = CircleMeasure::rational(vec![c(1.0, 0.0)], vec![c(1.0, 0.0), c(-0.97, 0.0)], 1.0)
            .unwrap()
            .with_grid_size(64)
            .unwrap();
        let sys = BasisSystem::new(SystemId::W1, pts(), 2).unwrap();
        assert!(matches!(
            gt_from_measure(&sys, &sigma),
            Err(Error::QuadratureUnstable { .. })
        ));
    }
}
