use num_complex::Complex64 as C64;

use super::{blaschke_factor, blaschke_product, BasisSystem, PointSequence, SystemId};
use crate::error::{Error, Result};
use crate::linalg::{lstsq, upper_triangular_inverse, CMatrix, CVector};
use crate::measure::grid_nodes;

/// Coefficient magnitude above which a result is flagged as ill-conditioned.
pub const CONDITIONING_LIMIT: f64 = 1e8;

const CHECK_POINTS: usize = 64;
const FIT_POINTS: usize = 256;
const CHANGE_TOL: f64 = 1e-9;
const PARTIAL_FRACTION_TOL: f64 = 1e-10;

/// Points on the circle offset from the quadrature grid, used to verify
/// identities off the nodes they were computed on.
fn check_nodes(m: usize) -> Vec<C64> {
    let shift = C64::from_polar(1.0, std::f64::consts::PI / m as f64 * 0.731);
    grid_nodes(m).into_iter().map(|t| t * shift).collect()
}

/// Upper-triangular `D` with `to_k = Σ_{s<=k} D[s][k] from_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangularMatrix {
    matrix: CMatrix,
    from: SystemId,
    to: SystemId,
    ill_conditioned: bool,
}

impl TriangularMatrix {
    pub fn identity(id: SystemId, n: usize) -> Self {
        TriangularMatrix {
            matrix: CMatrix::identity(n + 1, n + 1),
            from: id,
            to: id,
            ill_conditioned: false,
        }
    }

    /// Wraps an explicit matrix; the strict lower triangle must vanish and the
    /// diagonal must stay away from zero.
    pub fn from_matrix(matrix: CMatrix, from: SystemId, to: SystemId) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "change of basis must be square and nonempty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        for k in 0..matrix.ncols() {
            if matrix[(k, k)].norm() <= 1e-12 {
                return Err(Error::SingularGram {
                    index: k,
                    pivot: matrix[(k, k)].norm(),
                    tol: 1e-12,
                });
            }
            for s in (k + 1)..matrix.nrows() {
                if matrix[(s, k)] != C64::new(0.0, 0.0) {
                    return Err(Error::DimensionMismatch(format!("entry ({s}, {k}) below the diagonal")));
                }
            }
        }
        let ill_conditioned = matrix.iter().any(|v| v.norm() > CONDITIONING_LIMIT);
        Ok(TriangularMatrix {
            matrix,
            from,
            to,
            ill_conditioned,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn order(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn from_system(&self) -> SystemId {
        self.from
    }

    pub fn to_system(&self) -> SystemId {
        self.to
    }

    pub fn ill_conditioned(&self) -> bool {
        self.ill_conditioned
    }

    pub fn get(&self, s: usize, k: usize) -> C64 {
        self.matrix[(s, k)]
    }

    /// `D(to -> from)`.
    pub fn inverse(&self) -> Self {
        let inv = upper_triangular_inverse(&self.matrix);
        let ill_conditioned = self.ill_conditioned || inv.iter().any(|v| v.norm() > CONDITIONING_LIMIT);
        TriangularMatrix {
            matrix: inv,
            from: self.to,
            to: self.from,
            ill_conditioned,
        }
    }

    /// `D(a -> b) ∘ D(b -> c) = D(a -> c)`.
    pub fn then(&self, next: &TriangularMatrix) -> Result<Self> {
        if self.to != next.from || self.order() != next.order() {
            return Err(Error::DimensionMismatch(format!(
                "cannot compose {}->{} (order {}) with {}->{} (order {})",
                self.from,
                self.to,
                self.order(),
                next.from,
                next.to,
                next.order()
            )));
        }
        Ok(TriangularMatrix {
            matrix: &self.matrix * &next.matrix,
            from: self.from,
            to: next.to,
            ill_conditioned: self.ill_conditioned || next.ill_conditioned,
        })
    }
}

/// Column `k` holds `w_k` of `system` in the coordinates `1, 1/(1 - ᾱ_s t)`.
/// Needs `α_1..α_n` distinct and nonzero.
fn w2_coordinates(system: &BasisSystem) -> Result<CMatrix> {
    let n = system.n();
    let alphas = system.points().alphas();
    let mut e = CMatrix::zeros(n + 1, n + 1);
    e[(0, 0)] = C64::new(1.0, 0.0);
    for k in 1..=n {
        match system.id() {
            SystemId::W2 => e[(k, k)] = C64::new(1.0, 0.0),
            SystemId::W2P => e[(k, k)] = C64::new(1.0 - alphas[k].norm(), 0.0),
            SystemId::W1 => {
                let mut sum = C64::new(0.0, 0.0);
                for j in 1..=k {
                    let aj = alphas[j];
                    let rho = 1.0 - aj.norm_sqr();
                    let mut rest = C64::new(1.0, 0.0);
                    for s in (1..=k).filter(|&s| s != j) {
                        rest *= blaschke_factor(system.points(), s, aj)?;
                    }
                    let a = (rho / aj.conj()) / rest.conj();
                    e[(j, k)] = a;
                    sum += a;
                }
                e[(0, k)] = blaschke_product(system.points(), 0, k, C64::new(0.0, 0.0))? - sum;
            }
            SystemId::W3 => {
                let mut sum = C64::new(0.0, 0.0);
                for j in 1..=k {
                    let bj = alphas[j].conj();
                    let mut denom = bj;
                    for s in (1..=k).filter(|&s| s != j) {
                        denom *= bj - alphas[s].conj();
                    }
                    let a = C64::new(1.0, 0.0) / denom;
                    e[(j, k)] = a;
                    sum += a;
                }
                e[(0, k)] = -sum;
            }
        }
    }
    Ok(e)
}

/// Fits `to_k` on `from_0..from_k` over grid samples, column by column.
fn fitted_change(from: &BasisSystem, to: &BasisSystem) -> Result<CMatrix> {
    let n = from.n();
    let nodes = grid_nodes(FIT_POINTS.max(16 * (n + 1)).next_power_of_two());
    let f_vals: Vec<Vec<C64>> = nodes.iter().map(|&t| from.eval_all(t)).collect::<Result<_>>()?;
    let t_vals: Vec<Vec<C64>> = nodes.iter().map(|&t| to.eval_all(t)).collect::<Result<_>>()?;
    let mut d = CMatrix::zeros(n + 1, n + 1);
    for k in 0..=n {
        let a = CMatrix::from_fn(nodes.len(), k + 1, |r, c| f_vals[r][c]);
        let b = CVector::from_fn(nodes.len(), |r, _| t_vals[r][k]);
        let x = lstsq(&a, &b, 1e-13, "change-of-basis fit")?;
        for s in 0..=k {
            d[(s, k)] = x[s];
        }
    }
    Ok(d)
}

fn change_residual(from: &BasisSystem, to: &BasisSystem, d: &CMatrix) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for t in check_nodes(CHECK_POINTS) {
        let f = from.eval_all(t)?;
        let g = to.eval_all(t)?;
        for k in 0..=from.n() {
            let mut acc = C64::new(0.0, 0.0);
            let mut scale: f64 = 1.0;
            for s in 0..=k {
                let term = d[(s, k)] * f[s];
                scale = scale.max(term.norm());
                acc += term;
            }
            worst = worst.max((acc - g[k]).norm() / scale);
        }
    }
    Ok(worst)
}

/// Change-of-basis matrix `D(from -> to)`, checked on an offset subgrid.
///
/// With distinct nonzero parameters the matrix comes from closed-form
/// partial fractions; otherwise it falls back to a grid least-squares fit.
pub fn change_of_basis_matrix(from: &BasisSystem, to: &BasisSystem) -> Result<TriangularMatrix> {
    if from.points() != to.points() || from.n() != to.n() {
        return Err(Error::DimensionMismatch(
            "change of basis needs the same points and the same n".into(),
        ));
    }
    let n = from.n();
    if from.id() == to.id() {
        return Ok(TriangularMatrix::identity(from.id(), n));
    }
    let d = if from.points().distinct_range(0, n) {
        let ef = w2_coordinates(from)?;
        let et = w2_coordinates(to)?;
        upper_triangular_inverse(&ef) * et
    } else {
        fitted_change(from, to)?
    };
    let residual = change_residual(from, to, &d)?;
    if !(residual < CHANGE_TOL) {
        return Err(Error::ResidualTooLarge {
            what: format!("change of basis {}->{}", from.id(), to.id()),
            residual,
            tol: CHANGE_TOL,
        });
    }
    let mut d = d;
    for k in 0..=n {
        for s in (k + 1)..=n {
            d[(s, k)] = C64::new(0.0, 0.0);
        }
    }
    TriangularMatrix::from_matrix(d, from.id(), to.id())
}

/// `B_{jk} = constant + Σ_{s=j+1}^{k} coeffs[s-j-1] ζ_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialFractions {
    pub constant: C64,
    pub coeffs: Vec<C64>,
    pub residual: f64,
    pub ill_conditioned: bool,
}

impl PartialFractions {
    pub fn eval(&self, points: &PointSequence, j: usize, t: C64) -> Result<C64> {
        let mut acc = self.constant;
        for (i, c) in self.coeffs.iter().enumerate() {
            acc += c * blaschke_factor(points, j + 1 + i, t)?;
        }
        Ok(acc)
    }
}

/// Expansion of `B_{jk}` over the factors `ζ_{j+1}, …, ζ_k`.
pub fn partial_fraction_coeffs(points: &PointSequence, j: usize, k: usize) -> Result<PartialFractions> {
    if j >= k || k > points.max_index() {
        return Err(Error::DimensionMismatch(format!(
            "partial fractions need j < k <= {}, got ({j}, {k})",
            points.max_index()
        )));
    }
    if !points.distinct_range(j + 1, k) {
        return Err(Error::RepeatedPoints(format!("alpha_{}..alpha_{k}", j + 1)));
    }
    let mut coeffs = Vec::with_capacity(k - j);
    let mut constant = blaschke_product(points, j, k, C64::new(0.0, 0.0))?;
    for s in (j + 1)..=k {
        let a = points.alpha(s);
        let mut rest = C64::new(1.0, 0.0);
        for r in ((j + 1)..=k).filter(|&r| r != s) {
            rest *= blaschke_factor(points, r, a)?;
        }
        let c = C64::new(1.0, 0.0) / rest.conj();
        constant += c * a;
        coeffs.push(c);
    }
    let mut pf = PartialFractions {
        constant,
        ill_conditioned: coeffs.iter().any(|c| c.norm() > CONDITIONING_LIMIT),
        coeffs,
        residual: 0.0,
    };
    let scale = 1.0 + pf.coeffs.iter().map(|c| c.norm()).sum::<f64>();
    for t in check_nodes(CHECK_POINTS) {
        let err = (pf.eval(points, j, t)? - blaschke_product(points, j, k, t)?).norm();
        pf.residual = pf.residual.max(err / scale);
    }
    if !(pf.residual < PARTIAL_FRACTION_TOL) {
        return Err(Error::ResidualTooLarge {
            what: format!("partial fractions of B_({j},{k})"),
            residual: pf.residual,
            tol: PARTIAL_FRACTION_TOL,
        });
    }
    Ok(pf)
}
