//! Small dense linear-algebra helpers on top of nalgebra.
//!
//! Everything here works on `DMatrix<C64>`; Hermitian inputs are assumed to be
//! exactly Hermitian (callers mirror the upper triangle before calling).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Real trace of a Hermitian matrix.
pub fn trace_re(m: &CMatrix) -> f64 {
    (0..m.nrows()).map(|i| m[(i, i)].re).sum()
}

/// Copies the upper triangle onto the lower one and zeroes the diagonal's
/// imaginary parts, making `m` Hermitian bit for bit.
pub fn mirror_upper(m: &mut CMatrix) {
    let n = m.nrows();
    for j in 0..n {
        m[(j, j)] = C64::new(m[(j, j)].re, 0.0);
        for k in (j + 1)..n {
            m[(k, j)] = m[(j, k)].conj();
        }
    }
}

/// Eigenvalues in ascending order with matching eigenvector columns.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let eig = SymmetricEigen::new(m.clone());
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Returns `F` with `F F^H = m`, clipping eigenvalues in `[-tol, 0)` to zero.
pub fn psd_factor(m: &CMatrix, tol: f64) -> Result<CMatrix> {
    let (values, vectors) = hermitian_eigen(m);
    if let Some(&lo) = values.first() {
        if lo < -tol {
            return Err(Error::Indefinite { min_eig: lo, tol });
        }
    }
    let mut f = vectors;
    for (c, &v) in values.iter().enumerate() {
        let s = v.max(0.0).sqrt();
        for r in 0..f.nrows() {
            f[(r, c)] *= s;
        }
    }
    Ok(f)
}

/// Solves `g x = b` for Hermitian PSD `g` through the eigendecomposition,
/// discarding directions with eigenvalue below `rel_tol * trace(g)`.
pub fn hermitian_pinv_solve(g: &CMatrix, b: &CVector, rel_tol: f64) -> CVector {
    let n = g.nrows();
    if n == 0 {
        return CVector::zeros(0);
    }
    let cut = rel_tol * trace_re(g).abs();
    let (values, vectors) = hermitian_eigen(g);
    let coords = vectors.adjoint() * b;
    let mut scaled = CVector::zeros(n);
    for i in 0..n {
        if values[i] > cut {
            scaled[i] = coords[i] / values[i];
        }
    }
    &vectors * scaled
}

/// Projects element `target` onto `span` in the geometry of the Gram matrix
/// `gram[j][k] = <e_k, e_j>`, through [`hermitian_pinv_solve`] with relative
/// tolerance 1e-12. Returns the coefficients and the residual norm.
pub fn projection_residual(gram: &CMatrix, target: usize, span: &[usize]) -> (CVector, f64) {
    let g = CMatrix::from_fn(span.len(), span.len(), |r, c| gram[(span[r], span[c])]);
    let b = CVector::from_fn(span.len(), |r, _| gram[(span[r], target)]);
    let a = hermitian_pinv_solve(&g, &b, 1e-12);
    let mut e2 = gram[(target, target)].re;
    for (i, &s) in span.iter().enumerate() {
        e2 -= (a[i] * gram[(target, s)]).re;
    }
    (a, e2.max(0.0).sqrt())
}

/// Least squares `min |a x - b|` via SVD; errors when the column space is
/// numerically rank deficient (smallest/largest singular value below `rank_tol`).
pub fn lstsq(a: &CMatrix, b: &CVector, rank_tol: f64, what: &str) -> Result<CVector> {
    let ncols = a.ncols();
    if ncols == 0 {
        return Ok(CVector::zeros(0));
    }
    // Column scaling keeps the rank test meaningful for badly scaled bases.
    let scales: Vec<f64> = (0..ncols)
        .map(|c| {
            let n = a.column(c).norm();
            if n > 0.0 {
                n
            } else {
                1.0
            }
        })
        .collect();
    let mut scaled = a.clone();
    for (c, s) in scales.iter().enumerate() {
        scaled.column_mut(c).unscale_mut(*s);
    }
    let svd = scaled.svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let smin = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    if smax == 0.0 || smin / smax < rank_tol {
        return Err(Error::RankDeficient {
            what: what.to_string(),
            ratio: if smax == 0.0 { 0.0 } else { smin / smax },
        });
    }
    let x = svd
        .solve(b, 0.0)
        .map_err(|e| Error::NoConvergence(format!("{what}: {e}")))?;
    Ok(CVector::from_iterator(ncols, x.iter().zip(&scales).map(|(v, s)| v / s)))
}

/// Inverse of an upper-triangular matrix by back substitution.
pub fn upper_triangular_inverse(u: &CMatrix) -> CMatrix {
    let n = u.nrows();
    let mut inv = CMatrix::zeros(n, n);
    for col in 0..n {
        for row in (0..=col).rev() {
            let mut acc = if row == col {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            };
            for k in (row + 1)..=col {
                acc -= u[(row, k)] * inv[(k, col)];
            }
            inv[(row, col)] = acc / u[(row, row)];
        }
    }
    inv
}

/// Largest `lambda` with `a x = lambda b x`, for Hermitian `a` and Hermitian
/// positive definite `b`.
pub fn max_generalized_eigenvalue(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    let n = b.nrows();
    let chol = b.clone().cholesky().ok_or(Error::SingularGram {
        index: n,
        pivot: min_eigenvalue(b),
        tol: 0.0,
    })?;
    let l = chol.l();
    let linv = l.clone().try_inverse().ok_or(Error::SingularGram {
        index: n,
        pivot: 0.0,
        tol: 0.0,
    })?;
    let mut m = &linv * a * linv.adjoint();
    mirror_upper(&mut m);
    let eig = SymmetricEigen::new(m);
    Ok(eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// Horner evaluation for coefficients in ascending powers.
pub fn poly_eval(coeffs: &[C64], z: C64) -> C64 {
    coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

fn poly_derivative_eval(coeffs: &[C64], z: C64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (k, &c) in coeffs.iter().enumerate().skip(1).rev() {
        acc = acc * z + c * k as f64;
    }
    acc
}

/// Drops trailing (highest-power) coefficients below `tol` relative to the
/// largest coefficient.
pub fn trim_poly(coeffs: &[C64], tol: f64) -> Vec<C64> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut end = coeffs.len();
    while end > 0 && coeffs[end - 1].norm() <= tol * scale {
        end -= 1;
    }
    coeffs[..end].to_vec()
}

/// Roots of a polynomial given in ascending powers, from the eigenvalues of
/// its companion matrix followed by two Newton polishing steps.
pub fn poly_roots(coeffs: &[C64]) -> Result<Vec<C64>> {
    let p = trim_poly(coeffs, 0.0);
    if p.is_empty() {
        return Err(Error::InvalidMeasure(
            "zero polynomial has no well-defined roots".into(),
        ));
    }
    let deg = p.len() - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = p[deg];
    let mut comp = CMatrix::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -p[i] / lead;
    }
    let schur = nalgebra::linalg::Schur::try_new(comp, 1e-15, 10_000)
        .ok_or_else(|| Error::NoConvergence("companion Schur iteration".into()))?;
    let (_, t) = schur.unpack();
    let mut roots: Vec<C64> = (0..deg).map(|i| t[(i, i)]).collect();
    for r in roots.iter_mut() {
        for _ in 0..2 {
            let d = poly_derivative_eval(&p, *r);
            if d.norm() == 0.0 {
                break;
            }
            let step = poly_eval(&p, *r) / d;
            let cand = *r - step;
            if cand.is_finite() && poly_eval(&p, cand).norm() <= poly_eval(&p, *r).norm() {
                *r = cand;
            }
        }
    }
    Ok(roots)
}

/// Lawson-Hanson nonnegative least squares: `min |a x - b|`, `x >= 0`.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>, max_iter: usize) -> (DVector<f64>, f64) {
    let (m, n) = a.shape();
    let mut x = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];
    let tol = 1e-12 * a.amax().max(1.0) * b.amax().max(1.0) * (m.max(n) as f64);
    let solve_passive = |passive: &[bool]| -> Option<DVector<f64>> {
        let idx: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
        if idx.is_empty() {
            return Some(DVector::zeros(n));
        }
        let sub = DMatrix::from_fn(m, idx.len(), |r, c| a[(r, idx[c])]);
        let z = sub.svd(true, true).solve(b, 1e-14).ok()?;
        let mut full = DVector::zeros(n);
        for (c, &i) in idx.iter().enumerate() {
            full[i] = z[c];
        }
        Some(full)
    };
    for _ in 0..max_iter {
        let w = a.transpose() * (b - a * &x);
        let cand = (0..n).filter(|&i| !passive[i]).max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(t) = cand else { break };
        if w[t] <= tol {
            break;
        }
        passive[t] = true;
        while let Some(z) = solve_passive(&passive) {
            let feasible = (0..n).filter(|&i| passive[i]).all(|i| z[i] > 0.0);
            if feasible {
                x = z;
                break;
            }
            let mut step = f64::INFINITY;
            for i in 0..n {
                if passive[i] && z[i] <= 0.0 {
                    let s = x[i] / (x[i] - z[i]);
                    step = step.min(s);
                }
            }
            x = &x + (z - &x) * step;
            for i in 0..n {
                if passive[i] && x[i] <= 1e-15 {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
        }
    }
    let resid = (b - a * &x).norm();
    (x, resid)
}
