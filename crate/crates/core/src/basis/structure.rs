use num_complex::Complex64 as C64;

use super::BasisSystem;
use crate::error::{Error, Result};
use crate::linalg::{lstsq, CMatrix, CVector};
use crate::measure::grid_nodes;

const FIT_TOL: f64 = 1e-9;
const MIN_FIT_POINTS: usize = 256;

/// `β_{jk,s}` for `s = -j..=k`, so that `w̄_j w_k = Σ_s β_{jk,s} w_s` on the
/// circle with `w_{-s} = w̄_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureCoeffs {
    j: usize,
    k: usize,
    values: Vec<C64>,
    residual: f64,
}

impl StructureCoeffs {
    fn unit(j: usize, k: usize, s: isize) -> Self {
        let mut values = vec![C64::new(0.0, 0.0); j + k + 1];
        values[(s + j as isize) as usize] = C64::new(1.0, 0.0);
        StructureCoeffs {
            j,
            k,
            values,
            residual: 0.0,
        }
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `β_{jk,s}`; zero outside `-j..=k`.
    pub fn get(&self, s: isize) -> C64 {
        let idx = s + self.j as isize;
        if idx < 0 || idx as usize >= self.values.len() {
            C64::new(0.0, 0.0)
        } else {
            self.values[idx as usize]
        }
    }

    /// Coefficients in order `s = -j, …, k`.
    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// `Σ_s β_{jk,s} c_s` with `c_{-s} = conj(c_s)`.
    pub fn apply(&self, moments: &[C64]) -> Result<C64> {
        if moments.len() <= self.j.max(self.k) {
            return Err(Error::DimensionMismatch(format!(
                "need moments up to index {}, have {}",
                self.j.max(self.k),
                moments.len()
            )));
        }
        let mut acc = C64::new(0.0, 0.0);
        for (i, b) in self.values.iter().enumerate() {
            let s = i as isize - self.j as isize;
            let c = if s >= 0 {
                moments[s as usize]
            } else {
                moments[(-s) as usize].conj()
            };
            acc += b * c;
        }
        Ok(acc)
    }

    fn conjugate_transpose(&self) -> Self {
        // β_{kj,s} = conj(β_{jk,-s})
        let values = self.values.iter().rev().map(|v| v.conj()).collect();
        StructureCoeffs {
            j: self.k,
            k: self.j,
            values,
            residual: self.residual,
        }
    }
}

fn fit_points(n: usize) -> usize {
    MIN_FIT_POINTS.max(16 * (2 * n + 1)).next_power_of_two()
}

fn fit(system: &BasisSystem, j: usize, k: usize, rows: &[Vec<C64>], check: &[Vec<C64>]) -> Result<StructureCoeffs> {
    let width = j + k + 1;
    let column = |vals: &[C64], c: usize| -> C64 {
        let s = c as isize - j as isize;
        if s >= 0 {
            vals[s as usize]
        } else {
            vals[(-s) as usize].conj()
        }
    };
    let a = CMatrix::from_fn(rows.len(), width, |r, c| column(&rows[r], c));
    let b = CVector::from_fn(rows.len(), |r, _| rows[r][j].conj() * rows[r][k]);
    let x = lstsq(
        &a,
        &b,
        1e-13,
        &format!("structure fit for ({j}, {k}) in {}", system.id()),
    )?;
    let mut residual: f64 = 0.0;
    for vals in check {
        let target = vals[j].conj() * vals[k];
        let mut acc = C64::new(0.0, 0.0);
        let mut scale = target.norm().max(1.0);
        for c in 0..width {
            let term = x[c] * column(vals, c);
            scale = scale.max(term.norm());
            acc += term;
        }
        residual = residual.max((acc - target).norm() / scale);
    }
    if !(residual < FIT_TOL) {
        return Err(Error::ResidualTooLarge {
            what: format!("structure coefficients ({j}, {k}) in {}", system.id()),
            residual,
            tol: FIT_TOL,
        });
    }
    Ok(StructureCoeffs {
        j,
        k,
        values: x.iter().copied().collect(),
        residual,
    })
}

fn sample_rows(system: &BasisSystem, nodes: &[C64]) -> Result<Vec<Vec<C64>>> {
    nodes.iter().map(|&t| system.eval_all(t)).collect()
}

fn offset_nodes(m: usize) -> Vec<C64> {
    let shift = C64::from_polar(1.0, std::f64::consts::PI / m as f64 * 0.613);
    grid_nodes(m).into_iter().map(|t| t * shift).collect()
}

/// Structure coefficients for one pair `(j, k)`.
pub fn structure_coeffs(system: &BasisSystem, j: usize, k: usize) -> Result<StructureCoeffs> {
    let n = system.n();
    if j > n || k > n {
        return Err(Error::DimensionMismatch(format!(
            "structure index ({j}, {k}) exceeds n = {n}"
        )));
    }
    if j == 0 {
        return Ok(StructureCoeffs::unit(0, k, k as isize));
    }
    if k == 0 {
        return Ok(StructureCoeffs::unit(j, 0, -(j as isize)));
    }
    let m = fit_points(j.max(k));
    let rows = sample_rows(system, &grid_nodes(m))?;
    let check = sample_rows(system, &offset_nodes(64))?;
    if j > k {
        Ok(fit(system, k, j, &rows, &check)?.conjugate_transpose())
    } else {
        fit(system, j, k, &rows, &check)
    }
}

/// All `β_{jk}` for `0 <= j, k <= n`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureTable {
    n: usize,
    entries: Vec<StructureCoeffs>,
}

impl StructureTable {
    pub fn build(system: &BasisSystem) -> Result<Self> {
        let n = system.n();
        let m = fit_points(n);
        let rows = sample_rows(system, &grid_nodes(m))?;
        let check = sample_rows(system, &offset_nodes(64))?;
        let mut upper = vec![None; (n + 1) * (n + 1)];
        for j in 0..=n {
            for k in j..=n {
                let coeffs = if j == 0 {
                    StructureCoeffs::unit(0, k, k as isize)
                } else {
                    fit(system, j, k, &rows, &check)?
                };
                upper[j * (n + 1) + k] = Some(coeffs);
            }
        }
        let mut entries = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for k in 0..=n {
                let e = if j <= k {
                    upper[j * (n + 1) + k].clone()
                } else {
                    upper[k * (n + 1) + j].as_ref().map(|c| c.conjugate_transpose())
                };
                entries.push(e.expect("upper triangle filled"));
            }
        }
        Ok(StructureTable { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, j: usize, k: usize) -> &StructureCoeffs {
        &self.entries[j * (self.n + 1) + k]
    }

    pub fn max_residual(&self) -> f64 {
        self.entries.iter().map(|e| e.residual).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{PointSequence, SystemId};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn system(id: SystemId) -> BasisSystem {
        let p = PointSequence::new(vec![c(0.0, 0.0), c(0.5, 0.0), c(-0.3, 0.0)]).unwrap();
        BasisSystem::new(id, p, 2).unwrap()
    }

    #[test]
    fn j_zero_is_unit_vector() {
        let b = structure_coeffs(&system(SystemId::W2), 0, 2).unwrap();
        assert_eq!(b.get(2), c(1.0, 0.0));
        assert_eq!(b.get(1), c(0.0, 0.0));
    }

    #[test]
    fn blaschke_diagonal_is_one() {
        let b = structure_coeffs(&system(SystemId::W1), 2, 2).unwrap();
        for s in -2..=2 {
            let want = if s == 0 { 1.0 } else { 0.0 };
            assert!((b.get(s) - c(want, 0.0)).norm() < 1e-10, "s = {s}");
        }
    }

    #[test]
    fn blaschke_pair_reproduces_quotient() {
        let sys = system(SystemId::W1);
        let b = structure_coeffs(&sys, 1, 2).unwrap();
        assert!(b.residual() < 1e-9);
        // conj(B_1) B_2 = ζ_2 on the circle, which lies in span{w_0, w_1, w_2}.
        for s in -1..0 {
            assert!(b.get(s).norm() < 1e-9);
        }
        let t = C64::from_polar(1.0, 0.9);
        let mut acc = C64::new(0.0, 0.0);
        for s in -1..=2isize {
            acc += b.get(s) * sys.eval_signed(s, t).unwrap();
        }
        let zeta2 = crate::basis::blaschke_factor(sys.points(), 2, t).unwrap();
        assert!((acc - zeta2).norm() < 1e-9);
    }

    #[test]
    fn table_transposes_by_conjugation() {
        let sys = system(SystemId::W2);
        let table = StructureTable::build(&sys).unwrap();
        let direct = structure_coeffs(&sys, 2, 1).unwrap();
        for s in -2..=1 {
            assert!((table.get(2, 1).get(s) - direct.get(s)).norm() < 1e-10);
            assert!((table.get(2, 1).get(s) - table.get(1, 2).get(-s).conj()).norm() < 1e-15);
        }
        assert!(table.max_residual() < 1e-9);
    }
}
