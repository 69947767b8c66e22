//! Finite positive Borel measures on the unit circle.
//!
//! A [`CircleMeasure`] is an absolutely continuous part, given as a density
//! with respect to normalized Lebesgue measure `dm = dθ/2π`, plus a finite
//! list of point masses. Integrals of the density part are computed with the
//! trapezoidal rule on the uniform grid `θ_j = 2πj/M`, which is spectrally
//! accurate for smooth periodic integrands; atoms are summed exactly.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{poly_eval, poly_roots, trim_poly};

pub const DEFAULT_GRID: usize = 4096;

/// Relative change under grid doubling above which a quadrature is flagged.
pub const MASS_REFINEMENT_TOL: f64 = 1e-10;

const UNIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Density {
    /// `w ≡ 1`.
    Lebesgue,
    /// `w(t) = δ² |θ(t̄)|² / |φ(t̄)|²`, coefficients in ascending powers.
    Rational {
        theta: Vec<C64>,
        phi: Vec<C64>,
        delta2: f64,
    },
    /// Nonnegative samples on the uniform grid `2πi/L`, linearly interpolated.
    Tabulated { samples: Vec<f64> },
    /// No absolutely continuous part.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub location: C64,
    pub mass: f64,
}

impl Atom {
    pub fn at_angle(angle: f64, mass: f64) -> Self {
        Atom {
            location: C64::from_polar(1.0, angle),
            mass,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircleMeasure {
    density: Density,
    atoms: Vec<Atom>,
    grid_size: usize,
}

/// Values of a function on the uniform grid `θ_j = 2πj/M`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<C64>,
}

impl GridFunction {
    pub fn new(values: Vec<C64>) -> Self {
        GridFunction { values }
    }

    pub fn from_fn(grid_size: usize, f: impl Fn(C64) -> C64) -> Self {
        GridFunction {
            values: grid_nodes(grid_size).into_iter().map(f).collect(),
        }
    }

    pub fn grid_size(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }
}

/// A function known on the quadrature grid and at every atom of a measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Sampled {
    pub grid: GridFunction,
    pub atoms: Vec<C64>,
}

/// Quadrature nodes and weights: the uniform grid first, then the atoms.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub nodes: Vec<C64>,
    pub weights: Vec<f64>,
    pub grid_len: usize,
}

impl Quadrature {
    pub fn integrate(&self, values: &[C64]) -> C64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * *w).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Outcome of the Szegő-class test.
#[derive(Debug, Clone, PartialEq)]
pub struct SzegoCheck {
    pub is_szego: bool,
    /// `∫ log w dm` on the measure grid (may be `-inf`).
    pub log_integral: f64,
    /// The same integral on the doubled grid.
    pub log_integral_fine: f64,
    pub diagnostic: Option<String>,
}

/// `e^{2πij/m}` for `j = 0..m`.
pub fn grid_nodes(m: usize) -> Vec<C64> {
    (0..m)
        .map(|j| C64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64))
        .collect()
}

impl CircleMeasure {
    pub fn new(density: Density, atoms: Vec<Atom>, grid_size: usize) -> Result<Self> {
        if grid_size < 8 || !grid_size.is_power_of_two() {
            return Err(Error::InvalidMeasure(format!(
                "grid size {grid_size} must be a power of two >= 8"
            )));
        }
        for (i, a) in atoms.iter().enumerate() {
            if !(a.mass.is_finite() && a.mass > 0.0) {
                return Err(Error::InvalidMeasure(format!(
                    "atom {i} has non-positive mass {}",
                    a.mass
                )));
            }
            if (a.location.norm() - 1.0).abs() > UNIT_TOL {
                return Err(Error::InvalidMeasure(format!(
                    "atom {i} location {} is not on the unit circle",
                    a.location
                )));
            }
        }
        let density = match density {
            Density::Rational { theta, phi, delta2 } => {
                if !(delta2.is_finite() && delta2 > 0.0) {
                    return Err(Error::InvalidMeasure(format!("delta2 = {delta2} must be positive")));
                }
                let theta = trim_poly(&theta, 0.0);
                let phi = trim_poly(&phi, 0.0);
                if theta.is_empty() {
                    return Err(Error::InvalidMeasure("theta polynomial is zero".into()));
                }
                if phi.is_empty() {
                    return Err(Error::InvalidMeasure("phi polynomial is zero".into()));
                }
                for r in poly_roots(&phi)? {
                    if r.norm() <= 1.0 + UNIT_TOL {
                        return Err(Error::InvalidMeasure(format!(
                            "phi has root {r} (|r| = {}) in the closed unit disk",
                            r.norm()
                        )));
                    }
                }
                Density::Rational { theta, phi, delta2 }
            }
            Density::Tabulated { samples } => {
                if samples.is_empty() {
                    return Err(Error::InvalidMeasure("tabulated density has no samples".into()));
                }
                if let Some(bad) = samples.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
                    return Err(Error::InvalidMeasure(format!("tabulated sample {bad} is negative")));
                }
                if samples.iter().all(|s| *s == 0.0) {
                    Density::Zero
                } else {
                    Density::Tabulated { samples }
                }
            }
            d => d,
        };
        if matches!(density, Density::Zero) && atoms.is_empty() {
            return Err(Error::InvalidMeasure("zero total mass".into()));
        }
        Ok(CircleMeasure {
            density,
            atoms,
            grid_size,
        })
    }

    /// Normalized Lebesgue measure `dm`.
    pub fn lebesgue() -> Self {
        CircleMeasure {
            density: Density::Lebesgue,
            atoms: Vec::new(),
            grid_size: DEFAULT_GRID,
        }
    }

    /// `δ²|θ(t̄)|²/|φ(t̄)|² dm` on the default grid.
    pub fn rational(theta: Vec<C64>, phi: Vec<C64>, delta2: f64) -> Result<Self> {
        Self::new(Density::Rational { theta, phi, delta2 }, Vec::new(), DEFAULT_GRID)
    }

    pub fn with_atoms(self, atoms: Vec<Atom>) -> Result<Self> {
        Self::new(self.density, atoms, self.grid_size)
    }

    pub fn with_grid_size(self, grid_size: usize) -> Result<Self> {
        Self::new(self.density, self.atoms, grid_size)
    }

    pub fn density(&self) -> &Density {
        &self.density
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    /// Density with respect to `dm` at angle `angle`.
    pub fn density_at_angle(&self, angle: f64) -> f64 {
        match &self.density {
            Density::Lebesgue => 1.0,
            Density::Zero => 0.0,
            Density::Rational { theta, phi, delta2 } => {
                let z = C64::from_polar(1.0, -angle);
                delta2 * poly_eval(theta, z).norm_sqr() / poly_eval(phi, z).norm_sqr()
            }
            Density::Tabulated { samples } => {
                let l = samples.len();
                let x = angle.rem_euclid(2.0 * PI) / (2.0 * PI) * l as f64;
                let i = (x.floor() as usize).min(l - 1);
                let frac = x - i as f64;
                samples[i] * (1.0 - frac) + samples[(i + 1) % l] * frac
            }
        }
    }

    fn grid_density(&self, m: usize) -> Vec<f64> {
        (0..m)
            .map(|j| self.density_at_angle(2.0 * PI * j as f64 / m as f64))
            .collect()
    }

    /// Trapezoidal nodes/weights on an `m`-point grid, followed by the atoms.
    pub fn quadrature_on(&self, m: usize) -> Quadrature {
        let mut nodes = grid_nodes(m);
        let mut weights: Vec<f64> = self.grid_density(m).into_iter().map(|w| w / m as f64).collect();
        for a in &self.atoms {
            nodes.push(a.location);
            weights.push(a.mass);
        }
        Quadrature {
            nodes,
            weights,
            grid_len: m,
        }
    }

    pub fn quadrature(&self) -> Quadrature {
        self.quadrature_on(self.grid_size)
    }

    /// Mass of the absolutely continuous part on an `m`-point grid.
    fn ac_mass_on(&self, m: usize) -> f64 {
        self.grid_density(m).iter().sum::<f64>() / m as f64
    }

    fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// `σ(T)`; errors when doubling the grid moves the value by more than
    /// [`MASS_REFINEMENT_TOL`] relatively.
    pub fn total_mass(&self) -> Result<f64> {
        let coarse = self.ac_mass_on(self.grid_size) + self.atom_mass();
        let fine = self.ac_mass_on(2 * self.grid_size) + self.atom_mass();
        if (coarse - fine).abs() > MASS_REFINEMENT_TOL * fine.abs() {
            return Err(Error::GridTooCoarse { coarse, fine });
        }
        Ok(coarse)
    }

    /// Samples `f` on the measure grid and at every atom.
    pub fn sample(&self, f: impl Fn(C64) -> C64) -> Sampled {
        Sampled {
            grid: GridFunction::from_fn(self.grid_size, &f),
            atoms: self.atoms.iter().map(|a| f(a.location)).collect(),
        }
    }

    /// `∫ f ḡ dσ`.
    pub fn inner_product(&self, f: &Sampled, g: &Sampled) -> Result<C64> {
        let m = self.grid_size;
        if f.grid.grid_size() != m || g.grid.grid_size() != m {
            return Err(Error::DimensionMismatch(format!(
                "grid functions of size {} and {} against measure grid {m}",
                f.grid.grid_size(),
                g.grid.grid_size()
            )));
        }
        if f.atoms.len() != self.atoms.len() || g.atoms.len() != self.atoms.len() {
            return Err(Error::DimensionMismatch(format!(
                "atom values supplied for {} and {} of {} atoms",
                f.atoms.len(),
                g.atoms.len(),
                self.atoms.len()
            )));
        }
        let w = self.grid_density(m);
        let grid: C64 = f
            .grid
            .values()
            .iter()
            .zip(g.grid.values())
            .zip(&w)
            .map(|((a, b), w)| a * b.conj() * *w)
            .sum::<C64>()
            / m as f64;
        let atoms: C64 = f
            .atoms
            .iter()
            .zip(&g.atoms)
            .zip(&self.atoms)
            .map(|((a, b), atom)| a * b.conj() * atom.mass)
            .sum();
        Ok(grid + atoms)
    }

    fn log_integral_on(&self, m: usize) -> f64 {
        let w = self.grid_density(m);
        if w.iter().any(|v| *v <= 0.0) {
            return f64::NEG_INFINITY;
        }
        w.iter().map(|v| v.ln()).sum::<f64>() / m as f64
    }

    /// Szegő-class test by grid refinement: divergent when the log-density
    /// integrals on `M` and `2M` differ by more than 1 or either is below -50.
    pub fn is_szego_class(&self) -> SzegoCheck {
        let coarse = self.log_integral_on(self.grid_size);
        let fine = self.log_integral_on(2 * self.grid_size);
        let diagnostic = if !coarse.is_finite() || !fine.is_finite() {
            Some("density vanishes on grid points; log-integral is -inf".to_string())
        } else if (coarse - fine).abs() > 1.0 {
            Some(format!("log-integral unstable under refinement: {coarse} vs {fine}"))
        } else if coarse.min(fine) < -50.0 {
            Some(format!("log-integral {} below -50", coarse.min(fine)))
        } else {
            None
        };
        SzegoCheck {
            is_szego: diagnostic.is_none(),
            log_integral: coarse,
            log_integral_fine: fine,
            diagnostic,
        }
    }

    /// The outer function `S` with `|S|² = w` on the circle and `S(0) > 0`;
    /// atoms are ignored.
    pub fn szego_function(&self, z: C64) -> Result<C64> {
        if z.norm() >= 1.0 {
            return Err(Error::InvalidMeasure(format!("Szego function needs |z| < 1, got {z}")));
        }
        let check = self.is_szego_class();
        if !check.is_szego {
            return Err(Error::NonSzego(check.diagnostic.unwrap_or_default()));
        }
        if matches!(self.density, Density::Lebesgue) {
            return Ok(C64::new(1.0, 0.0));
        }
        let m = self.grid_size;
        let w = self.grid_density(m);
        let acc: C64 = grid_nodes(m)
            .into_iter()
            .zip(&w)
            .map(|(t, w)| (t + z) / (t - z) * w.ln())
            .sum();
        Ok((acc / (2.0 * m as f64)).exp())
    }
}
