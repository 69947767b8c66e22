//! JSON run configuration.
//!
//! Complex numbers are written as `{"re": f, "im": f}`, `[re, im]` or a bare
//! real number.

use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisSystem, PointSequence, SystemId};
use crate::error::{Error, Result};
use crate::measure::{Atom, CircleMeasure, Density, DEFAULT_GRID};
use crate::moments::MomentSequence;
use crate::predict::PredictionKind;
use crate::vgp::{varma_causal_expansion, FilterSpec};

/// |α_0| below this is read as an exact zero.
pub const ALPHA0_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexValue {
    Object { re: f64, im: f64 },
    Pair([f64; 2]),
    Real(f64),
}

impl From<ComplexValue> for C64 {
    fn from(v: ComplexValue) -> C64 {
        match v {
            ComplexValue::Object { re, im } => C64::new(re, im),
            ComplexValue::Pair([re, im]) => C64::new(re, im),
            ComplexValue::Real(re) => C64::new(re, 0.0),
        }
    }
}

impl From<C64> for ComplexValue {
    fn from(z: C64) -> Self {
        ComplexValue::Object { re: z.re, im: z.im }
    }
}

fn complex_list(v: &[ComplexValue]) -> Vec<C64> {
    v.iter().map(|&c| c.into()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DensityConfig {
    Lebesgue,
    Rational {
        theta: Vec<ComplexValue>,
        phi: Vec<ComplexValue>,
        #[serde(default = "one")]
        delta2: f64,
    },
    Tabulated {
        samples: Vec<f64>,
    },
    Zero,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub angle: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    pub density: DensityConfig,
    #[serde(default)]
    pub atoms: Vec<AtomConfig>,
    #[serde(default = "default_grid")]
    pub grid_size: usize,
}

fn default_grid() -> usize {
    DEFAULT_GRID
}

impl Default for MeasureConfig {
    fn default() -> Self {
        MeasureConfig {
            density: DensityConfig::Lebesgue,
            atoms: Vec::new(),
            grid_size: DEFAULT_GRID,
        }
    }
}

impl MeasureConfig {
    pub fn build(&self) -> Result<CircleMeasure> {
        let density = match &self.density {
            DensityConfig::Lebesgue => Density::Lebesgue,
            DensityConfig::Rational { theta, phi, delta2 } => Density::Rational {
                theta: complex_list(theta),
                phi: complex_list(phi),
                delta2: *delta2,
            },
            DensityConfig::Tabulated { samples } => Density::Tabulated {
                samples: samples.clone(),
            },
            DensityConfig::Zero => Density::Zero,
        };
        let atoms = self.atoms.iter().map(|a| Atom::at_angle(a.angle, a.mass)).collect();
        CircleMeasure::new(density, atoms, self.grid_size)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailConfig {
    pub alpha: ComplexValue,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointsConfig {
    pub alphas: Vec<ComplexValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailConfig>,
}

impl PointsConfig {
    pub fn build(&self) -> Result<PointSequence> {
        let mut alphas = complex_list(&self.alphas);
        match alphas.first_mut() {
            None => return Err(Error::config("points.alphas", "needs at least alpha_0 = 0")),
            Some(a0) if a0.norm() < ALPHA0_TOL => *a0 = C64::new(0.0, 0.0),
            Some(a0) => {
                return Err(Error::config(
                    "points.alphas[0]",
                    format!("alpha_0 must be 0, got {a0}"),
                ))
            }
        }
        if let Some(t) = &self.tail {
            alphas.extend(std::iter::repeat_n(C64::from(t.alpha), t.count));
        }
        PointSequence::allowing_repeats(alphas)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    pub theta: Vec<ComplexValue>,
    pub phi: Vec<ComplexValue>,
    #[serde(rename = "R", default = "one")]
    pub radius: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_tol() -> f64 {
    1e-14
}

impl FilterConfig {
    pub fn build(&self) -> Result<FilterSpec> {
        varma_causal_expansion(
            &complex_list(&self.theta),
            &complex_list(&self.phi),
            self.radius,
            self.tol,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
    Binary,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "binary" => Ok(OutputFormat::Binary),
            other => Err(Error::config("output.format", format!("unknown format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Sampler {
    #[default]
    Direct,
    Spectral,
    Both,
}

impl std::str::FromStr for Sampler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Sampler::Direct),
            "spectral" => Ok(Sampler::Spectral),
            "both" => Ok(Sampler::Both),
            other => Err(Error::config("sampler", format!("unknown sampler `{other}`"))),
        }
    }
}

fn default_bins() -> usize {
    2048
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub measure: MeasureConfig,
    /// Defaults to `α ≡ 0` of length `n + 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<PointsConfig>,
    #[serde(default = "default_system")]
    pub system: SystemId,
    /// Defaults to the last index of `points`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub paths: usize,
    /// Overrides `measure.grid_size`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_size: Option<usize>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moments: Option<Vec<ComplexValue>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<PredictionKind>,
    /// Prediction horizon; defaults to the largest one `n` supports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<ComplexValue>,
    #[serde(default)]
    pub sampler: Sampler,
    #[serde(default = "default_bins")]
    pub bins: usize,
}

fn default_system() -> SystemId {
    SystemId::W1
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            measure: MeasureConfig::default(),
            points: None,
            system: SystemId::W1,
            n: None,
            seed: 0,
            paths: 0,
            grid_size: None,
            output: OutputConfig::default(),
            moments: None,
            filter: None,
            kind: None,
            horizon: None,
            alpha: None,
            sampler: Sampler::Direct,
            bins: default_bins(),
        }
    }
}

fn json_error(e: serde_json::Error) -> Error {
    Error::config("config", e.to_string())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(json_error)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn measure(&self) -> Result<CircleMeasure> {
        let mut m = self.measure.clone();
        if let Some(g) = self.grid_size {
            m.grid_size = g;
        }
        m.build()
    }

    pub fn point_sequence(&self) -> Result<PointSequence> {
        match (&self.points, self.n) {
            (Some(p), _) => p.build(),
            (None, Some(n)) => Ok(PointSequence::classical(n)),
            (None, None) => Err(Error::config("n", "give `n` or `points`")),
        }
    }

    pub fn order(&self) -> Result<usize> {
        let points = self.point_sequence()?;
        let n = self.n.unwrap_or(points.max_index());
        if n > points.max_index() {
            return Err(Error::config(
                "n",
                format!("n = {n} exceeds the {} configured alphas", points.len()),
            ));
        }
        Ok(n)
    }

    pub fn basis(&self) -> Result<BasisSystem> {
        BasisSystem::new(self.system, self.point_sequence()?, self.order()?)
    }

    pub fn moment_sequence(&self) -> Result<Option<MomentSequence>> {
        self.moments
            .as_ref()
            .map(|m| MomentSequence::new(complex_list(m), self.system))
            .transpose()
    }

    pub fn filter_spec(&self) -> Result<FilterSpec> {
        self.filter
            .as_ref()
            .ok_or_else(|| Error::config("filter", "missing filter section"))?
            .build()
    }

    pub fn prediction_kind(&self) -> PredictionKind {
        self.kind.unwrap_or(PredictionKind::Forward)
    }
}

/// Moments as a bare JSON list of complex values.
pub fn read_moments(path: &Path, system: SystemId) -> Result<MomentSequence> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config("moments", format!("cannot read {}: {e}", path.display())))?;
    let values: Vec<ComplexValue> = serde_json::from_str(&text).map_err(|e| Error::config("moments", e.to_string()))?;
    MomentSequence::new(complex_list(&values), system)
}
