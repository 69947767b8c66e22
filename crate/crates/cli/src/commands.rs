use std::f64::consts::PI;
use std::path::Path;

use orfgp_core::basis::{SystemId, MAX_MODULUS};
use orfgp_core::config::{read_moments, OutputFormat, Sampler};
use orfgp_core::linalg::{max_abs, min_eigenvalue, poly_eval};
use orfgp_core::moments::{
    discrete_witness, gt_from_measure, gt_from_moments, gt_window, pick_solvability, Provenance,
};
use orfgp_core::orf::{laurent_families, orthonormalize};
use orfgp_core::predict::{
    asymptotic_energy_limit, backward_predict, energy_trajectory, forward_predict, mixed_layout, mixed_predict,
};
use orfgp_core::vgp::{filtered_covariance, sample_paths, spectral_sample, FilterSpec};
use orfgp_core::{BasisSystem, CMatrix, Error, PointSequence, PredictionKind, Result, RunConfig, SamplePaths, C64};
use serde::Serialize;

use crate::output::{self, float, matrix_csv, matrix_rows, table_csv};

/// Rendered output of a command.
pub struct Artifact {
    pub body: Vec<u8>,
}

fn text(s: String) -> Artifact {
    Artifact { body: s.into_bytes() }
}

fn report_format(cfg: &RunConfig) -> Result<OutputFormat> {
    match cfg.output.format {
        OutputFormat::Binary => Err(Error::config(
            "output.format",
            "binary output is only available for paths",
        )),
        f => Ok(f),
    }
}

#[derive(Serialize)]
struct PickJson {
    matrix: Vec<Vec<C64>>,
    min_eigenvalue: f64,
    solvable: bool,
}

#[derive(Serialize)]
struct WitnessJson {
    feasible: bool,
    residual: f64,
    atoms: usize,
}

#[derive(Serialize)]
struct MomentsReport {
    system: SystemId,
    n: usize,
    provenance: Provenance,
    matrix: Vec<Vec<C64>>,
    positive: bool,
    min_eigenvalue: f64,
    pick: Option<PickJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<WitnessJson>,
}

pub fn moments(cfg: &RunConfig, moments_file: Option<&Path>) -> Result<Artifact> {
    let format = report_format(cfg)?;
    let mut cfg = cfg.clone();
    let given = match moments_file {
        Some(p) => Some(read_moments(p, cfg.system)?),
        None => cfg.moment_sequence()?,
    };
    if let (Some(m), None, None) = (&given, cfg.n, &cfg.points) {
        cfg.n = Some(m.len() - 1);
    }
    let system = cfg.basis()?;
    let (gt, seq) = match given {
        Some(seq) => (gt_from_moments(&system, &seq)?, seq),
        None => {
            let gt = gt_from_measure(&system, &cfg.measure()?)?;
            let seq = gt.moments()?;
            (gt, seq)
        }
    };
    let pick = match pick_solvability(&system, &seq) {
        Ok(p) => Some(PickJson {
            matrix: matrix_rows(&p.matrix),
            min_eigenvalue: p.min_eigenvalue,
            solvable: p.solvable,
        }),
        Err(Error::Unsupported(_)) => None,
        Err(e) => return Err(e),
    };
    let witness = match gt.provenance() {
        Provenance::Quadrature => None,
        _ => {
            let w = discrete_witness(&system, &seq)?;
            Some(WitnessJson {
                feasible: w.feasible,
                residual: w.residual,
                atoms: w.masses.iter().filter(|&&m| m > 0.0).count(),
            })
        }
    };
    if format == OutputFormat::Csv {
        return Ok(text(matrix_csv(gt.matrix(), 0)));
    }
    let positivity = gt.positivity();
    Ok(text(output::json(&MomentsReport {
        system: system.id(),
        n: system.n(),
        provenance: gt.provenance(),
        matrix: matrix_rows(gt.matrix()),
        positive: positivity.positive,
        min_eigenvalue: positivity.min_eigenvalue,
        pick,
        witness,
    })))
}

#[derive(Serialize)]
struct OrfReport {
    system: SystemId,
    n: usize,
    /// Row `k`: coefficients of `φ_k` over `w_0..w_k`.
    coefficients: Vec<Vec<C64>>,
    monic: Vec<Vec<C64>>,
    reversed: Vec<Vec<C64>>,
    norms: Vec<f64>,
    reversed_norms: Vec<f64>,
    orthonormality_residual: f64,
}

fn lower_rows(m: &CMatrix) -> Vec<Vec<C64>> {
    (0..m.nrows()).map(|k| (0..=k).map(|s| m[(k, s)]).collect()).collect()
}

pub fn orf(cfg: &RunConfig) -> Result<Artifact> {
    let format = report_format(cfg)?;
    let family = orthonormalize(&cfg.basis()?, &cfg.measure()?)?;
    if format == OutputFormat::Csv {
        return Ok(text(matrix_csv(family.coeffs(), 0)));
    }
    Ok(text(output::json(&OrfReport {
        system: family.system().id(),
        n: family.n(),
        coefficients: lower_rows(family.coeffs()),
        monic: lower_rows(family.monic_coeffs()),
        reversed: (0..=family.n())
            .map(|k| (0..=k).map(|s| family.reversed_coeffs()[(k, s)]).collect())
            .collect(),
        norms: family.norms().to_vec(),
        reversed_norms: family.reversed_norms().to_vec(),
        orthonormality_residual: family.orthonormality_residual(),
    })))
}

#[derive(Serialize)]
struct RouteReport {
    max_gap: f64,
    relative_gap: f64,
    max_diagonal: f64,
    mean_outliers: Vec<usize>,
}

#[derive(Serialize)]
struct CovarianceEntry {
    j: usize,
    k: usize,
    analytic: C64,
    empirical: C64,
    gap: f64,
}

#[derive(Serialize)]
struct SimulateReport {
    system: SystemId,
    n: usize,
    paths: usize,
    seed: u64,
    sampler: Sampler,
    bins: usize,
    c00: f64,
    direct: Option<RouteReport>,
    spectral: Option<RouteReport>,
    spectral_vs_direct: Option<f64>,
    table: Vec<CovarianceEntry>,
}

fn route(paths: &SamplePaths, analytic: &CMatrix) -> Option<(RouteReport, CMatrix)> {
    if paths.paths() == 0 {
        return None;
    }
    let e = paths.empirical_covariance();
    let gap = max_abs(&(&e - analytic));
    let report = RouteReport {
        max_gap: gap,
        relative_gap: gap / analytic[(0, 0)].re,
        max_diagonal: (0..e.nrows()).map(|k| e[(k, k)].re).fold(0.0, f64::max),
        mean_outliers: paths.mean_outliers(analytic),
    };
    Some((report, e))
}

/// Returns the report and, when requested, the sampled paths.
pub fn simulate(cfg: &RunConfig) -> Result<(Artifact, Option<Artifact>)> {
    let system = cfg.basis()?;
    let measure = cfg.measure()?;
    let analytic = gt_from_measure(&system, &measure)?.into_matrix();
    let direct = match cfg.sampler {
        Sampler::Direct | Sampler::Both => Some(sample_paths(&analytic, cfg.paths, cfg.seed)?),
        Sampler::Spectral => None,
    };
    let spectral = match cfg.sampler {
        Sampler::Spectral | Sampler::Both => Some(spectral_sample(&system, &measure, cfg.paths, cfg.seed, cfg.bins)?),
        Sampler::Direct => None,
    };
    let d = direct.as_ref().and_then(|p| route(p, &analytic));
    let s = spectral.as_ref().and_then(|p| route(p, &analytic));
    let cross = match (&d, &s) {
        (Some((_, a)), Some((_, b))) => Some(max_abs(&(a - b))),
        _ => None,
    };
    let empirical = d.as_ref().or(s.as_ref()).map(|(_, e)| e.clone());
    let mut table = Vec::new();
    for j in 0..analytic.nrows() {
        for k in j..analytic.ncols() {
            let emp = empirical.as_ref().map_or(C64::new(0.0, 0.0), |e| e[(j, k)]);
            table.push(CovarianceEntry {
                j,
                k,
                analytic: analytic[(j, k)],
                empirical: emp,
                gap: if empirical.is_some() {
                    (emp - analytic[(j, k)]).norm()
                } else {
                    0.0
                },
            });
        }
    }
    let report = SimulateReport {
        system: system.id(),
        n: system.n(),
        paths: cfg.paths,
        seed: cfg.seed,
        sampler: cfg.sampler,
        bins: cfg.bins,
        c00: analytic[(0, 0)].re,
        direct: d.map(|(r, _)| r),
        spectral: s.map(|(r, _)| r),
        spectral_vs_direct: cross,
        table,
    };
    let paths = match &cfg.output.path {
        None => None,
        Some(_) => {
            let p = direct.as_ref().or(spectral.as_ref()).expect("a sampler ran");
            Some(match cfg.output.format {
                OutputFormat::Binary => Artifact {
                    body: output::paths_binary(p),
                },
                OutputFormat::Csv => text(output::paths_csv(p)),
                OutputFormat::Json => text(output::paths_json(p)),
            })
        }
    };
    Ok((text(output::json(&report)), paths))
}

pub fn predict(cfg: &RunConfig) -> Result<Artifact> {
    let format = report_format(cfg)?;
    let system = cfg.basis()?;
    let measure = cfg.measure()?;
    let kind = cfg.prediction_kind();
    let n = system.n();
    let report = match kind {
        PredictionKind::Forward | PredictionKind::Backward => {
            let h = cfg.horizon.unwrap_or(n);
            if h == 0 || h > n {
                return Err(Error::config("horizon", format!("must lie in 1..={n}")));
            }
            let family = orthonormalize(&system.with_n(h)?, &measure)?;
            if kind == PredictionKind::Forward {
                forward_predict(&family, h)?
            } else {
                backward_predict(&family, h)?
            }
        }
        mixed => {
            // sym reaches indices ±h, plus and minus reach h + 1.
            let extra = usize::from(mixed != PredictionKind::MixedSym);
            let max_h = n.checked_sub(extra).filter(|&h| h >= extra).unwrap_or(0);
            let h = cfg.horizon.unwrap_or(max_h);
            if h + extra > n || (mixed == PredictionKind::MixedSym && h == 0) {
                return Err(Error::config(
                    "horizon",
                    format!("{mixed:?} needs horizon + {extra} <= n = {n}"),
                ));
            }
            let (ordering, m) = mixed_layout(mixed, h)?;
            let laurent = laurent_families(&system.with_n(h + extra)?, &measure, ordering, m)?;
            mixed_predict(&laurent, h, mixed)?
        }
    };
    if format == OutputFormat::Csv {
        let rows: Vec<Vec<String>> = report
            .conditioning
            .iter()
            .zip(&report.coefficients)
            .map(|(&i, c)| vec![i.to_string(), float(c.re), float(c.im)])
            .collect();
        return Ok(text(table_csv(&["index", "re", "im"], &rows)));
    }
    Ok(text(output::json(&report)))
}

#[derive(Serialize)]
struct CovarianceJson {
    offset: isize,
    matrix: Vec<Vec<C64>>,
    min_eigenvalue: f64,
}

#[derive(Serialize)]
struct VarmaReport {
    filter: FilterSpec,
    terms: usize,
    boundary_error: f64,
    system: SystemId,
    n: usize,
    input_window: [usize; 2],
    covariance: CovarianceJson,
}

/// Max over 128 points of `|z| = 1` of `|θ/φ - Σ ψ_j z^j|`.
pub fn boundary_error(theta: &[C64], phi: &[C64], f: &FilterSpec) -> f64 {
    (0..128)
        .map(|k| {
            let z = C64::from_polar(1.0, 2.0 * PI * k as f64 / 128.0);
            (poly_eval(theta, z) / poly_eval(phi, z) - f.eval(z)).norm()
        })
        .fold(0.0, f64::max)
}

pub fn varma(cfg: &RunConfig) -> Result<Artifact> {
    let format = report_format(cfg)?;
    let filter_cfg = cfg
        .filter
        .as_ref()
        .ok_or_else(|| Error::config("filter", "missing filter section"))?;
    let filter = cfg.filter_spec()?;
    let theta: Vec<C64> = filter_cfg.theta.iter().map(|&c| c.into()).collect();
    let phi: Vec<C64> = filter_cfg.phi.iter().map(|&c| c.into()).collect();
    let j = filter.lag_max as usize;
    let n = match (&cfg.points, cfg.n) {
        (None, Some(n)) => n,
        _ => cfg.order()?,
    };
    let hi = n + j;
    let points = match &cfg.points {
        Some(_) => cfg.point_sequence()?,
        None => PointSequence::classical(hi),
    };
    if points.max_index() < hi {
        return Err(Error::InsufficientWindow(format!(
            "outputs 0..={n} through lags 0..={j} need alphas up to index {hi}, config has {}",
            points.max_index()
        )));
    }
    let system = BasisSystem::new(cfg.system, points, hi)?;
    let cx = gt_window(&system, &cfg.measure()?, 0, hi)?.into_matrix();
    let cy = filtered_covariance(&cx, 0, &filter)?;
    if format == OutputFormat::Csv {
        return Ok(text(matrix_csv(&cy.matrix, cy.offset)));
    }
    let report = VarmaReport {
        boundary_error: boundary_error(&theta, &phi, &filter),
        terms: filter.psi.len(),
        system: cfg.system,
        n,
        input_window: [0, hi],
        covariance: CovarianceJson {
            offset: cy.offset,
            min_eigenvalue: min_eigenvalue(&cy.matrix),
            matrix: matrix_rows(&cy.matrix),
        },
        filter,
    };
    Ok(text(output::json(&report)))
}

#[derive(Serialize)]
struct TrajectoryPoint {
    n: usize,
    alpha: C64,
    energy: f64,
    gap: f64,
}

#[derive(Serialize)]
struct AsymptoteReport {
    alpha: C64,
    limit: f64,
    trajectory: Vec<TrajectoryPoint>,
}

/// Energies always use the Blaschke system.
pub fn asymptote(cfg: &RunConfig) -> Result<Artifact> {
    let format = report_format(cfg)?;
    let measure = cfg.measure()?;
    // Without configured points the probe runs on the constant tail at
    // `alpha`; a boundary probe has no trajectory, only its zero limit.
    let system = match (&cfg.points, cfg.alpha.map(C64::from), cfg.n) {
        (None, Some(a), _) if a.norm() > MAX_MODULUS => None,
        (None, Some(a), Some(n)) => Some(BasisSystem::new(SystemId::W1, PointSequence::constant_tail(a, n)?, n)?),
        _ => Some(cfg.basis()?.with_id(SystemId::W1)?),
    };
    let alpha = match (cfg.alpha, &system) {
        (Some(a), _) => a.into(),
        (None, Some(s)) => s.points().alpha(s.n()),
        (None, None) => unreachable!("a missing system implies a configured alpha"),
    };
    let limit = asymptotic_energy_limit(&measure, alpha)?;
    let trajectory: Vec<TrajectoryPoint> = match &system {
        None => Vec::new(),
        Some(system) => energy_trajectory(system, &measure)?
            .iter()
            .enumerate()
            .map(|(i, &e)| TrajectoryPoint {
                n: i + 1,
                alpha: system.points().alpha(i + 1),
                energy: e,
                gap: (e - limit).abs(),
            })
            .collect(),
    };
    if format == OutputFormat::Csv {
        let rows: Vec<Vec<String>> = trajectory
            .iter()
            .map(|p| {
                let mut r = vec![p.n.to_string()];
                r.extend([p.alpha.re, p.alpha.im, p.energy, limit, p.gap].map(float));
                r
            })
            .collect();
        return Ok(text(table_csv(
            &["n", "alpha_re", "alpha_im", "energy", "limit", "gap"],
            &rows,
        )));
    }
    Ok(text(output::json(&AsymptoteReport {
        alpha,
        limit,
        trajectory,
    })))
}
