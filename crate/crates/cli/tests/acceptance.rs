//! Acceptance suite: one PASS/FAIL line per criterion.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;

use orfgp_core::basis::{change_of_basis_matrix, fejer_riesz_factor};
use orfgp_core::fixtures::instance;
use orfgp_core::linalg::{max_abs, poly_eval};
use orfgp_core::measure::grid_nodes;
use orfgp_core::moments::{conjugate_gt, gt_from_measure, gt_from_moments, pick_solvability};
use orfgp_core::orf::orthonormalize;
use orfgp_core::predict::{asymptotic_energy_limit, energy_trajectory, forward_predict};
use orfgp_core::vgp::{filter_paths, filtered_covariance, sample_paths, spectral_sample, varma_causal_expansion};
use orfgp_core::{BasisSystem, CMatrix, CircleMeasure, PointSequence, SystemId, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SUITE_SEED: u64 = 20_240_601;
const MC_SEED: u64 = 7;
const MC_PATHS: usize = 100_000;

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn rel_gap(a: &CMatrix, b: &CMatrix) -> f64 {
    max_abs(&(a - b)) / max_abs(b).max(f64::MIN_POSITIVE)
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)*) => {
        if !($cond) {
            return Err(format!($($fmt)*));
        }
    };
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn moment_route() -> Check {
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let (measure, points) = instance(SUITE_SEED, i, 8);
        for id in [SystemId::W1, SystemId::W2, SystemId::W2P] {
            let sys = BasisSystem::new(id, points.clone(), 8).map_err(err)?;
            let gt = gt_from_measure(&sys, &measure).map_err(err)?;
            let seq = gt.moments().map_err(err)?;
            let rebuilt = gt_from_moments(&sys, &seq).map_err(err)?;
            let gap = rel_gap(rebuilt.matrix(), gt.matrix());
            worst = worst.max(gap);
            ensure!(
                gt.positivity().positive,
                "instance {i} {id}: measure GT matrix not positive"
            );
            ensure!(
                rebuilt.positivity().positive,
                "instance {i} {id}: moment GT matrix not positive"
            );
            if matches!(id, SystemId::W1 | SystemId::W2) {
                let pick = pick_solvability(&sys, &seq).map_err(err)?;
                ensure!(
                    pick.solvable,
                    "instance {i} {id}: Pick min eigenvalue {:e}",
                    pick.min_eigenvalue
                );
            }
        }
    }
    ensure!(worst <= 1e-8, "worst relative gap {worst:e} > 1e-8");
    Ok(format!("50 instances x 3 systems, worst relative gap {worst:.2e}"))
}

fn change_of_basis() -> Check {
    let ids = [SystemId::W1, SystemId::W2, SystemId::W2P];
    let (mut worst, mut round, mut floor): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for i in 0..10 {
        let (measure, points) = instance(SUITE_SEED, 100 + i, 8);
        for &a in &ids {
            for &b in &ids {
                if a == b {
                    continue;
                }
                let from = BasisSystem::new(a, points.clone(), 8).map_err(err)?;
                let to = BasisSystem::new(b, points.clone(), 8).map_err(err)?;
                let d = change_of_basis_matrix(&from, &to).map_err(err)?;
                let moved = conjugate_gt(&gt_from_measure(&from, &measure).map_err(err)?, &d).map_err(err)?;
                let direct = gt_from_measure(&to, &measure).map_err(err)?;
                worst = worst.max(rel_gap(moved.matrix(), direct.matrix()));
                floor = floor.max(rounding_floor(
                    d.matrix(),
                    &from_gt_abs(&from, &measure)?,
                    direct.matrix(),
                ));
                let id = d.matrix() * d.inverse().matrix();
                round = round.max(max_abs(&(id - CMatrix::identity(9, 9))));
            }
        }
    }
    ensure!(round <= 1e-9, "round trip gap {round:e} > 1e-9");
    ensure!(
        worst <= 1e-9,
        "conjugation gap {worst:.2e} > 1e-9 (double-precision floor eps |D|^H |C| |D| / |C'| reaches {floor:.2e})"
    );
    Ok(format!(
        "10 instances x 6 pairs, conjugation {worst:.2e} (floor {floor:.2e}), round trip {round:.2e}"
    ))
}

fn from_gt_abs(sys: &BasisSystem, measure: &CircleMeasure) -> std::result::Result<CMatrix, String> {
    Ok(gt_from_measure(sys, measure)
        .map_err(err)?
        .matrix()
        .map(|v| C64::new(v.norm(), 0.0)))
}

/// `eps max(|D|^H |C| |D|) / max|C'|`: the error a rounded `C` alone forces.
fn rounding_floor(d: &CMatrix, abs_c: &CMatrix, target: &CMatrix) -> f64 {
    let ad = d.map(|v| C64::new(v.norm(), 0.0));
    max_abs(&(ad.adjoint() * abs_c * &ad)) * f64::EPSILON / max_abs(target)
}

fn orf_correctness() -> Check {
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let (measure, points) = instance(SUITE_SEED, 200 + i, 12);
        let sys = BasisSystem::new(SystemId::W1, points, 12).map_err(err)?;
        let family = orthonormalize(&sys, &measure).map_err(err)?;
        worst = worst.max(family.orthonormality_residual());
    }
    ensure!(worst <= 1e-8, "orthonormality residual {worst:e} > 1e-8");
    let p = PointSequence::new(vec![c(0.0, 0.0), c(0.5, 0.0)]).map_err(err)?;
    let family = orthonormalize(
        &BasisSystem::new(SystemId::W1, p, 1).map_err(err)?,
        &CircleMeasure::lebesgue(),
    )
    .map_err(err)?;
    let want = 0.75f64.sqrt();
    let (f, r) = (family.norms()[1], family.reversed_norms()[1]);
    ensure!(
        (f - want).abs() <= 1e-12 && (r - want).abs() <= 1e-12,
        "norms {f}, {r} vs {want}"
    );
    Ok(format!(
        "n = 12 worst residual {worst:.2e}; two-point norms {f:.8}, {r:.8}"
    ))
}

fn energy_routes() -> Check {
    let (mut eval_gap, mut oracle_gap, mut det_gap): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for i in 0..50 {
        let (measure, points) = instance(SUITE_SEED, 300 + i, 12);
        let sys = BasisSystem::new(SystemId::W1, points, 12).map_err(err)?;
        let family = orthonormalize(&sys, &measure).map_err(err)?;
        let gram = family.gram();
        let mut prev_det = gram[(0, 0)].re;
        for n in 1..=12 {
            let r = forward_predict(&family, n).map_err(err)?;
            let e = r.energy_orf;
            eval_gap = eval_gap.max((r.energy_eval.expect("w1 report") - e).abs() / e);
            oracle_gap = oracle_gap.max((r.energy_oracle - e).abs() / e);
            let det = gram.view((0, 0), (n + 1, n + 1)).into_owned().determinant().re;
            det_gap = det_gap.max((e * e - det / prev_det).abs() / (e * e));
            prev_det = det;
        }
    }
    ensure!(eval_gap <= 1e-6, "evaluation route gap {eval_gap:e} > 1e-6");
    ensure!(oracle_gap <= 1e-8, "oracle gap {oracle_gap:e} > 1e-8");
    ensure!(det_gap <= 1e-8, "determinant ratio gap {det_gap:e} > 1e-8");
    Ok(format!(
        "eval {eval_gap:.2e}, oracle {oracle_gap:.2e}, determinant {det_gap:.2e}"
    ))
}

fn spectral_representation() -> Check {
    let (measure, points) = instance(SUITE_SEED, 400, 4);
    let sys = BasisSystem::new(SystemId::W1, points, 4).map_err(err)?;
    let analytic = gt_from_measure(&sys, &measure).map_err(err)?.into_matrix();
    let c00 = analytic[(0, 0)].re;
    let spectral = spectral_sample(&sys, &measure, MC_PATHS, MC_SEED, 2048).map_err(err)?;
    let direct = sample_paths(&analytic, MC_PATHS, MC_SEED).map_err(err)?;
    let gs = max_abs(&(spectral.empirical_covariance() - &analytic)) / c00;
    let gd = max_abs(&(direct.empirical_covariance() - &analytic)) / c00;
    ensure!(gs <= 0.05, "spectral gap {gs:e} > 0.05 c00");
    ensure!(gd <= 0.05, "direct gap {gd:e} > 0.05 c00");
    let family = orthonormalize(&sys, &measure).map_err(err)?;
    let tol = 3.0 / (MC_PATHS as f64).sqrt();
    let mut worst: f64 = 0.0;
    for k in 1..=4 {
        let e = family.norms()[k];
        let s = direct.regression_residual_std(k).map_err(err)?;
        worst = worst.max((s - e).abs() / e);
    }
    ensure!(worst <= tol, "innovation std gap {worst:e} > {tol:e}");
    Ok(format!(
        "spectral {gs:.2e}, direct {gd:.2e}, innovation std {worst:.2e} (limit {tol:.2e})"
    ))
}

fn asymptotics() -> Check {
    let leb = CircleMeasure::lebesgue();
    let tail = PointSequence::constant_tail(c(0.5, 0.0), 40).map_err(err)?;
    let energies = energy_trajectory(&BasisSystem::new(SystemId::W1, tail, 40).map_err(err)?, &leb).map_err(err)?;
    let want = 0.75f64.sqrt();
    let flat = energies.iter().map(|e| (e - want).abs()).fold(0.0, f64::max);
    ensure!(flat <= 1e-10, "Lebesgue constant tail deviates by {flat:e}");
    let sigma =
        CircleMeasure::rational(vec![c(1.0, 0.0), c(0.4, 0.0)], vec![c(1.0, 0.0), c(-0.5, 0.0)], 1.0).map_err(err)?;
    let limit = asymptotic_energy_limit(&sigma, c(0.3, 0.0)).map_err(err)?;
    let pts = PointSequence::constant_tail(c(0.3, 0.0), 60).map_err(err)?;
    let e60 = *energy_trajectory(&BasisSystem::new(SystemId::W1, pts, 60).map_err(err)?, &sigma)
        .map_err(err)?
        .last()
        .expect("60 energies");
    ensure!((e60 - limit).abs() <= 1e-2, "E_60 = {e60} vs limit {limit}");
    for probe in [c(1.0, 0.0), C64::from_polar(1.0, 2.3)] {
        let l = asymptotic_energy_limit(&sigma, probe).map_err(err)?;
        ensure!(l == 0.0, "boundary probe {probe} gave {l}");
    }
    Ok(format!(
        "tail 0.5 deviation {flat:.2e}; E_60 = {e60:.6} vs {limit:.6}; boundary limits 0"
    ))
}

fn varma() -> Check {
    let theta = [c(1.0, 0.0), c(0.4, 0.0)];
    let phi = [c(1.0, 0.0), c(-0.5, 0.0)];
    let f = varma_causal_expansion(&theta, &phi, 1.0, 1e-14).map_err(err)?;
    let mut boundary: f64 = 0.0;
    for k in 0..128 {
        let z = C64::from_polar(1.0, 2.0 * PI * k as f64 / 128.0);
        boundary = boundary.max((poly_eval(&theta, z) / poly_eval(&phi, z) - f.eval(z)).norm());
    }
    ensure!(boundary <= 1e-10, "boundary error {boundary:e}");

    let n = 8;
    let j = f.lag_max as usize;
    let delta2 = 1.7;
    let white = CMatrix::identity(n + j + 1, n + j + 1) * C64::new(delta2, 0.0);
    let cy = filtered_covariance(&white, 0, &f).map_err(err)?;
    let sigma = CircleMeasure::rational(theta.to_vec(), phi.to_vec(), delta2).map_err(err)?;
    let classical = BasisSystem::new(SystemId::W1, PointSequence::classical(n), n).map_err(err)?;
    let spectral = gt_from_measure(&classical, &sigma).map_err(err)?.into_matrix();
    let classical_gap = rel_gap(&cy.matrix, &spectral);
    ensure!(
        classical_gap <= 1e-8,
        "classical filtered covariance gap {classical_gap:e}"
    );

    let g = varma_causal_expansion(&theta, &phi, 1.0, 1e-6).map_err(err)?;
    let jg = g.lag_max as usize;
    let (measure, points) = instance(SUITE_SEED, 500, n + jg);
    let sys = BasisSystem::new(SystemId::W1, points, n + jg).map_err(err)?;
    let cx = gt_from_measure(&sys, &measure).map_err(err)?.into_matrix();
    let analytic = filtered_covariance(&cx, 0, &g).map_err(err)?;
    let x = sample_paths(&cx, MC_PATHS, MC_SEED).map_err(err)?;
    let (y, offset) = filter_paths(&x, 0, &g).map_err(err)?;
    ensure!(
        offset == analytic.offset,
        "path offset {offset} vs covariance offset {}",
        analytic.offset
    );
    let scale = (0..analytic.matrix.nrows())
        .map(|k| analytic.matrix[(k, k)].re)
        .fold(0.0, f64::max);
    let mc = max_abs(&(y.empirical_covariance() - &analytic.matrix)) / scale;
    ensure!(mc <= 0.05, "Monte Carlo filtered gap {mc:e} > 0.05 scale");
    Ok(format!(
        "J = {j}, boundary {boundary:.2e}; classical {classical_gap:.2e}; Monte Carlo {mc:.2e} (J = {jg})"
    ))
}

fn fejer_riesz() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED);
    let nodes = grid_nodes(4096);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let (_, points) = instance(SUITE_SEED, 600 + i, 6);
        let sys = BasisSystem::new(SystemId::W1, points, 6).map_err(err)?;
        let mut a: Vec<C64> = (0..=6)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        a[0].im = 0.0;
        let f = |a: &[C64], t: C64| -> f64 {
            let w = sys.eval_all(t).expect("grid avoids poles");
            2.0 * a.iter().zip(&w).map(|(x, v)| (x * v).re).sum::<f64>()
        };
        let lo = nodes.iter().map(|&t| f(&a, t)).fold(f64::INFINITY, f64::min);
        let hi = nodes.iter().map(|&t| f(&a, t)).fold(f64::NEG_INFINITY, f64::max);
        let margin = rng.random_range(0.01..0.5) * (hi - lo);
        a[0] += C64::new((margin - lo) / 2.0, 0.0);
        let scale = hi - lo + margin;
        for x in a.iter_mut() {
            *x /= scale;
        }
        let h = fejer_riesz_factor(&sys, &a).map_err(err)?;
        let gap = nodes
            .iter()
            .map(|&t| (f(&a, t) - h.eval(t).norm_sqr()).abs())
            .fold(0.0, f64::max);
        worst = worst.max(gap);
    }
    ensure!(worst <= 1e-8, "factor residual {worst:e} > 1e-8");
    Ok(format!("20 combinations, worst |f - |h|^2| = {worst:.2e}"))
}

fn run_cli(args: &[&str], dir: &Path, out: Option<&str>) -> std::result::Result<(Vec<u8>, Vec<u8>), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_orfgp"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(err)?;
    if !o.status.success() {
        return Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&o.stderr)));
    }
    let file = match out {
        Some(p) => std::fs::read(dir.join(p)).map_err(err)?,
        None => Vec::new(),
    };
    Ok((o.stdout, file))
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(err)?;
    let cfg = r#"{
        "measure": {"density": {"kind": "rational", "theta": [1, [0.2, 0.1]], "phi": [1, -0.5], "delta2": 1.3},
                    "atoms": [{"angle": 1.1, "mass": 0.2}]},
        "points": {"alphas": [0, [0.3, 0.2], [-0.4, 0.1], [0.1, -0.5], [0.5, 0.5]], "tail": {"alpha": 0.2, "count": 24}},
        "system": "w1", "n": 4, "seed": 11, "paths": 3000,
        "filter": {"theta": [1, 0.4], "phi": [1, -0.5], "R": 1, "tol": 1e-6}
    }"#;
    std::fs::write(dir.path().join("run.json"), cfg).map_err(err)?;
    std::fs::write(dir.path().join("moments.json"), "[[1, 0], [0.3, 0.1], [-0.2, 0.05]]").map_err(err)?;
    let base = ["--config", "run.json"];
    let runs: Vec<(Vec<&str>, Option<&str>)> = vec![
        (vec!["moments"], None),
        (
            vec!["moments", "--system", "w2", "--moments", "moments.json", "--n", "2"],
            None,
        ),
        (vec!["orf", "--format", "csv"], None),
        (
            vec![
                "simulate",
                "--sampler",
                "both",
                "--bins",
                "256",
                "--out",
                "paths.bin",
                "--format",
                "binary",
            ],
            Some("paths.bin"),
        ),
        (
            vec!["simulate", "--out", "paths.csv", "--format", "csv"],
            Some("paths.csv"),
        ),
        (vec!["predict", "--kind", "forward"], None),
        (vec!["predict", "--kind", "mixed_sym", "--horizon", "2"], None),
        (vec!["varma"], None),
        (vec!["asymptote", "--alpha", "0.2"], None),
    ];
    for (args, out) in &runs {
        let mut reference: Option<(Vec<u8>, Vec<u8>)> = None;
        for threads in [None, Some("1"), Some("3"), Some("8"), None] {
            let mut full: Vec<&str> = args.clone();
            full.extend(base);
            if let Some(t) = threads {
                full.extend(["--threads", t]);
            }
            let got = run_cli(&full, dir.path(), *out)?;
            ensure!(!got.0.is_empty(), "{args:?} printed nothing");
            match &reference {
                None => reference = Some(got),
                Some(r) => ensure!(*r == got, "{args:?} differs with --threads {threads:?}"),
            }
        }
    }
    Ok(format!(
        "{} command lines x 5 runs (threads default/1/3/8/default) bit-identical",
        runs.len()
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("moment-route equivalence", moment_route),
        ("change-of-basis coherence", change_of_basis),
        ("ORF correctness", orf_correctness),
        ("energy triple route", energy_routes),
        ("spectral representation", spectral_representation),
        ("energy asymptotics", asymptotics),
        ("VARMA expansion and filtering", varma),
        ("Fejer-Riesz factorization", fejer_riesz),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = std::time::Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
