use num_complex::Complex64 as C64;
use orfgp_core::basis::change_of_basis_matrix;
use orfgp_core::fixtures::instance;
use orfgp_core::linalg::max_abs;
use orfgp_core::moments::gt_from_measure;
use orfgp_core::vgp::{
    filter_covariance, filter_paths, filtered_covariance, sample_paths, spectral_sample, varma_causal_expansion,
};
use orfgp_core::{BasisSystem, CMatrix, CircleMeasure, PointSequence, SystemId};

const SEED: u64 = 11;

fn covariance(id: SystemId, index: u64) -> (BasisSystem, CircleMeasure, CMatrix) {
    let (measure, points) = instance(SEED, index, 6);
    let sys = BasisSystem::new(id, points, 6).unwrap();
    let gt = gt_from_measure(&sys, &measure).unwrap().into_matrix();
    (sys, measure, gt)
}

fn gap(a: &CMatrix, b: &CMatrix) -> f64 {
    max_abs(&(a - b))
}

#[test]
fn direct_route_fidelity() {
    for &paths in &[10_000usize, 100_000] {
        for index in 0..3 {
            let (_, _, c) = covariance(SystemId::W2, index);
            let x = sample_paths(&c, paths, 100 + index).unwrap();
            let bound = 5.0 * c[(0, 0)].re / (paths as f64).sqrt();
            let g = gap(&x.empirical_covariance(), &c);
            assert!(g <= bound, "N = {paths}: gap {g:e} bound {bound:e}");
        }
    }
}

#[test]
fn spectral_route_fidelity() {
    for &paths in &[10_000usize, 100_000] {
        let (sys, measure, c) = covariance(SystemId::W1, 0);
        let x = spectral_sample(&sys, &measure, paths, 3, 4096).unwrap();
        let bound = 5.0 * c[(0, 0)].re / (paths as f64).sqrt();
        let g = gap(&x.empirical_covariance(), &c);
        assert!(g <= bound, "N = {paths}: gap {g:e} bound {bound:e}");
    }
}

#[test]
fn blaschke_paths_have_flat_variance() {
    let (_, _, c) = covariance(SystemId::W1, 1);
    let c00 = c[(0, 0)].re;
    let x = sample_paths(&c, 100_000, 5).unwrap();
    let cov = x.empirical_covariance();
    let top = (0..c.nrows()).map(|k| cov[(k, k)].re).fold(0.0, f64::max);
    assert!(top <= 1.05 * c00, "{top} against {c00}");
    assert!(x.mean_outliers(&c).is_empty());
}

#[test]
fn triangular_filter_matches_moved_covariance() {
    let (w2, _, c) = covariance(SystemId::W2, 2);
    let d = change_of_basis_matrix(&w2, &w2.with_id(SystemId::W1).unwrap()).unwrap();
    let x = sample_paths(&c, 100_000, 9).unwrap();
    let expected = filter_covariance(&c, &d).unwrap();
    let y = x.filtered(&d).unwrap().empirical_covariance();
    let bound = 5.0 * max_abs(&expected) / (100_000f64).sqrt();
    assert!(gap(&y, &expected) <= bound);
}

#[test]
fn lag_filter_matches_filtered_covariance() {
    // θ = 1 + 0.4 z, φ = 1 - 0.3 z on a classical window of 40 indices
    let theta = [C64::new(1.0, 0.0), C64::new(0.4, 0.0)];
    let phi = [C64::new(1.0, 0.0), C64::new(-0.3, 0.0)];
    let filter = varma_causal_expansion(&theta, &phi, 1.0, 1e-12).unwrap();
    let n = filter.lag_max as usize + 8;
    let (measure, _) = instance(SEED, 4, 1);
    let sys = BasisSystem::new(SystemId::W1, PointSequence::classical(n), n).unwrap();
    let c = gt_from_measure(&sys, &measure).unwrap().into_matrix();
    let block = filtered_covariance(&c, 0, &filter).unwrap();
    let x = sample_paths(&c, 20_000, 13).unwrap();
    let (y, offset) = filter_paths(&x, 0, &filter).unwrap();
    assert_eq!(offset, block.offset);
    let bound = 5.0 * max_abs(&block.matrix) / (20_000f64).sqrt();
    assert!(gap(&y.empirical_covariance(), &block.matrix) <= bound);
}

#[test]
fn lebesgue_spectral_sample_is_white() {
    let sys = BasisSystem::new(SystemId::W1, PointSequence::classical(5), 5).unwrap();
    let x = spectral_sample(&sys, &CircleMeasure::lebesgue(), 50_000, 1, 512).unwrap();
    let bound = 5.0 / (50_000f64).sqrt();
    assert!(gap(&x.empirical_covariance(), &CMatrix::identity(6, 6)) <= bound);
}

#[test]
fn sampling_is_reproducible_across_pools() {
    let (_, _, c) = covariance(SystemId::W1, 0);
    let a = sample_paths(&c, 3000, 42).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| sample_paths(&c, 3000, 42).unwrap());
    assert_eq!(a.values(), b.values());
}
