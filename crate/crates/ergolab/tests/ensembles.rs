//! Ensemble statistics on the skew product, recorded as regression
//! baselines under a fixed master seed.

use ergolab::dynamics::{misiurewicz_a0, MapSystem};
use ergolab::hyperbolic::{classify, sample_points, slow_approx_average};

const MASTER_SEED: u64 = 424242;

fn viana() -> MapSystem {
    MapSystem::viana(16, misiurewicz_a0(), 0.01).unwrap()
}

/// Nearly every random seed shows a positive frequency of Pliss times:
/// 500 seeds at sigma = 0.9, horizon 5000, threshold 0.05 all classify as
/// expanding, with per-orbit frequencies far above the threshold.
#[test]
fn expanding_class_dominates_at_regression_seed() {
    let map = viana();
    let seeds = sample_points(&map, 500, MASTER_SEED).unwrap();
    let cls = classify(&map, &seeds, 0.9, 5000, 0.05).unwrap();
    assert!(
        cls.fraction_h() >= 0.9,
        "fraction_h = {}",
        cls.fraction_h()
    );
    assert_eq!(cls.excluded, 0);
    let min_freq = cls
        .entries
        .iter()
        .map(|e| e.frequency)
        .fold(f64::INFINITY, f64::min);
    assert!(min_freq > 0.5, "min frequency = {min_freq}");
}

/// Orbits rarely linger near the critical line: the truncated
/// `-log dist` averages stay small in the ensemble mean.
#[test]
fn slow_approximation_mean_is_small() {
    let map = viana();
    let seeds = sample_points(&map, 200, MASTER_SEED).unwrap();
    let mut sum = 0.0f64;
    let mut worst = 0.0f64;
    for p in &seeds {
        let orbit = map.orbit(p, 10_000).unwrap();
        let v = slow_approx_average(&orbit, 1e-3).unwrap();
        assert!(v.is_finite());
        sum += v;
        worst = worst.max(v);
    }
    let mean = sum / seeds.len() as f64;
    assert!(mean < 0.05, "ensemble mean = {mean}");
    assert!(worst < 0.5, "worst orbit = {worst}");
}

/// Classification output is a pure function of the seed: identical runs
/// serialize to identical bytes regardless of the thread pool.
#[test]
fn classification_bytes_are_reproducible() {
    let map = viana();
    let seeds = sample_points(&map, 100, MASTER_SEED).unwrap();
    let mut first = Vec::new();
    let mut second = Vec::new();
    classify(&map, &seeds, 0.9, 500, 0.05)
        .unwrap()
        .write_csv(&mut first)
        .unwrap();
    classify(&map, &seeds, 0.9, 500, 0.05)
        .unwrap()
        .write_csv(&mut second)
        .unwrap();
    assert_eq!(first, second);
    assert!(first.starts_with(b"seed,freq,label\n"));
}
