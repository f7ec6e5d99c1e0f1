//! Cross-module identities: statements whose two sides are computed by
//! different subsystems and must agree numerically.

use ergolab::dynamics::{misiurewicz_a0, MapSystem, PhasePoint};
use ergolab::hyperbolic::{
    delta_cal, detect_pliss, dynamical_ball_1d, preball, sample_points,
    verify_metric_contraction,
};
use ergolab::numeric::{arc_dist, frac};
use ergolab::potentials::{
    make_bump_pair, verify_bounded, BumpFn, BumpRegion, BumpShape, Potential, WordPrefixTable,
};
use ergolab::pressure::{
    build_separated, hyperbolicity_report, pressure_separated_from, relative_pressure_shift,
    EstimatorParams, LambdaSpec, Method, TableRow,
};
use std::f64::consts::LN_2;
use ergolab::transfer::{build_ulam, power_iterate, BuildMode, Grid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Pre-balls and dynamical balls coincide at hyperbolic times: for affine
/// circle covers every time is hyperbolic at `sigma = 1/d`, and the two
/// constructions must produce the same interval.
#[test]
fn preball_equals_dynamical_ball_on_circle_covers() {
    let delta = 0.05;
    for d in [2u32, 3] {
        let map = MapSystem::circle_times_d(d).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + u64::from(d));
        for _ in 0..50 {
            let x = PhasePoint::circle(rng.gen::<f64>());
            let n = rng.gen_range(0..=10usize);
            let pb = preball(&map, &x, n, delta).unwrap();
            let db = dynamical_ball_1d(&map, &x, n, delta).unwrap();
            let (a1, b1) = pb.region.endpoints().unwrap();
            let (a2, b2) = db.endpoints().unwrap();
            assert!(
                arc_dist(frac(a1), frac(a2)) < 1e-10 && arc_dist(frac(b1), frac(b2)) < 1e-10,
                "d={d} n={n}: preball ({a1},{b1}) vs ball ({a2},{b2})"
            );
        }
    }
}

struct ContractionCase {
    map: MapSystem,
    start: PhasePoint,
    sigma: f64,
    metric_sigma: f64,
    horizon: usize,
    verify_max_n: usize,
}

fn check_contraction(case: &ContractionCase, delta: f64) {
    let orbit = match case.map.orbit(&case.start, case.horizon) {
        Ok(o) => o,
        Err(_) => return,
    };
    let record = match detect_pliss(&orbit, case.sigma) {
        Ok(r) => r,
        Err(_) => return,
    };
    for &n in record.times() {
        if n > case.verify_max_n {
            break;
        }
        let rep = verify_metric_contraction(
            &case.map,
            &case.start,
            n,
            case.metric_sigma,
            delta,
            64,
            7,
        )
        .unwrap_or_else(|e| panic!("{} n={n}: {e}", case.map.describe()));
        assert!(
            rep.passed && rep.worst_ratio <= 1.0 + 1e-6,
            "{} n={n} delta={delta}: worst_ratio={}",
            case.map.describe(),
            rep.worst_ratio
        );
    }
}

/// Every Pliss-detected time on the calibration corpus passes the pairwise
/// backward-contraction check at the per-family default radius. Circle and
/// quadratic families verify at the detection rate; the skew product at
/// `sqrt(sigma)`, the usual conversion slack.
#[test]
fn detected_times_contract_at_calibrated_delta() {
    let mut rng = ChaCha8Rng::seed_from_u64(424242);
    let mut cases = Vec::new();

    for (d, sigma) in [(2u32, 0.5f64), (2, 0.55), (3, 0.4), (4, 0.3)] {
        let map = MapSystem::circle_times_d(d).unwrap();
        for _ in 0..6 {
            cases.push(ContractionCase {
                map: map.clone(),
                start: PhasePoint::circle(rng.gen::<f64>()),
                sigma,
                metric_sigma: sigma,
                horizon: 30,
                verify_max_n: 16,
            });
        }
    }

    let full = MapSystem::quadratic(2.0).unwrap();
    cases.push(ContractionCase {
        map: full.clone(),
        start: PhasePoint::interval(2.0),
        sigma: 0.5,
        metric_sigma: 0.5,
        horizon: 30,
        verify_max_n: 16,
    });
    let (lo, hi) = full.quadratic_domain().unwrap();
    for _ in 0..6 {
        cases.push(ContractionCase {
            map: full.clone(),
            start: PhasePoint::interval(lo + (hi - lo) * rng.gen::<f64>()),
            sigma: 0.8,
            metric_sigma: 0.8,
            horizon: 30,
            verify_max_n: 14,
        });
    }
    let mis = MapSystem::quadratic(misiurewicz_a0()).unwrap();
    let (lo, hi) = mis.quadratic_domain().unwrap();
    for _ in 0..6 {
        cases.push(ContractionCase {
            map: mis.clone(),
            start: PhasePoint::interval(lo + (hi - lo) * rng.gen::<f64>()),
            sigma: 0.8,
            metric_sigma: 0.8,
            horizon: 30,
            verify_max_n: 14,
        });
    }
    for case in &cases {
        let delta = delta_cal(&case.map).unwrap();
        check_contraction(case, delta);
    }

    let vmap = MapSystem::viana(16, misiurewicz_a0(), 0.01).unwrap();
    let delta = delta_cal(&vmap).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(424341);
    for _ in 0..8 {
        let start = vmap.random_point(&mut rng).unwrap();
        check_contraction(
            &ContractionCase {
                map: vmap.clone(),
                start,
                sigma: 0.9,
                metric_sigma: 0.9f64.sqrt(),
                horizon: 60,
                verify_max_n: 24,
            },
            delta,
        );
    }
}

/// Adding a constant to the potential shifts all three pressure estimators
/// by exactly that constant: the cylinder bisection to the bisection
/// tolerance, separated sets on a fixed point set to rounding, and the
/// spectral estimate to the accuracy of `exp`.
#[test]
fn constant_offset_shifts_every_estimator() {
    let c = 0.3;

    // Cylinder bisection on the 2-shift.
    let table = WordPrefixTable::new(2, 2, vec![0.1, -0.2, 0.05, 0.3]).unwrap();
    let phi = Potential::WordPrefix(table);
    let base = relative_pressure_shift(2, &phi, &LambdaSpec::WholeSpace, 1, 18, 1e-7).unwrap();
    let shifted = relative_pressure_shift(
        2,
        &phi.clone().offset(c),
        &LambdaSpec::WholeSpace,
        1,
        18,
        1e-7,
    )
    .unwrap();
    assert!(
        (shifted.value - base.value - c).abs() < 2e-6,
        "bisection shift: {} vs {}",
        shifted.value,
        base.value
    );

    // Separated sums over a fixed point set: rebuilding the greedy set
    // from already-separated candidates keeps every point, so both runs
    // sum over identical orbits and the shift is exact.
    for d in [2u32, 3] {
        let map = MapSystem::circle_times_d(d).unwrap();
        let set = build_separated(&map, 3, 0.01, 1 << 10).unwrap();
        let z0 = fixed_set_log_z(&map, &Potential::Constant(0.0), &set);
        let zc = fixed_set_log_z(&map, &Potential::Constant(0.0).offset(c), &set);
        assert!(
            (zc - z0 - 3.0 * c).abs() < 1e-9,
            "separated shift on x{d}: {zc} vs {z0}"
        );
    }

    // Spectral estimate.
    let map = MapSystem::circle_times_d(2).unwrap();
    let grid = Grid::for_map_1d(&map, 1 << 8).unwrap();
    let op0 = build_ulam(&map, &grid, &Potential::Constant(0.0), BuildMode::ExactBranch).unwrap();
    let opc = build_ulam(
        &map,
        &grid,
        &Potential::Constant(0.0).offset(c),
        BuildMode::ExactBranch,
    )
    .unwrap();
    let l0 = power_iterate(&op0, 1e-12, 10_000).unwrap().lambda.ln();
    let lc = power_iterate(&opc, 1e-12, 10_000).unwrap().lambda.ln();
    assert!((lc - l0 - c).abs() < 1e-10, "spectral shift: {lc} vs {l0}");
}

fn fixed_set_log_z(
    map: &MapSystem,
    phi: &Potential,
    set: &ergolab::pressure::SeparatedSet,
) -> f64 {
    let est = pressure_separated_from(
        map,
        phi,
        &[set.n()],
        &[set.epsilon()],
        set.points(),
        "fixed",
    )
    .unwrap();
    match est.table.as_slice() {
        [TableRow::Separated { count, log_z, .. }] => {
            assert_eq!(*count, set.len(), "greedy rebuild must keep every point");
            *log_z
        }
        other => panic!("expected one separated row, got {}", other.len()),
    }
}

/// Pointwise domination transfers to the cylinder pressure.
#[test]
fn dominated_potentials_order_their_pressures() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for trial in 0..20 {
        let lower: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let upper: Vec<f64> = lower
            .iter()
            .map(|v| v + rng.gen_range(0.0..0.8))
            .collect();
        let phi = Potential::WordPrefix(WordPrefixTable::new(2, 2, lower).unwrap());
        let psi = Potential::WordPrefix(WordPrefixTable::new(2, 2, upper).unwrap());
        let p_lo = relative_pressure_shift(2, &phi, &LambdaSpec::WholeSpace, 1, 16, 1e-6)
            .unwrap()
            .value;
        let p_hi = relative_pressure_shift(2, &psi, &LambdaSpec::WholeSpace, 1, 16, 1e-6)
            .unwrap()
            .value;
        assert!(
            p_lo <= p_hi + 2e-6,
            "trial {trial}: {p_lo} > {p_hi}"
        );
    }
}

/// The classification pipeline feeds the separated-set estimator: on the
/// skew product nearly all seeds land in the expanding class and the
/// H-side estimate exists, while the report never overstates its meaning.
#[test]
fn classification_feeds_pressure_report() {
    let map = MapSystem::viana(16, misiurewicz_a0(), 0.01).unwrap();
    let seeds = sample_points(&map, 128, 2024).unwrap();
    let cls = ergolab::hyperbolic::classify(&map, &seeds, 0.9, 500, 0.05).unwrap();
    assert!(cls.fraction_h() > 0.9);
    let report = hyperbolicity_report(
        &map,
        &Potential::Constant(0.0),
        &cls,
        &EstimatorParams {
            n_list: vec![0, 1],
            eps_list: vec![0.05],
        },
    )
    .unwrap();
    assert!(report.note.contains("HEURISTIC"));
    assert_eq!(report.h_side.points + report.hc_side.points, 128);
    let h_est = report.h_side.estimate.as_ref().expect("H side populated");
    assert_eq!(h_est.method, Method::SeparatedSets);
    assert!(h_est.value.is_finite());
    for row in &h_est.table {
        match row {
            TableRow::Separated { count, .. } => assert!(*count > 0),
            _ => panic!("separated estimator must emit separated rows"),
        }
    }
}

/// Bump pairs have uniformly bounded Birkhoff sums on both the circle
/// cover and the skew product; the telescoping bound is `sup phi_b`.
#[test]
fn bump_pair_sums_stay_bounded() {
    let map = MapSystem::circle_times_d(2).unwrap();
    let phi = make_bump_pair(
        &map,
        BumpRegion::Interval { lo: 0.3, hi: 0.4 },
        BumpFn {
            shape: BumpShape::SineSquared,
            height: 1.0,
        },
    )
    .unwrap();
    let rep = verify_bounded(&phi, &map, 100, 10_000, 11).unwrap();
    assert!(rep.passed, "circle: max {}", rep.global_max);
    assert_eq!(rep.bound, Some(1.0));
    assert!(rep.global_max <= 1.0 + 1e-9);

    let map = MapSystem::viana(16, misiurewicz_a0(), 0.01).unwrap();
    let phi = make_bump_pair(
        &map,
        BumpRegion::Band {
            theta_lo: 0.0,
            theta_hi: 1.0,
            x_lo: 0.1,
            x_hi: 0.2,
        },
        BumpFn {
            shape: BumpShape::Tent,
            height: 0.7,
        },
    )
    .unwrap();
    let rep = verify_bounded(&phi, &map, 50, 10_000, 11).unwrap();
    assert!(rep.passed, "viana: max {}", rep.global_max);
    assert!(rep.global_max <= 0.7 + 1e-9);
}

/// Entropy of the doubling map three ways: cylinder bisection, separated
/// growth, spectral radius. All must bracket `log 2`.
#[test]
fn doubling_entropy_three_ways() {
    let shift = relative_pressure_shift(
        2,
        &Potential::Constant(0.0),
        &LambdaSpec::WholeSpace,
        1,
        24,
        1e-6,
    )
    .unwrap();
    assert!((shift.value - LN_2).abs() < 1e-6, "shift: {}", shift.value);

    let map = MapSystem::circle_times_d(2).unwrap();
    let candidates: Vec<PhasePoint> =
        (0..(1 << 12)).map(|j| PhasePoint::circle(j as f64 / (1 << 12) as f64)).collect();
    let sep = pressure_separated_from(
        &map,
        &Potential::Constant(0.0),
        &[0, 1],
        &[1e-2],
        &candidates,
        "dyadic_grid",
    )
    .unwrap();
    assert!(
        (sep.value - LN_2).abs() / LN_2 < 0.03,
        "separated: {}",
        sep.value
    );

    let grid = Grid::for_map_1d(&map, 1 << 10).unwrap();
    let op = build_ulam(&map, &grid, &Potential::Constant(0.0), BuildMode::ExactBranch).unwrap();
    let spectral = power_iterate(&op, 1e-12, 10_000).unwrap();
    assert!(
        (spectral.lambda.ln() - LN_2).abs() < 1e-9,
        "ulam: {}",
        spectral.lambda
    );
}
