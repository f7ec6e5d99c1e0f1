//! Pinned acceptance suite: ten independent checks, each exercising one
//! guaranteed behaviour end to end with fixed parameters and tolerances.
//!
//! Every criterion writes the evidence it judged (probe tables, per-seed
//! maxima, per-trial comparisons) as CSV files, prints one pass/fail line,
//! and never weakens its tolerance to the observed data: the numbers below
//! are commitments, not measurements. Criteria that depend on randomness
//! derive their generators from the master seed, so a rerun with the same
//! seed reproduces every output byte for byte.

use crate::out::OutFile;
use ergolab::dynamics::{misiurewicz_a0, MapSystem, PhasePoint};
use ergolab::hyperbolic::{
    classify, detect_pliss, dynamical_ball_1d, preball, sample_points, slow_approx_average,
    verify_metric_contraction,
};
use ergolab::numeric::{arc_dist, frac, neumaier_sum};
use ergolab::potentials::{
    make_bump_pair, verify_bounded, Analytic, BumpFn, BumpRegion, BumpShape, Potential,
    WordPrefixTable,
};
use ergolab::pressure::{
    build_separated, pressure_separated, pressure_separated_from, relative_pressure_shift,
    LambdaSpec, PressureEstimate, SeparatedSet, TableRow,
};
use ergolab::transfer::{mme_density, pressure_ulam, BuildMode, Grid};
use ergolab::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::LN_2;
use std::fmt::Write as _;
use std::time::Instant;

/// Outcome of one criterion, ready for printing and writing.
pub struct Criterion {
    pub index: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub files: Vec<OutFile>,
}

impl Criterion {
    /// The one-line verdict printed on stdout.
    pub fn line(&self) -> String {
        format!(
            "criterion {:02} {} {:7.2}s  {} :: {}",
            self.index,
            if self.passed { "pass" } else { "FAIL" },
            self.seconds,
            self.name,
            self.detail
        )
    }
}

struct Outcome {
    passed: bool,
    detail: String,
    files: Vec<OutFile>,
}

fn estimate_file(name: &str, est: &PressureEstimate) -> Result<OutFile> {
    let mut buf = Vec::new();
    est.write_csv(&mut buf)
        .map_err(|e| Error::Construction(format!("render csv: {e}")))?;
    Ok((name.to_string(), buf))
}

fn zero() -> Potential {
    Potential::Constant(0.0)
}

/// Run all ten criteria against one master seed.
pub fn run_suite(master_seed: u64) -> Vec<Criterion> {
    type CFn = fn(u64) -> Result<Outcome>;
    let specs: [(&'static str, CFn, Option<f64>); 10] = [
        (
            "full-shift pressure of the zero potential equals log k",
            c01_shift_entropy,
            Some(60.0),
        ),
        (
            "sub-alphabet pressure splits log 2 from log 3",
            c02_sub_alphabet,
            None,
        ),
        (
            "adding a constant shifts both pressure estimators by that constant",
            c03_constant_shift,
            None,
        ),
        (
            "pressure is monotone under pointwise domination",
            c04_monotonicity,
            None,
        ),
        (
            "separated-set growth recovers circle-cover entropy",
            c05_separated_entropy,
            Some(300.0),
        ),
        (
            "ulam eigenvalue hits the degree and the entropy density is flat",
            c06_ulam_spectrum,
            Some(60.0),
        ),
        (
            "inverse-branch pre-balls equal exact dynamical balls",
            c07_preball_identity,
            None,
        ),
        (
            "detected hyperbolic times satisfy backward contraction",
            c08_contraction,
            None,
        ),
        (
            "bump-pair Birkhoff sums stay inside the telescoping bound",
            c09_bounded_sums,
            Some(600.0),
        ),
        (
            "expanding behaviour dominates the skew-product ensemble",
            c10_ensemble,
            None,
        ),
    ];
    specs
        .iter()
        .enumerate()
        .map(|(i, (name, body, limit))| {
            let started = Instant::now();
            let result = body(master_seed);
            let seconds = started.elapsed().as_secs_f64();
            match result {
                Ok(mut outcome) => {
                    if let Some(lim) = limit {
                        if seconds > *lim {
                            outcome.passed = false;
                            let _ = write!(
                                outcome.detail,
                                "; exceeded the {lim}s time budget"
                            );
                        }
                    }
                    Criterion {
                        index: i + 1,
                        name,
                        passed: outcome.passed,
                        detail: outcome.detail,
                        seconds,
                        files: outcome.files,
                    }
                }
                Err(e) => Criterion {
                    index: i + 1,
                    name,
                    passed: false,
                    detail: format!("error: {e}"),
                    seconds,
                    files: Vec::new(),
                },
            }
        })
        .collect()
}

/// Exact entropy of the full k-shift, k in {2, 3, 4}: the bisection on the
/// cylinder-cover outer measure must land on log k within 1e-6.
fn c01_shift_entropy(_seed: u64) -> Result<Outcome> {
    let mut files = Vec::new();
    let mut parts = Vec::new();
    let mut passed = true;
    for k in [2u32, 3, 4] {
        let est = relative_pressure_shift(k, &zero(), &LambdaSpec::WholeSpace, 1, 24, 1e-7)?;
        let dev = (est.value - f64::from(k).ln()).abs();
        passed &= dev <= 1e-6;
        files.push(estimate_file(&format!("c01_shift_k{k}.csv"), &est)?);
        parts.push(format!("k={k} |dev|={dev:.1e}"));
    }
    Ok(Outcome {
        passed,
        detail: format!("{} (tol 1e-6)", parts.join(", ")),
        files,
    })
}

/// On the 3-shift, restricting to the symbols {0, 1} must drop the
/// pressure from log 3 to log 2, a gap above 0.4.
fn c02_sub_alphabet(_seed: u64) -> Result<Outcome> {
    let sub =
        relative_pressure_shift(3, &zero(), &LambdaSpec::SubAlphabet(vec![0, 1]), 1, 24, 1e-7)?;
    let full = relative_pressure_shift(3, &zero(), &LambdaSpec::WholeSpace, 1, 24, 1e-7)?;
    let dev_sub = (sub.value - LN_2).abs();
    let dev_full = (full.value - 3f64.ln()).abs();
    let gap = full.value - sub.value;
    Ok(Outcome {
        passed: dev_sub <= 1e-6 && dev_full <= 1e-6 && gap > 0.4,
        detail: format!(
            "|sub-log2|={dev_sub:.1e}, |full-log3|={dev_full:.1e}, gap={gap:.4} (tol 1e-6, gap > 0.4)"
        ),
        files: vec![
            estimate_file("c02_sub01.csv", &sub)?,
            estimate_file("c02_full.csv", &full)?,
        ],
    })
}

fn fixed_set_estimate(
    map: &MapSystem,
    phi: &Potential,
    set: &SeparatedSet,
) -> Result<PressureEstimate> {
    pressure_separated_from(
        map,
        phi,
        &[set.n()],
        &[set.epsilon()],
        set.points(),
        "frozen_set",
    )
}

/// P(phi + c) = P(phi) + c: for the cylinder bisection to twice the
/// bisection tolerance, and for separated sums over a frozen point set to
/// floating-point rounding.
fn c03_constant_shift(_seed: u64) -> Result<Outcome> {
    let offsets: [(&str, f64); 3] = [("neg0.5", -0.5), ("0.3", 0.3), ("1.0", 1.0)];
    let mut files = Vec::new();
    let mut passed = true;

    let phi = Potential::WordPrefix(WordPrefixTable::new(2, 2, vec![0.1, -0.2, 0.05, 0.3])?);
    let base = relative_pressure_shift(2, &phi, &LambdaSpec::WholeSpace, 1, 18, 1e-7)?;
    files.push(estimate_file("c03_bisect_base.csv", &base)?);
    let mut worst_bisect = 0.0f64;
    for (tag, c) in offsets {
        let shifted = relative_pressure_shift(
            2,
            &phi.clone().offset(c),
            &LambdaSpec::WholeSpace,
            1,
            18,
            1e-7,
        )?;
        let dev = (shifted.value - base.value - c).abs();
        worst_bisect = worst_bisect.max(dev);
        passed &= dev <= 2e-6;
        files.push(estimate_file(&format!("c03_bisect_c{tag}.csv"), &shifted)?);
    }

    let mut worst_sep = 0.0f64;
    for d in [2u32, 3] {
        let map = MapSystem::circle_times_d(d)?;
        let set = build_separated(&map, 3, 0.01, 1 << 10)?;
        let phi = Potential::Analytic(Analytic::CosTheta { t: 0.5 });
        let base = fixed_set_estimate(&map, &phi, &set)?;
        files.push(estimate_file(&format!("c03_sep_x{d}_base.csv"), &base)?);
        for (tag, c) in offsets {
            let est = fixed_set_estimate(&map, &phi.clone().offset(c), &set)?;
            let dev = (est.value - base.value - c).abs();
            worst_sep = worst_sep.max(dev);
            passed &= dev <= 1e-9;
            files.push(estimate_file(&format!("c03_sep_x{d}_c{tag}.csv"), &est)?);
        }
    }

    Ok(Outcome {
        passed,
        detail: format!(
            "bisection worst |dev|={worst_bisect:.1e} (tol 2e-6), separated worst |dev|={worst_sep:.1e} (tol 1e-9)"
        ),
        files,
    })
}

/// phi <= psi pointwise implies P(phi) <= P(psi): 100 random dominated
/// prefix-table pairs on the 2-shift, no violation beyond twice the
/// bisection tolerance.
fn c04_monotonicity(seed: u64) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6d6f_6e6f);
    let mut rows = String::from("trial,p_lower,p_upper,excess\n");
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0usize;
    for trial in 0..100 {
        let lower: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let upper: Vec<f64> = lower.iter().map(|v| v + rng.gen_range(0.0..1.0)).collect();
        let phi = Potential::WordPrefix(WordPrefixTable::new(2, 2, lower)?);
        let psi = Potential::WordPrefix(WordPrefixTable::new(2, 2, upper)?);
        let p_lo = relative_pressure_shift(2, &phi, &LambdaSpec::WholeSpace, 1, 16, 1e-6)?.value;
        let p_hi = relative_pressure_shift(2, &psi, &LambdaSpec::WholeSpace, 1, 16, 1e-6)?.value;
        let excess = p_lo - p_hi;
        worst = worst.max(excess);
        if excess > 2e-6 {
            violations += 1;
        }
        let _ = writeln!(rows, "{trial},{p_lo},{p_hi},{excess}");
    }
    Ok(Outcome {
        passed: violations == 0,
        detail: format!(
            "100 dominated pairs, worst excess {worst:.1e}, {violations} violations (tol 2e-6)"
        ),
        files: vec![("c04_monotonicity.csv".to_string(), rows.into_bytes())],
    })
}

/// Separated-set growth rates on x2 and x3 recover log d within 3%
/// relative error at epsilon = 1e-3 on a 2^16 candidate grid.
fn c05_separated_entropy(_seed: u64) -> Result<Outcome> {
    let mut files = Vec::new();
    let mut parts = Vec::new();
    let mut passed = true;
    for d in [2u32, 3] {
        let map = MapSystem::circle_times_d(d)?;
        let est = pressure_separated(&map, &zero(), &[0, 1], &[1e-3], 1 << 16)?;
        let target = f64::from(d).ln();
        let rel = (est.value - target).abs() / target;
        passed &= rel <= 0.03;
        files.push(estimate_file(&format!("c05_x{d}.csv"), &est)?);
        parts.push(format!("x{d} rel_dev={rel:.4}"));
    }
    Ok(Outcome {
        passed,
        detail: format!("{} (tol 3%)", parts.join(", ")),
        files,
    })
}

/// Exact-branch Ulam operators on x2 (4096 cells) and x3 (6561 cells):
/// leading eigenvalue within 1e-6 of the degree, and the maximal-entropy
/// density uniform to 1e-8.
fn c06_ulam_spectrum(_seed: u64) -> Result<Outcome> {
    let mut files = Vec::new();
    let mut parts = Vec::new();
    let mut passed = true;
    for (d, m) in [(2u32, 4096usize), (3, 6561)] {
        let map = MapSystem::circle_times_d(d)?;
        let grid = Grid::for_map_1d(&map, m)?;
        let est = pressure_ulam(&map, &zero(), &grid, BuildMode::ExactBranch, 1e-10)?;
        let lambda = est
            .table
            .iter()
            .find_map(|row| match row {
                TableRow::Ulam { lambda, .. } => Some(*lambda),
                _ => None,
            })
            .ok_or_else(|| Error::Construction("ulam estimate lacks its table row".into()))?;
        let dev_lambda = (lambda - f64::from(d)).abs();
        let density = mme_density(&map, &grid, 1e-10)?;
        let dev_rho = density
            .density()
            .iter()
            .map(|v| (v - 1.0).abs())
            .fold(0.0f64, f64::max);
        passed &= dev_lambda <= 1e-6 && dev_rho <= 1e-8;
        files.push(estimate_file(&format!("c06_ulam_x{d}.csv"), &est)?);
        let mut buf = Vec::new();
        density
            .write_csv(&mut buf)
            .map_err(|e| Error::Construction(format!("render csv: {e}")))?;
        files.push((format!("c06_mme_x{d}.csv"), buf));
        parts.push(format!(
            "x{d} |lambda-{d}|={dev_lambda:.1e}, max|rho-1|={dev_rho:.1e}"
        ));
    }
    Ok(Outcome {
        passed,
        detail: format!("{} (tol 1e-6 / 1e-8)", parts.join(", ")),
        files,
    })
}

/// The inverse-branch pre-ball and the directly-computed dynamical ball
/// are the same interval: 50 random (point, time) draws per degree, all
/// endpoint deviations below 1e-10.
fn c07_preball_identity(seed: u64) -> Result<Outcome> {
    let delta = 0.05;
    let mut rows = String::from("d,trial,n,endpoint_dev\n");
    let mut worst = 0.0f64;
    let mut failures = 0usize;
    for d in [2u32, 3] {
        let map = MapSystem::circle_times_d(d)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x7072_6530 + u64::from(d)));
        for trial in 0..50 {
            let x = PhasePoint::circle(rng.gen::<f64>());
            let n = rng.gen_range(0..=10usize);
            let pb = preball(&map, &x, n, delta)?;
            let db = dynamical_ball_1d(&map, &x, n, delta)?;
            let (a1, b1) = pb
                .region
                .endpoints()
                .ok_or_else(|| Error::Construction("pre-ball region has no endpoints".into()))?;
            let (a2, b2) = db
                .endpoints()
                .ok_or_else(|| Error::Construction("dynamical ball has no endpoints".into()))?;
            let dev = arc_dist(frac(a1), frac(a2)).max(arc_dist(frac(b1), frac(b2)));
            worst = worst.max(dev);
            if dev > 1e-10 {
                failures += 1;
            }
            let _ = writeln!(rows, "{d},{trial},{n},{dev}");
        }
    }
    Ok(Outcome {
        passed: failures == 0,
        detail: format!("100 draws, worst endpoint dev {worst:.1e}, {failures} failures (tol 1e-10)"),
        files: vec![("c07_preball.csv".to_string(), rows.into_bytes())],
    })
}

/// Pliss detection cross-validated by the metric: on x2 at sigma = 0.5
/// every time through 20 is hyperbolic with contraction ratio exactly 1;
/// on the Chebyshev-parameter quadratic from the critical value every time
/// passes the 1 + 1e-6 ratio bound at delta = 0.05.
fn c08_contraction(_seed: u64) -> Result<Outcome> {
    let mut rows = String::from("family,n,worst_ratio,passed\n");

    let map = MapSystem::circle_times_d(2)?;
    let start = PhasePoint::circle(0.3);
    let record = detect_pliss(&map.orbit(&start, 20)?, 0.5)?;
    let mut all_detected = true;
    let mut circle_ok = true;
    let mut circle_worst = 0.0f64;
    for n in 1..=20usize {
        all_detected &= record.is_hyperbolic(n);
        let rep = verify_metric_contraction(&map, &start, n, 0.5, 0.05, 64, 7)?;
        let dev = (rep.worst_ratio - 1.0).abs();
        circle_worst = circle_worst.max(dev);
        circle_ok &= rep.passed && dev <= 1e-12;
        let _ = writeln!(rows, "circle_x2,{n},{},{}", rep.worst_ratio, rep.passed);
    }

    let qmap = MapSystem::quadratic(2.0)?;
    let qstart = PhasePoint::interval(2.0);
    let qrecord = detect_pliss(&qmap.orbit(&qstart, 20)?, 0.5)?;
    let mut quad_ok = true;
    let mut quad_worst = 0.0f64;
    for n in 1..=20usize {
        all_detected &= qrecord.is_hyperbolic(n);
        let rep = verify_metric_contraction(&qmap, &qstart, n, 0.5, 0.05, 64, 7)?;
        quad_worst = quad_worst.max(rep.worst_ratio);
        quad_ok &= rep.passed && rep.worst_ratio <= 1.0 + 1e-6;
        let _ = writeln!(rows, "quadratic_a2,{n},{},{}", rep.worst_ratio, rep.passed);
    }

    Ok(Outcome {
        passed: all_detected && circle_ok && quad_ok,
        detail: format!(
            "all n<=20 detected={all_detected}; circle |ratio-1|<={circle_worst:.1e} (tol 1e-12); quadratic ratio<={quad_worst:.8} (tol 1+1e-6)"
        ),
        files: vec![("c08_contraction.csv".to_string(), rows.into_bytes())],
    })
}

/// Bump-pair potentials keep every Birkhoff sum inside the telescoping
/// bound sup phi_b over 1000 random orbits of 1e5 steps, on the circle
/// cover and on the skew product.
fn c09_bounded_sums(seed: u64) -> Result<Outcome> {
    let mut files = Vec::new();

    let map = MapSystem::circle_times_d(2)?;
    let phi = make_bump_pair(
        &map,
        BumpRegion::Interval { lo: 0.3, hi: 0.4 },
        BumpFn {
            shape: BumpShape::SineSquared,
            height: 1.0,
        },
    )?;
    let circle = verify_bounded(&phi, &map, 1000, 100_000, seed)?;
    let mut buf = Vec::new();
    circle
        .write_csv(&mut buf)
        .map_err(|e| Error::Construction(format!("render csv: {e}")))?;
    files.push(("c09_circle.csv".to_string(), buf));

    let vmap = MapSystem::viana(16, misiurewicz_a0(), 0.01)?;
    let vphi = make_bump_pair(
        &vmap,
        BumpRegion::Band {
            theta_lo: 0.0,
            theta_hi: 1.0,
            x_lo: 0.1,
            x_hi: 0.2,
        },
        BumpFn {
            shape: BumpShape::SineSquared,
            height: 1.0,
        },
    )?;
    let skew = verify_bounded(&vphi, &vmap, 1000, 100_000, seed)?;
    let mut buf = Vec::new();
    skew.write_csv(&mut buf)
        .map_err(|e| Error::Construction(format!("render csv: {e}")))?;
    files.push(("c09_viana.csv".to_string(), buf));

    let ok = |r: &ergolab::potentials::BirkhoffReport| {
        r.passed && r.global_max <= 1.0 + 1e-9
    };
    Ok(Outcome {
        passed: ok(&circle) && ok(&skew),
        detail: format!(
            "circle max|S_n|={:.10}, skew max|S_n|={:.10}, bound 1 (tol 1e-9); excluded {}+{}",
            circle.global_max, skew.global_max, circle.excluded, skew.excluded
        ),
        files,
    })
}

/// On the Viana-style skew product, at least 90% of 500 random seeds show
/// hyperbolic-time frequency >= 0.05 at sigma = 0.9 by horizon 5000, and
/// the mean slow-approximation average at delta = 1e-3 stays below 0.05.
fn c10_ensemble(seed: u64) -> Result<Outcome> {
    let map = MapSystem::viana(16, misiurewicz_a0(), 0.01)?;
    let points = sample_points(&map, 500, seed)?;
    let cls = classify(&map, &points, 0.9, 5000, 0.05)?;
    let fraction = cls.fraction_h();

    let averages: Vec<f64> = points
        .par_iter()
        .map(|p| -> Result<f64> {
            let orbit = map.orbit(p, 5000)?;
            slow_approx_average(&orbit, 1e-3)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean = neumaier_sum(averages.iter().copied()) / averages.len() as f64;
    let all_finite = averages.iter().all(|v| v.is_finite());

    let mut cls_csv = Vec::new();
    cls.write_csv(&mut cls_csv)
        .map_err(|e| Error::Construction(format!("render csv: {e}")))?;
    let mut slow_rows = String::from("seed,slow_approx_avg\n");
    for (i, avg) in averages.iter().enumerate() {
        let _ = writeln!(slow_rows, "{i},{avg}");
    }
    let _ = writeln!(slow_rows, "# mean={mean}");

    Ok(Outcome {
        passed: fraction >= 0.9 && mean < 0.05 && all_finite,
        detail: format!(
            "fraction_H={fraction:.4} (need >= 0.9), excluded={}, slow-approx mean={mean:.5} (need < 0.05)",
            cls.excluded
        ),
        files: vec![
            ("c10_classify.csv".to_string(), cls_csv),
            ("c10_slow.csv".to_string(), slow_rows.into_bytes()),
        ],
    })
}
