//! Hyperbolic times: detection, verification, and classification.
//!
//! A time `n` along an orbit is a `sigma`-hyperbolic time when every tail
//! window of the inverse-derivative norms contracts at rate `sigma`:
//!
//! ```text
//! prod_{j=n-k}^{n-1} ||Df(x_j)^{-1}|| <= sigma^k   for all 1 <= k <= n.
//! ```
//!
//! Detection runs in O(length): with `P_n = sum_{j<n} (log ||Df(x_j)^{-1}||
//! - log sigma)` the condition is `P_n <= min_{m<n} P_m`, a running-minimum
//! check. At such times the map `f^n` expands a neighbourhood `V_n(x)` (the
//! pre-ball) homeomorphically onto a ball of fixed radius `delta`, with
//! exponential backward contraction; `verify_metric_contraction` samples
//! point pairs to confirm that metric statement, and `preball` /
//! `dynamical_ball_1d` construct the sets themselves for one-dimensional
//! maps. `classify` labels seed points by the empirical frequency of
//! hyperbolic times at a finite horizon.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::{MapSystem, Metric, Orbit, PhasePoint};
use crate::error::{Error, Result};
use crate::numeric::dist_to_nearest_int;

/// Tolerance on the contraction ratio used for the `passed` flag.
pub const CONTRACTION_TOLERANCE: f64 = 1e-6;

/// Hyperbolic times detected along one orbit.
#[derive(Debug, Clone)]
pub struct HyperbolicTimeRecord {
    sigma: f64,
    steps: usize,
    times: Vec<usize>,
    truncated_at: Option<usize>,
}

impl HyperbolicTimeRecord {
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Orbit length the detection covered (possibly shortened by truncation).
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Sorted list of detected hyperbolic times, each in `[1, steps]`.
    pub fn times(&self) -> &[usize] {
        &self.times
    }

    /// Step index of the first non-finite inverse-derivative norm, if any.
    pub fn truncated_at(&self) -> Option<usize> {
        self.truncated_at
    }

    pub fn is_hyperbolic(&self, n: usize) -> bool {
        self.times.binary_search(&n).is_ok()
    }

    /// Empirical frequency `#{hyperbolic times <= n} / n`.
    pub fn frequency(&self, n: usize) -> Result<f64> {
        if n == 0 || n > self.steps {
            return Err(Error::InvalidParameter(format!(
                "frequency horizon must lie in [1, {}], got {n}",
                self.steps
            )));
        }
        let count = self.times.partition_point(|&t| t <= n);
        Ok(count as f64 / n as f64)
    }

    /// CSV export: one `n_hyperbolic` row per detected time, then a summary
    /// comment line with the parameters and the frequency at the horizon.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "n_hyperbolic")?;
        for t in &self.times {
            writeln!(w, "{t}")?;
        }
        let freq = self.frequency(self.steps.max(1)).unwrap_or(0.0);
        writeln!(
            w,
            "# sigma={},horizon={},frequency={}",
            self.sigma, self.steps, freq
        )?;
        Ok(())
    }
}

/// Detect all hyperbolic times of an orbit by the Pliss product criterion.
///
/// A non-finite inverse-derivative norm (critical hit, or a map without
/// derivatives) truncates the record at that step: no later time can satisfy
/// the criterion, since its windows would contain the infinite factor.
pub fn detect_pliss(orbit: &Orbit, sigma: f64) -> Result<HyperbolicTimeRecord> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma must lie in (0, 1), got {sigma}"
        )));
    }
    let log_sigma = sigma.ln();
    let mut times = Vec::new();
    let mut truncated_at = None;
    let mut prefix = 0.0f64;
    let mut running_min = 0.0f64;
    let mut steps = orbit.inv_norms().len();
    for (j, &norm) in orbit.inv_norms().iter().enumerate() {
        if !norm.is_finite() {
            truncated_at = Some(j);
            steps = j;
            break;
        }
        prefix += norm.ln() - log_sigma;
        if prefix <= running_min {
            times.push(j + 1);
        }
        running_min = running_min.min(prefix);
    }
    Ok(HyperbolicTimeRecord {
        sigma,
        steps,
        times,
        truncated_at,
    })
}

/// Result of sampling the metric contraction inequality at one time.
#[derive(Debug, Clone)]
pub struct ContractionReport {
    pub sigma: f64,
    pub delta: f64,
    pub time: usize,
    /// Pairs actually evaluated.
    pub pairs: usize,
    /// Pairs skipped (degenerate endpoints or escaping orbits).
    pub skipped: usize,
    /// Max over pairs and steps `i < n` of `d(f^i y, f^i z) / (sigma^{n-i}
    /// d(f^n y, f^n z))`; at most 1 when the contraction statement holds.
    pub worst_ratio: f64,
    pub passed: bool,
}

/// Sample pairs from the pre-ball of `x` at time `n` and check
/// `d(f^i y, f^i z) <= sigma^{n-i} d(f^n y, f^n z)` for all `i < n`.
///
/// Circle maps propagate the angular difference directly (the maps are
/// affine on branches, so `f^i y - f^i z = d^i (y - z)` modulo 1), which
/// keeps the ratio exact for degree 2. Interval maps sample the exact
/// pre-ball interval and iterate both points; the skew product samples an
/// axis-aligned rectangle whose angular side is the exact base pullback
/// `delta / d^n` and whose fiber side is the backward pullback of the
/// fiber ball along the centre itinerary.
pub fn verify_metric_contraction(
    map: &MapSystem,
    x: &PhasePoint,
    n: usize,
    sigma: f64,
    delta: f64,
    samples: usize,
    seed: u64,
) -> Result<ContractionReport> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma must lie in (0, 1), got {sigma}"
        )));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter("delta must be positive".into()));
    }
    if n == 0 || samples == 0 {
        return Err(Error::InvalidParameter(
            "need n >= 1 and at least one sample pair".into(),
        ));
    }
    let mut sigma_pow = vec![1.0f64; n + 1];
    for t in 1..=n {
        sigma_pow[t] = sigma_pow[t - 1] * sigma;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut pairs = 0usize;
    let mut skipped = 0usize;

    match map {
        MapSystem::CircleTimesD { d } => {
            x.as_angle()
                .ok_or_else(|| Error::VariantMismatch("circle map needs an angle".into()))?;
            let mut radius = delta;
            for _ in 0..n {
                radius /= f64::from(*d);
            }
            for _ in 0..samples {
                let u = radius * (2.0 * rng.gen::<f64>() - 1.0);
                let v = radius * (2.0 * rng.gen::<f64>() - 1.0);
                let w = u - v;
                if w == 0.0 {
                    skipped += 1;
                    continue;
                }
                let mut t = w;
                let mut dists = Vec::with_capacity(n + 1);
                for _ in 0..=n {
                    dists.push(dist_to_nearest_int(t));
                    t *= f64::from(*d);
                }
                let dn = dists[n];
                if dn == 0.0 {
                    skipped += 1;
                    continue;
                }
                pairs += 1;
                for (i, &di) in dists.iter().enumerate().take(n) {
                    worst = worst.max(di / (sigma_pow[n - i] * dn));
                }
            }
        }
        MapSystem::Quadratic { .. } => {
            let ball = preball(map, x, n, delta)?;
            let (lo, hi) = ball.region.endpoints().ok_or_else(|| {
                Error::Construction("pre-ball did not produce an interval".into())
            })?;
            for _ in 0..samples {
                let y = lo + (hi - lo) * rng.gen::<f64>();
                let z = lo + (hi - lo) * rng.gen::<f64>();
                let (oy, oz) = match (
                    map.orbit(&PhasePoint::interval(y), n),
                    map.orbit(&PhasePoint::interval(z), n),
                ) {
                    (Ok(a), Ok(b)) => (a, b),
                    _ => {
                        skipped += 1;
                        continue;
                    }
                };
                let dn = (oy.point(n).as_coord().unwrap() - oz.point(n).as_coord().unwrap()).abs();
                if dn == 0.0 {
                    skipped += 1;
                    continue;
                }
                pairs += 1;
                for i in 0..n {
                    let di = (oy.point(i).as_coord().unwrap()
                        - oz.point(i).as_coord().unwrap())
                    .abs();
                    worst = worst.max(di / (sigma_pow[n - i] * dn));
                }
            }
        }
        MapSystem::Viana(v) => {
            let (theta0, _) = x
                .as_cylinder()
                .ok_or_else(|| Error::VariantMismatch("skew product needs a cylinder point".into()))?;
            let orbit = map.orbit(x, n)?;
            // The base is affine of degree d, so the angular extent of the
            // pre-ball is the exact pullback delta / d^n.
            let theta_radius = delta / f64::from(v.degree()).powi(n as i32);
            // Fiber side: pull `[X_n - delta, X_n + delta]` back through the
            // driven quadratics `x -> a(theta_k) - x^2` along the centre's
            // branch signs, intersecting with the delta-ball at every step.
            // Staying on one branch keeps the forward images fold-free, so
            // the time-n separation in the denominator cannot collapse.
            let beta = v.beta();
            let xn = orbit.point(n).as_cylinder().unwrap().1;
            let (mut lo, mut hi) = ((xn - delta).max(-beta), (xn + delta).min(beta));
            for k in (0..n).rev() {
                let (tk, xk) = orbit.point(k).as_cylinder().unwrap();
                let a = v.drive(tk);
                let lo_sq = (a - hi).max(0.0);
                let hi_sq = a - lo;
                if hi_sq < lo_sq {
                    return Err(Error::Construction(
                        "fiber pre-ball pullback left the branch image".into(),
                    ));
                }
                let (mut l, mut h) = if xk >= 0.0 {
                    (lo_sq.sqrt(), hi_sq.sqrt())
                } else {
                    (-hi_sq.sqrt(), -lo_sq.sqrt())
                };
                l = l.max(xk - delta).max(-beta);
                h = h.min(xk + delta).min(beta);
                if !(l <= h) {
                    return Err(Error::Construction(
                        "fiber pre-ball collapsed during pullback".into(),
                    ));
                }
                lo = l;
                hi = h;
            }
            let metric = Metric::CylinderMax;
            for _ in 0..samples {
                let mut draw = || {
                    PhasePoint::cylinder(
                        theta0 + theta_radius * (2.0 * rng.gen::<f64>() - 1.0),
                        lo + (hi - lo) * rng.gen::<f64>(),
                    )
                };
                let (y, z) = (draw(), draw());
                let (oy, oz) = match (map.orbit(&y, n), map.orbit(&z, n)) {
                    (Ok(a), Ok(b)) => (a, b),
                    _ => {
                        skipped += 1;
                        continue;
                    }
                };
                let dn = metric.distance(oy.point(n), oz.point(n))?;
                if dn == 0.0 {
                    skipped += 1;
                    continue;
                }
                pairs += 1;
                for i in 0..n {
                    let di = metric.distance(oy.point(i), oz.point(i))?;
                    worst = worst.max(di / (sigma_pow[n - i] * dn));
                }
            }
        }
        MapSystem::FullShift { .. } => {
            return Err(Error::Unsupported(
                "metric contraction check applies to differentiable maps".into(),
            ))
        }
    }

    let worst_ratio = if pairs == 0 { f64::NAN } else { worst };
    Ok(ContractionReport {
        sigma,
        delta,
        time: n,
        pairs,
        skipped,
        worst_ratio,
        passed: pairs > 0 && worst_ratio <= 1.0 + CONTRACTION_TOLERANCE,
    })
}

/// Default verification radius per map family.
///
/// Calibrated by sweeping `delta` over `{0.2, 0.1, 0.05, 0.02, 0.01}` and
/// keeping the largest value for which every Pliss-detected time on a fixed
/// corpus of test orbits passed [`verify_metric_contraction`] with
/// `worst_ratio <= 1 + 1e-6`. Circle covers and interval quadratics verify
/// at the detection rate `sigma` itself; the skew product verifies at the
/// relaxed rate `sqrt(sigma)` (the usual slack when converting the product
/// criterion into pairwise metric contraction; at equal rates the ratio
/// overshoots by a few percent at every `delta` in the menu). Shifts have
/// no derivative-based verifier and get no default.
pub fn delta_cal(map: &MapSystem) -> Option<f64> {
    match map {
        MapSystem::CircleTimesD { .. } => Some(0.2),
        MapSystem::Quadratic { .. } => Some(0.01),
        MapSystem::Viana(_) => Some(0.02),
        MapSystem::FullShift { .. } => None,
    }
}

/// A subset of a one- or two-dimensional phase space used for balls.
#[derive(Debug, Clone, PartialEq)]
pub enum BallRegion {
    /// Arc on the circle; radius capped at 1/2 (the whole circle).
    Arc { center: f64, radius: f64 },
    /// Interval on the line.
    Segment { lo: f64, hi: f64 },
    /// Axis-aligned rectangle on the cylinder (max-metric ball bound).
    Rect {
        theta_center: f64,
        theta_radius: f64,
        x_center: f64,
        x_radius: f64,
    },
}

impl BallRegion {
    /// Endpoints of a one-dimensional region; arcs are reported unreduced
    /// as `(center - radius, center + radius)`.
    pub fn endpoints(&self) -> Option<(f64, f64)> {
        match self {
            BallRegion::Arc { center, radius } => Some((center - radius, center + radius)),
            BallRegion::Segment { lo, hi } => Some((*lo, *hi)),
            BallRegion::Rect { .. } => None,
        }
    }

    pub fn length(&self) -> f64 {
        match self {
            BallRegion::Arc { radius, .. } => (2.0 * radius).min(1.0),
            BallRegion::Segment { lo, hi } => hi - lo,
            BallRegion::Rect {
                theta_radius,
                x_radius,
                ..
            } => (2.0 * theta_radius).min(1.0) * (2.0 * x_radius),
        }
    }

    pub fn contains(&self, p: &PhasePoint) -> bool {
        match (self, p) {
            (BallRegion::Arc { center, radius }, PhasePoint::CircleAngle(t)) => {
                dist_to_nearest_int(t - center) <= *radius
            }
            (BallRegion::Segment { lo, hi }, PhasePoint::IntervalCoord(x)) => {
                *lo <= *x && *x <= *hi
            }
            (
                BallRegion::Rect {
                    theta_center,
                    theta_radius,
                    x_center,
                    x_radius,
                },
                PhasePoint::CylinderPoint { theta, x },
            ) => {
                dist_to_nearest_int(theta - theta_center) <= *theta_radius
                    && (x - x_center).abs() <= *x_radius
            }
            _ => false,
        }
    }
}

/// Pre-ball `V_n(x)`: the neighbourhood sent onto `B_delta(f^n x)` by `f^n`.
#[derive(Debug, Clone)]
pub struct PreBall {
    pub center: PhasePoint,
    pub time: usize,
    pub delta: f64,
    pub region: BallRegion,
    /// Branch of each forward iterate: digit `floor(d*theta)` for circle
    /// maps, 0 (negative) / 1 (positive) for the quadratic family.
    pub itinerary: Vec<u8>,
}

/// Connected component of `f^{-n}(B_delta(f^n x))` containing `x`, computed
/// by pulling the ball endpoints back along the branch itinerary of `x`.
/// One-dimensional maps only; `n = 0` returns the ball itself.
pub fn preball(map: &MapSystem, x: &PhasePoint, n: usize, delta: f64) -> Result<PreBall> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter("delta must be positive".into()));
    }
    match map {
        MapSystem::CircleTimesD { d } => {
            let theta = x
                .as_angle()
                .ok_or_else(|| Error::VariantMismatch("circle map needs an angle".into()))?;
            if n == 0 {
                return Ok(PreBall {
                    center: x.clone(),
                    time: 0,
                    delta,
                    region: BallRegion::Arc {
                        center: theta,
                        radius: delta.min(0.5),
                    },
                    itinerary: Vec::new(),
                });
            }
            if delta >= 0.5 {
                return Err(Error::InvalidParameter(
                    "circle pre-balls with n >= 1 need delta < 1/2".into(),
                ));
            }
            let orbit = map.orbit(x, n)?;
            let itinerary = (0..n)
                .map(|i| (f64::from(*d) * orbit.point(i).as_angle().unwrap()) as u8)
                .collect();
            // Each pullback step is affine with slope 1/d on the branch of
            // the orbit point, so the radius contracts by d per level and
            // the centre stays on the orbit.
            let mut radius = delta;
            for _ in 0..n {
                radius /= f64::from(*d);
            }
            Ok(PreBall {
                center: x.clone(),
                time: n,
                delta,
                region: BallRegion::Arc {
                    center: theta,
                    radius,
                },
                itinerary,
            })
        }
        MapSystem::Quadratic { a0 } => {
            let x0 = x
                .as_coord()
                .ok_or_else(|| Error::VariantMismatch("interval map needs a coordinate".into()))?;
            let (dom_lo, dom_hi) = map.quadratic_domain().unwrap();
            if n == 0 {
                return Ok(PreBall {
                    center: x.clone(),
                    time: 0,
                    delta,
                    region: BallRegion::Segment {
                        lo: (x0 - delta).max(dom_lo),
                        hi: (x0 + delta).min(dom_hi),
                    },
                    itinerary: Vec::new(),
                });
            }
            let orbit = map.orbit(x, n)?;
            let xn = orbit.point(n).as_coord().unwrap();
            let mut u = (xn - delta).max(dom_lo);
            let mut v = (xn + delta).min(dom_hi);
            let mut itinerary = vec![0u8; n];
            for i in (0..n).rev() {
                let xi = orbit.point(i).as_coord().unwrap();
                // The ball reaching the critical value a0 means the pullback
                // folds across the critical point: not a homeomorphism.
                if v >= *a0 || xi == 0.0 {
                    return Err(Error::NotHomeomorphic { step: i });
                }
                let (s, t) = ((a0 - u).sqrt(), (a0 - v).sqrt());
                if xi > 0.0 {
                    itinerary[i] = 1;
                    u = t;
                    v = s;
                } else {
                    u = -s;
                    v = -t;
                }
                u = u.max(dom_lo).min(xi);
                v = v.min(dom_hi).max(xi);
            }
            Ok(PreBall {
                center: x.clone(),
                time: n,
                delta,
                region: BallRegion::Segment { lo: u, hi: v },
                itinerary,
            })
        }
        _ => Err(Error::Unsupported(
            "pre-balls are computed for one-dimensional maps".into(),
        )),
    }
}

/// Dynamical ball `B_delta(x, n) = {y : d(f^i x, f^i y) < delta, i <= n}`
/// (connected component containing `x`), computed by intersecting pullbacks
/// of the delta-balls along the orbit. One-dimensional maps only; never
/// errors on folds: components through the critical point stay intervals.
pub fn dynamical_ball_1d(
    map: &MapSystem,
    x: &PhasePoint,
    n: usize,
    delta: f64,
) -> Result<BallRegion> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter("delta must be positive".into()));
    }
    match map {
        MapSystem::CircleTimesD { d } => {
            let theta = x
                .as_angle()
                .ok_or_else(|| Error::VariantMismatch("circle map needs an angle".into()))?;
            if delta >= 0.5 {
                // Every constraint is vacuous: the circle has diameter 1/2.
                return Ok(BallRegion::Arc {
                    center: theta,
                    radius: 0.5,
                });
            }
            // The pullback of the ball around f^j(x) is the concentric arc
            // of radius delta/d^j; the intersection is the smallest.
            let mut radius = delta;
            for _ in 0..n {
                radius /= f64::from(*d);
            }
            Ok(BallRegion::Arc {
                center: theta,
                radius,
            })
        }
        MapSystem::Quadratic { a0 } => {
            let x0 = x
                .as_coord()
                .ok_or_else(|| Error::VariantMismatch("interval map needs a coordinate".into()))?;
            let (dom_lo, dom_hi) = map.quadratic_domain().unwrap();
            let orbit = if n >= 1 { Some(map.orbit(x, n)?) } else { None };
            let mut lo = (x0 - delta).max(dom_lo);
            let mut hi = (x0 + delta).min(dom_hi);
            for j in 1..=n {
                let orbit = orbit.as_ref().unwrap();
                let xj = orbit.point(j).as_coord().unwrap();
                let mut u = (xj - delta).max(dom_lo);
                let mut v = (xj + delta).min(dom_hi);
                for i in (0..j).rev() {
                    let xi = orbit.point(i).as_coord().unwrap();
                    let s = (a0 - u).max(0.0).sqrt();
                    if v >= *a0 || xi == 0.0 {
                        // Component through the fold: a single interval.
                        u = -s;
                        v = s;
                    } else {
                        let t = (a0 - v).sqrt();
                        if xi > 0.0 {
                            u = t;
                            v = s;
                        } else {
                            u = -s;
                            v = -t;
                        }
                    }
                    u = u.max(dom_lo).min(xi);
                    v = v.min(dom_hi).max(xi);
                }
                lo = lo.max(u);
                hi = hi.min(v);
            }
            Ok(BallRegion::Segment { lo, hi })
        }
        _ => Err(Error::Unsupported(
            "dynamical balls are computed for one-dimensional maps".into(),
        )),
    }
}

/// Membership label for the empirically-expanding set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HLabel {
    /// Frequency of hyperbolic times at the horizon reached the threshold.
    H,
    /// It did not.
    Hc,
}

impl HLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            HLabel::H => "H",
            HLabel::Hc => "Hc",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClassifiedSeed {
    pub index: usize,
    pub point: PhasePoint,
    pub frequency: f64,
    pub label: HLabel,
}

/// Ensemble classification into empirically-H and complement.
#[derive(Debug, Clone)]
pub struct HClassification {
    pub sigma: f64,
    pub horizon: usize,
    pub threshold: f64,
    pub entries: Vec<ClassifiedSeed>,
    /// Seeds dropped for orbit escape or an exact critical hit.
    pub excluded: usize,
}

impl HClassification {
    /// Fraction of attempted seeds labelled H (excluded seeds count
    /// against, not towards).
    pub fn fraction_h(&self) -> f64 {
        let attempted = self.entries.len() + self.excluded;
        if attempted == 0 {
            return 0.0;
        }
        let h = self
            .entries
            .iter()
            .filter(|e| e.label == HLabel::H)
            .count();
        h as f64 / attempted as f64
    }

    pub fn points_with_label(&self, label: HLabel) -> Vec<PhasePoint> {
        self.entries
            .iter()
            .filter(|e| e.label == label)
            .map(|e| e.point.clone())
            .collect()
    }

    /// CSV export: `seed,freq,label`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "seed,freq,label")?;
        for e in &self.entries {
            writeln!(w, "{},{},{}", e.index, e.frequency, e.label.as_str())?;
        }
        Ok(())
    }
}

/// Classify each seed by its empirical hyperbolic-time frequency at the
/// horizon: label H when `frequency >= threshold`. Seeds whose orbits
/// escape or hit the critical set exactly are excluded and counted.
pub fn classify(
    map: &MapSystem,
    seeds: &[PhasePoint],
    sigma: f64,
    horizon: usize,
    threshold: f64,
) -> Result<HClassification> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold must lie in (0, 1), got {threshold}"
        )));
    }
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be >= 1".into()));
    }
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma must lie in (0, 1), got {sigma}"
        )));
    }
    let labelled: Vec<Option<ClassifiedSeed>> = seeds
        .par_iter()
        .enumerate()
        .map(|(index, p)| {
            let orbit = map.orbit(p, horizon).ok()?;
            let record = detect_pliss(&orbit, sigma).ok()?;
            if record.truncated_at().is_some() {
                return None;
            }
            let frequency = record.frequency(horizon).ok()?;
            let label = if frequency >= threshold {
                HLabel::H
            } else {
                HLabel::Hc
            };
            Some(ClassifiedSeed {
                index,
                point: p.clone(),
                frequency,
                label,
            })
        })
        .collect();
    let excluded = labelled.iter().filter(|e| e.is_none()).count();
    Ok(HClassification {
        sigma,
        horizon,
        threshold,
        entries: labelled.into_iter().flatten().collect(),
        excluded,
    })
}

/// Average of `-log dist_delta(f^i p, C)` over the orbit: the
/// slow-approximation statistic. Maps with a critical set only. An exact
/// critical hit makes the average `+inf`.
pub fn slow_approx_average(orbit: &Orbit, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter("delta must be positive".into()));
    }
    match orbit.map() {
        MapSystem::Quadratic { .. } | MapSystem::Viana(_) => {}
        _ => {
            return Err(Error::Unsupported(
                "slow-approximation average needs a map with a critical set".into(),
            ))
        }
    }
    let n = orbit.crit_dists().len();
    let mut sum = 0.0f64;
    for &d in orbit.crit_dists() {
        if d < delta {
            sum += -d.ln();
        }
    }
    Ok(sum / n as f64)
}

/// Deterministic ensemble of uniform random seed points.
pub fn sample_points(map: &MapSystem, count: usize, master_seed: u64) -> Result<Vec<PhasePoint>> {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    (0..count).map(|_| map.random_point(&mut rng)).collect()
}
