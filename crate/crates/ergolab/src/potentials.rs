//! Potentials, Birkhoff sums, and the bump-pair construction.
//!
//! The centre piece is the bump-pair potential attached to a map `f` and an
//! open region `B` with preimage `V = f^{-1}(B)` disjoint from both `B` and
//! the critical set:
//!
//! ```text
//! phi(x) =  phi_b(x)       if x in B
//!        = -phi_b(f(x))    if x in V
//!        =  0              otherwise,
//! ```
//!
//! with `phi_b >= 0` a bump vanishing on the boundary of `B`. Every visit to
//! `B` (after step 0) is preceded by a visit to `V`, so consecutive terms
//! telescope and the Birkhoff sums `S_n phi` stay within `[-sup phi_b,
//! sup phi_b]` uniformly in `n`, a property `verify_bounded` checks over
//! random ensembles. The module also computes ball suprema
//! `R_{n,delta} phi(x) = sup_{y in B_delta(x,n)} S_n phi(y)` by exact
//! enumeration on shifts and deterministic grid sampling elsewhere.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::dynamics::{MapSystem, Metric, Orbit, PhasePoint};
use crate::error::{Error, Result};
use crate::hyperbolic::{dynamical_ball_1d, sample_points};

/// Shape of the bump profile on a normalized coordinate `s in [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BumpShape {
    /// `sin^2(pi s)`: smooth, vanishing to second order at the edges.
    SineSquared,
    /// `1 - |2s - 1|`: piecewise linear, a Lipschitz (non-smooth) test case.
    Tent,
}

/// Bump descriptor: nonnegative profile scaled to a maximum of `height`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpFn {
    pub shape: BumpShape,
    pub height: f64,
}

impl BumpFn {
    fn profile(&self, s: f64) -> f64 {
        if !(0.0..=1.0).contains(&s) {
            return 0.0;
        }
        match self.shape {
            BumpShape::SineSquared => {
                let v = (std::f64::consts::PI * s).sin();
                v * v
            }
            BumpShape::Tent => 1.0 - (2.0 * s - 1.0).abs(),
        }
    }
}

/// Support region of a bump: an interval for one-dimensional maps, a
/// product of an angular interval and an x-interval on the cylinder.
#[derive(Debug, Clone, PartialEq)]
pub enum BumpRegion {
    Interval { lo: f64, hi: f64 },
    Band {
        theta_lo: f64,
        theta_hi: f64,
        x_lo: f64,
        x_hi: f64,
    },
}

impl BumpRegion {
    fn contains(&self, p: &PhasePoint) -> bool {
        match (self, p) {
            (BumpRegion::Interval { lo, hi }, PhasePoint::CircleAngle(t)) => {
                *lo <= *t && *t <= *hi
            }
            (BumpRegion::Interval { lo, hi }, PhasePoint::IntervalCoord(x)) => {
                *lo <= *x && *x <= *hi
            }
            (
                BumpRegion::Band {
                    theta_lo,
                    theta_hi,
                    x_lo,
                    x_hi,
                },
                PhasePoint::CylinderPoint { theta, x },
            ) => {
                if !(*x_lo <= *x && *x <= *x_hi) {
                    return false;
                }
                let width = theta_hi - theta_lo;
                width >= 1.0 || crate::numeric::frac(theta - theta_lo) <= width
            }
            _ => false,
        }
    }

    /// Bump value at a point of the region (0 outside).
    fn bump_value(&self, bump: &BumpFn, p: &PhasePoint) -> f64 {
        if !self.contains(p) {
            return 0.0;
        }
        match (self, p) {
            (BumpRegion::Interval { lo, hi }, PhasePoint::CircleAngle(v))
            | (BumpRegion::Interval { lo, hi }, PhasePoint::IntervalCoord(v)) => {
                bump.height * bump.profile((v - lo) / (hi - lo))
            }
            (
                BumpRegion::Band {
                    theta_lo,
                    theta_hi,
                    x_lo,
                    x_hi,
                },
                PhasePoint::CylinderPoint { theta, x },
            ) => {
                let fx = bump.profile((x - x_lo) / (x_hi - x_lo));
                let width = theta_hi - theta_lo;
                let ft = if width >= 1.0 {
                    1.0
                } else {
                    bump.profile(crate::numeric::frac(theta - theta_lo) / width)
                };
                bump.height * fx * ft
            }
            _ => 0.0,
        }
    }

    /// 10^3 points of the topological boundary, for validation.
    fn boundary_samples(&self) -> Vec<PhasePoint> {
        match self {
            BumpRegion::Interval { lo, hi } => {
                let mut out = Vec::with_capacity(1000);
                for k in 0..500 {
                    let _ = k;
                    out.push(PhasePoint::IntervalCoord(*lo));
                    out.push(PhasePoint::IntervalCoord(*hi));
                }
                out
            }
            BumpRegion::Band {
                theta_lo,
                theta_hi,
                x_lo,
                x_hi,
            } => {
                let mut out = Vec::with_capacity(1000);
                let width = (theta_hi - theta_lo).min(1.0);
                for k in 0..500 {
                    let theta = theta_lo + width * k as f64 / 500.0;
                    out.push(PhasePoint::cylinder(theta, *x_lo));
                    out.push(PhasePoint::cylinder(theta, *x_hi));
                }
                out
            }
        }
    }
}

/// Cached description of the preimage `V = f^{-1}(B)`.
#[derive(Debug, Clone, PartialEq)]
pub enum PreimageDesc {
    /// Circle maps: `d` arcs.
    Arcs(Vec<(f64, f64)>),
    /// Interval maps: up to two monotone-branch segments.
    Segments(Vec<(f64, f64)>),
    /// Skew product with a full angular band: `|x|` ranges over
    /// `[sqrt(a(theta) - x_hi), sqrt(a(theta) - x_lo)]`; the stored bounds
    /// are the extremes over theta.
    RadialBand { inner: f64, outer: f64 },
}

/// Validated bump-pair data; see the module docs for the case split.
#[derive(Debug, Clone)]
pub struct BumpPairData {
    map: MapSystem,
    region: BumpRegion,
    bump: BumpFn,
    preimage: PreimageDesc,
}

impl BumpPairData {
    pub fn region(&self) -> &BumpRegion {
        &self.region
    }

    pub fn bump(&self) -> &BumpFn {
        &self.bump
    }

    pub fn preimage(&self) -> &PreimageDesc {
        &self.preimage
    }

    pub fn map(&self) -> &MapSystem {
        &self.map
    }

    /// Case-split value given the precomputed image `f(p)`.
    fn value_with_image(&self, p: &PhasePoint, image: &PhasePoint) -> f64 {
        if self.region.contains(p) {
            self.region.bump_value(&self.bump, p)
        } else if self.region.contains(image) {
            -self.region.bump_value(&self.bump, image)
        } else {
            0.0
        }
    }

    fn value(&self, p: &PhasePoint) -> Result<f64> {
        if self.region.contains(p) {
            return Ok(self.region.bump_value(&self.bump, p));
        }
        let image = self.map.step(p)?;
        Ok(if self.region.contains(&image) {
            -self.region.bump_value(&self.bump, &image)
        } else {
            0.0
        })
    }
}

/// Analytic test families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Analytic {
    /// `t * cos(2 pi theta)` on the circle or cylinder.
    CosTheta { t: f64 },
    /// `t * x` on an interval or cylinder.
    LinearX { t: f64 },
}

/// Potential on words of a full shift depending on a fixed-length prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct WordPrefixTable {
    alphabet: u32,
    prefix_len: usize,
    values: Vec<f64>,
}

impl WordPrefixTable {
    pub fn new(alphabet: u32, prefix_len: usize, values: Vec<f64>) -> Result<Self> {
        if !(2..=255).contains(&alphabet) {
            return Err(Error::InvalidParameter(format!(
                "alphabet size must be in [2, 255], got {alphabet}"
            )));
        }
        if prefix_len == 0 || prefix_len > 12 {
            return Err(Error::InvalidParameter(format!(
                "prefix length must be in [1, 12], got {prefix_len}"
            )));
        }
        let expect = (alphabet as usize).pow(prefix_len as u32);
        if values.len() != expect {
            return Err(Error::InvalidParameter(format!(
                "prefix table needs {expect} entries, got {}",
                values.len()
            )));
        }
        Ok(WordPrefixTable {
            alphabet,
            prefix_len,
            values,
        })
    }

    pub fn alphabet(&self) -> u32 {
        self.alphabet
    }

    pub fn prefix_len(&self) -> usize {
        self.prefix_len
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value from the leading `prefix_len` symbols of a slice.
    pub fn value_of_prefix(&self, symbols: &[u8]) -> Result<f64> {
        if symbols.len() < self.prefix_len {
            return Err(Error::WordExhausted {
                needed: self.prefix_len,
                have: symbols.len(),
            });
        }
        let mut idx = 0usize;
        for &s in &symbols[..self.prefix_len] {
            idx = idx * self.alphabet as usize + s as usize;
        }
        Ok(self.values[idx])
    }
}

/// A real-valued function on phase space.
#[derive(Debug, Clone)]
pub enum Potential {
    Constant(f64),
    Analytic(Analytic),
    BumpPair(Box<BumpPairData>),
    WordPrefix(WordPrefixTable),
    /// `base + c`; supports the constant-shift identities exactly.
    Offset { base: Box<Potential>, c: f64 },
}

impl Potential {
    pub fn offset(self, c: f64) -> Potential {
        Potential::Offset {
            base: Box::new(self),
            c,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Potential::Constant(c) => format!("constant_{c}"),
            Potential::Analytic(Analytic::CosTheta { t }) => format!("cos_theta_t={t}"),
            Potential::Analytic(Analytic::LinearX { t }) => format!("linear_x_t={t}"),
            Potential::BumpPair(data) => format!(
                "bump_pair_h={}_{}",
                data.bump.height,
                match data.region {
                    BumpRegion::Interval { lo, hi } => format!("B=({lo},{hi})"),
                    BumpRegion::Band { x_lo, x_hi, .. } => format!("B=band({x_lo},{x_hi})"),
                }
            ),
            Potential::WordPrefix(t) => {
                format!("word_prefix_k={}_len={}", t.alphabet, t.prefix_len)
            }
            Potential::Offset { base, c } => format!("{}+{}", base.describe(), c),
        }
    }

    /// Pointwise evaluation.
    pub fn evaluate(&self, p: &PhasePoint) -> Result<f64> {
        match self {
            Potential::Constant(c) => Ok(*c),
            Potential::Analytic(Analytic::CosTheta { t }) => {
                let theta = match p {
                    PhasePoint::CircleAngle(v) => *v,
                    PhasePoint::CylinderPoint { theta, .. } => *theta,
                    _ => {
                        return Err(Error::VariantMismatch(
                            "cos-theta potential needs an angular coordinate".into(),
                        ))
                    }
                };
                Ok(t * (2.0 * std::f64::consts::PI * theta).cos())
            }
            Potential::Analytic(Analytic::LinearX { t }) => {
                let x = match p {
                    PhasePoint::IntervalCoord(v) => *v,
                    PhasePoint::CylinderPoint { x, .. } => *x,
                    _ => {
                        return Err(Error::VariantMismatch(
                            "linear potential needs an x coordinate".into(),
                        ))
                    }
                };
                Ok(t * x)
            }
            Potential::BumpPair(data) => data.value(p),
            Potential::WordPrefix(table) => {
                let w = p.as_word().ok_or_else(|| {
                    Error::VariantMismatch("prefix potential needs a symbol word".into())
                })?;
                if w.alphabet() != table.alphabet {
                    return Err(Error::VariantMismatch(format!(
                        "word over {} symbols against a table over {}",
                        w.alphabet(),
                        table.alphabet
                    )));
                }
                table.value_of_prefix(w.symbols())
            }
            Potential::Offset { base, c } => Ok(base.evaluate(p)? + c),
        }
    }

    /// Evaluation that reuses a precomputed image point (bump pairs apply
    /// the map once per call otherwise).
    fn evaluate_with_image(&self, p: &PhasePoint, image: Option<&PhasePoint>) -> Result<f64> {
        match (self, image) {
            (Potential::BumpPair(data), Some(next)) => Ok(data.value_with_image(p, next)),
            (Potential::Offset { base, c }, _) => {
                Ok(base.evaluate_with_image(p, image)? + c)
            }
            _ => self.evaluate(p),
        }
    }

    /// Upper bound on `|phi|`, used for search brackets.
    pub fn sup_abs_bound(&self) -> f64 {
        match self {
            Potential::Constant(c) => c.abs(),
            Potential::Analytic(Analytic::CosTheta { t }) => t.abs(),
            Potential::Analytic(Analytic::LinearX { t }) => 4.0 * t.abs(),
            Potential::BumpPair(data) => data.bump.height,
            Potential::WordPrefix(table) => table
                .values
                .iter()
                .fold(0.0f64, |acc, v| acc.max(v.abs())),
            Potential::Offset { base, c } => base.sup_abs_bound() + c.abs(),
        }
    }

    /// Height of the bump for bump-pair potentials.
    pub fn bump_sup(&self) -> Option<f64> {
        match self {
            Potential::BumpPair(data) => Some(data.bump.height),
            Potential::Offset { base, .. } => base.bump_sup(),
            _ => None,
        }
    }

    pub fn as_bump_pair(&self) -> Option<&BumpPairData> {
        match self {
            Potential::BumpPair(data) => Some(data),
            _ => None,
        }
    }
}

/// Build and validate a bump-pair potential: `B` strictly interior with a
/// boundary-vanishing bump, `V = f^{-1}(B)` disjoint from `B` and from the
/// critical set.
pub fn make_bump_pair(map: &MapSystem, region: BumpRegion, bump: BumpFn) -> Result<Potential> {
    if !(bump.height > 0.0 && bump.height.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "bump height must be positive and finite, got {}",
            bump.height
        )));
    }
    let preimage = match (map, &region) {
        (MapSystem::CircleTimesD { d }, BumpRegion::Interval { lo, hi }) => {
            if !(0.0 <= *lo && lo < hi && *hi <= 1.0 && hi - lo < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "circle bump region must be a proper arc in [0, 1], got ({lo}, {hi})"
                )));
            }
            let arcs: Vec<(f64, f64)> = (0..*d)
                .map(|j| {
                    (
                        (lo + f64::from(j)) / f64::from(*d),
                        (hi + f64::from(j)) / f64::from(*d),
                    )
                })
                .collect();
            for &(p, q) in &arcs {
                if p < *hi && *lo < q {
                    return Err(Error::RegionsCollide(format!(
                        "preimage arc ({p}, {q}) meets B = ({lo}, {hi})"
                    )));
                }
            }
            PreimageDesc::Arcs(arcs)
        }
        (MapSystem::Quadratic { a0 }, BumpRegion::Interval { lo, hi }) => {
            let (dom_lo, dom_hi) = map.quadratic_domain().unwrap();
            if !(dom_lo < *lo && lo < hi && *hi < dom_hi) {
                return Err(Error::InvalidParameter(format!(
                    "bump region ({lo}, {hi}) must lie strictly inside ({dom_lo}, {dom_hi})"
                )));
            }
            // hi < a0 holds by interiority, so the preimage stays clear of
            // the critical point 0.
            let (inner, outer) = ((a0 - hi).sqrt(), (a0 - lo).sqrt());
            let mut segments = vec![(inner, outer)];
            let neg = ((-outer).max(dom_lo), -inner);
            if neg.0 < neg.1 {
                segments.insert(0, neg);
            }
            for &(p, q) in &segments {
                if p < *hi && *lo < q {
                    return Err(Error::RegionsCollide(format!(
                        "preimage segment ({p}, {q}) meets B = ({lo}, {hi})"
                    )));
                }
                if p <= 0.0 && 0.0 <= q {
                    return Err(Error::PreimageCritical(format!(
                        "preimage segment ({p}, {q}) touches the critical point"
                    )));
                }
            }
            PreimageDesc::Segments(segments)
        }
        (MapSystem::Viana(v), BumpRegion::Band {
            theta_lo,
            theta_hi,
            x_lo,
            x_hi,
        }) => {
            if theta_hi - theta_lo < 1.0 {
                return Err(Error::Unsupported(
                    "skew-product bump regions must be full angular bands".into(),
                ));
            }
            let beta = v.beta();
            if !(0.0 < *x_lo && x_lo < x_hi && *x_hi < beta) {
                return Err(Error::InvalidParameter(format!(
                    "band [{x_lo}, {x_hi}] must satisfy 0 < x_lo < x_hi < {beta}"
                )));
            }
            let (a_min, a_max) = v.drive_range();
            if *x_hi >= a_min {
                return Err(Error::PreimageCritical(format!(
                    "band top {x_hi} reaches the drive minimum {a_min}: preimage touches the critical circle"
                )));
            }
            let inner = (a_min - x_hi).sqrt();
            let outer = (a_max - x_lo).sqrt();
            if inner <= *x_hi {
                return Err(Error::RegionsCollide(format!(
                    "preimage band |x| >= {inner} meets B with x <= {x_hi}"
                )));
            }
            PreimageDesc::RadialBand { inner, outer }
        }
        _ => {
            return Err(Error::VariantMismatch(
                "bump region shape does not match the map's phase space".into(),
            ))
        }
    };
    // The bump must vanish on the boundary of B.
    for p in region.boundary_samples() {
        let v = region.bump_value(&bump, &p);
        if v.abs() > 1e-9 {
            return Err(Error::Construction(format!(
                "bump does not vanish on the region boundary (value {v})"
            )));
        }
    }
    Ok(Potential::BumpPair(Box::new(BumpPairData {
        map: map.clone(),
        region,
        bump,
        preimage,
    })))
}

/// Birkhoff sum `S_n phi = sum_{i<n} phi(f^i x)` along a stored orbit.
pub fn birkhoff(phi: &Potential, orbit: &Orbit, n: usize) -> Result<f64> {
    if n > orbit.points().len() {
        return Err(Error::InvalidParameter(format!(
            "Birkhoff horizon {n} exceeds the stored orbit ({} points)",
            orbit.points().len()
        )));
    }
    let mut sum = 0.0f64;
    for i in 0..n {
        let image = orbit.points().get(i + 1);
        sum += phi.evaluate_with_image(orbit.point(i), image)?;
    }
    Ok(sum)
}

/// Ball supremum estimate with its sample count.
#[derive(Debug, Clone, Copy)]
pub struct SupBallReport {
    pub value: f64,
    /// Points (or words) over which the maximum was taken.
    pub samples: usize,
}

/// Deterministic sampler description for `sup_over_ball`.
#[derive(Debug, Clone, Copy)]
pub struct SamplerSpec {
    /// Grid subdivisions per axis; doubling it refines the previous grid.
    pub resolution: usize,
    /// Reserved for stochastic samplers; the grid sampler ignores it.
    pub seed: u64,
}

/// Supremum of `S_n phi` over the dynamical ball `B_delta(x, n)`.
///
/// Shifts enumerate the ball exactly (it is the `(n+1)`-cylinder once
/// `delta` lies in `(1/2, 1)`); one-dimensional maps sample the exact ball
/// interval on an endpoint-inclusive grid (so doubling the resolution
/// refines the sample set); the skew product samples a bounding rectangle
/// and keeps the points whose orbits stay `delta`-close.
pub fn sup_over_ball(
    phi: &Potential,
    map: &MapSystem,
    x: &PhasePoint,
    n: usize,
    delta: f64,
    sampler: SamplerSpec,
) -> Result<SupBallReport> {
    if sampler.resolution == 0 {
        return Err(Error::InvalidParameter("sampler resolution must be >= 1".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter("delta must be positive".into()));
    }
    if let Potential::Offset { base, c } = phi {
        let inner = sup_over_ball(base, map, x, n, delta, sampler)?;
        return Ok(SupBallReport {
            value: inner.value + n as f64 * c,
            samples: inner.samples,
        });
    }
    if n == 0 {
        return Ok(SupBallReport {
            value: 0.0,
            samples: 1,
        });
    }
    match map {
        MapSystem::FullShift { k } => {
            let word = x.as_word().ok_or_else(|| {
                Error::VariantMismatch("shift systems need symbol words".into())
            })?;
            if word.alphabet() != *k {
                return Err(Error::VariantMismatch(format!(
                    "word over {} symbols fed to a {k}-shift",
                    word.alphabet()
                )));
            }
            if word.len() < n + 1 {
                return Err(Error::WordExhausted {
                    needed: n + 1,
                    have: word.len(),
                });
            }
            let prefix_len = match phi {
                Potential::WordPrefix(t) => t.prefix_len(),
                Potential::Constant(_) => 0,
                _ => {
                    return Err(Error::Unsupported(
                        "shift ball suprema need constant or prefix potentials".into(),
                    ))
                }
            };
            // Symbols 0..=n are pinned by the ball; the last windows read
            // up to position n + prefix_len - 2.
            let free = prefix_len.saturating_sub(2);
            let total = (*k as usize).checked_pow(free as u32).filter(|&c| c <= 1 << 22);
            let total = total.ok_or_else(|| {
                Error::InvalidParameter("prefix too long to enumerate ball extensions".into())
            })?;
            let fixed: Vec<u8> = word.symbols()[..=n].to_vec();
            let mut best = f64::NEG_INFINITY;
            let mut tail = vec![0u8; free];
            for idx in 0..total {
                let mut rem = idx;
                for slot in tail.iter_mut() {
                    *slot = (rem % *k as usize) as u8;
                    rem /= *k as usize;
                }
                let mut symbols = fixed.clone();
                symbols.extend_from_slice(&tail);
                let mut s = 0.0f64;
                for i in 0..n {
                    s += match phi {
                        Potential::WordPrefix(t) => t.value_of_prefix(&symbols[i..])?,
                        Potential::Constant(c) => *c,
                        _ => unreachable!(),
                    };
                }
                best = best.max(s);
            }
            Ok(SupBallReport {
                value: best,
                samples: total,
            })
        }
        MapSystem::CircleTimesD { .. } | MapSystem::Quadratic { .. } => {
            let ball = dynamical_ball_1d(map, x, n, delta)?;
            let (lo, hi) = ball.endpoints().ok_or_else(|| {
                Error::Construction("dynamical ball did not produce an interval".into())
            })?;
            let mk = |v: f64| match map {
                MapSystem::CircleTimesD { .. } => PhasePoint::circle(v),
                _ => PhasePoint::interval(v),
            };
            let r = sampler.resolution;
            let mut best = f64::NEG_INFINITY;
            let mut samples = 0usize;
            let consider = |p: PhasePoint, best: &mut f64, samples: &mut usize| {
                if let Ok(orbit) = map.orbit(&p, n) {
                    if let Ok(s) = birkhoff(phi, &orbit, n) {
                        *best = best.max(s);
                        *samples += 1;
                    }
                }
            };
            consider(x.clone(), &mut best, &mut samples);
            for j in 0..=r {
                let v = lo + (hi - lo) * j as f64 / r as f64;
                consider(mk(v), &mut best, &mut samples);
            }
            Ok(SupBallReport {
                value: best,
                samples,
            })
        }
        MapSystem::Viana(_) => {
            let (t0, x0) = x.as_cylinder().ok_or_else(|| {
                Error::VariantMismatch("skew products need cylinder points".into())
            })?;
            let base = map.orbit(x, n)?;
            let metric = Metric::CylinderMax;
            let r = sampler.resolution;
            let mut best = f64::NEG_INFINITY;
            let mut samples = 0usize;
            let consider = |p: PhasePoint, best: &mut f64, samples: &mut usize| -> Result<()> {
                let orbit = match map.orbit(&p, n) {
                    Ok(o) => o,
                    Err(_) => return Ok(()),
                };
                for i in 0..=n {
                    if metric.distance(orbit.point(i), base.point(i))? >= delta {
                        return Ok(());
                    }
                }
                let s = birkhoff(phi, &orbit, n)?;
                *best = best.max(s);
                *samples += 1;
                Ok(())
            };
            consider(x.clone(), &mut best, &mut samples)?;
            for jt in 0..=r {
                for jx in 0..=r {
                    let p = PhasePoint::cylinder(
                        t0 - delta + 2.0 * delta * jt as f64 / r as f64,
                        x0 - delta + 2.0 * delta * jx as f64 / r as f64,
                    );
                    consider(p, &mut best, &mut samples)?;
                }
            }
            Ok(SupBallReport {
                value: best,
                samples,
            })
        }
    }
}

/// Ensemble check of the uniform Birkhoff-sum bound.
#[derive(Debug, Clone)]
pub struct BirkhoffReport {
    pub potential: String,
    pub map: String,
    pub master_seed: u64,
    pub horizon: usize,
    /// `(seed index, max_n |S_n|)` per surviving seed.
    pub per_seed: Vec<(usize, f64)>,
    pub excluded: usize,
    pub global_max: f64,
    /// `sup phi_b` for bump pairs; absent for other potentials.
    pub bound: Option<f64>,
    pub passed: bool,
}

impl BirkhoffReport {
    /// CSV export: `seed,max_abs_Sn`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "seed,max_abs_Sn")?;
        for (seed, max_abs) in &self.per_seed {
            writeln!(w, "{seed},{max_abs}")?;
        }
        Ok(())
    }
}

/// Track running Birkhoff sums of `phi` along `seeds` random orbits to
/// horizon `n` and record the largest `|S_n|` seen. For bump pairs the
/// report passes when the global maximum respects the telescoping bound
/// `sup phi_b` (tolerance 1e-9).
pub fn verify_bounded(
    phi: &Potential,
    map: &MapSystem,
    seeds: usize,
    horizon: usize,
    master_seed: u64,
) -> Result<BirkhoffReport> {
    if seeds == 0 || horizon == 0 {
        return Err(Error::InvalidParameter(
            "need at least one seed and one step".into(),
        ));
    }
    let points = sample_points(map, seeds, master_seed)?;
    let maxima: Vec<Option<f64>> = points
        .par_iter()
        .map(|p| {
            let mut current = p.clone();
            let mut s = 0.0f64;
            let mut max_abs = 0.0f64;
            for _ in 0..horizon {
                let next = map.step(&current).ok()?;
                if !map.in_domain(&next) {
                    return None;
                }
                let val = phi.evaluate_with_image(&current, Some(&next)).ok()?;
                s += val;
                max_abs = max_abs.max(s.abs());
                current = next;
            }
            Some(max_abs)
        })
        .collect();
    let mut per_seed = Vec::with_capacity(seeds);
    let mut excluded = 0usize;
    let mut global_max = 0.0f64;
    for (i, m) in maxima.into_iter().enumerate() {
        match m {
            Some(v) => {
                global_max = global_max.max(v);
                per_seed.push((i, v));
            }
            None => excluded += 1,
        }
    }
    let bound = phi.bump_sup();
    let passed = match bound {
        Some(b) => global_max <= b + 1e-9,
        None => true,
    };
    Ok(BirkhoffReport {
        potential: phi.describe(),
        map: map.describe(),
        master_seed,
        horizon,
        per_seed,
        excluded,
        global_max,
        bound,
        passed,
    })
}
