//! Phase spaces, map families, orbits, and metrics.
//!
//! Four families are supported:
//!
//! * `CircleTimesD` - the degree-`d` covering `theta -> d*theta (mod 1)` on
//!   the circle, uniformly expanding; the reference example for every
//!   estimator because entropy and pressure are known in closed form.
//! * `Quadratic` - the real quadratic family `x -> a0 - x^2` on its invariant
//!   interval `[a0 - a0^2, a0]`, with the critical point at `x = 0`.
//! * `Viana` - the skew product
//!   `(theta, x) -> (d*theta mod 1, a0 + alpha*b(theta) - x^2)` on
//!   `S^1 x I`, a non-uniformly expanding map with the critical circle
//!   `S^1 x {0}`. The invariant fiber interval `I = [-beta, beta]` is found
//!   numerically at construction.
//! * `FullShift` - the one-sided full shift on `k` symbols, represented by
//!   finite words; the symbolic model used by the cylinder-cover pressure.
//!
//! Orbits carry, alongside the points, the sequence of inverse-derivative
//! norms `||Df(x_i)^{-1}||` (operator norm, `+inf` on the critical set) and
//! the distances to the critical set. Those two sequences are everything the
//! hyperbolic-time machinery needs.

use std::io::{self, Write};
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::numeric::{arc_dist, frac, singular_value_min_2x2};

/// Misiurewicz parameter of the family `x -> a - x^2`: the unique `a` in
/// `(1, 2)` at which the critical orbit `0 -> a -> a - a^2` lands after three
/// steps on the positive fixed point `(-1 + sqrt(1 + 4a))/2` (which is
/// repelling there, multiplier about `1.6786`). Real root of
/// `a^3 - 2a^2 + 2a - 2`; re-derived by bisection in the tests.
const A0_MISIUREWICZ: f64 = 1.5436890126920763615708559718;

/// Hard-coded Misiurewicz parameter for the quadratic family.
pub fn misiurewicz_a0() -> f64 {
    A0_MISIUREWICZ
}

/// Finite word over an alphabet `{0, .., k-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolWord {
    alphabet: u32,
    symbols: Vec<u8>,
}

impl SymbolWord {
    pub fn new(alphabet: u32, symbols: Vec<u8>) -> Result<Self> {
        if !(2..=255).contains(&alphabet) {
            return Err(Error::InvalidParameter(format!(
                "alphabet size must be in [2, 255], got {alphabet}"
            )));
        }
        if symbols.is_empty() {
            return Err(Error::InvalidParameter("empty symbol word".into()));
        }
        if let Some(&bad) = symbols.iter().find(|&&s| u32::from(s) >= alphabet) {
            return Err(Error::InvalidParameter(format!(
                "symbol {bad} outside alphabet of size {alphabet}"
            )));
        }
        Ok(SymbolWord { alphabet, symbols })
    }

    pub fn alphabet(&self) -> u32 {
        self.alphabet
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Word with the first symbol removed (the shift image).
    fn shifted(&self) -> Result<Self> {
        if self.symbols.len() < 2 {
            return Err(Error::WordExhausted {
                needed: 2,
                have: self.symbols.len(),
            });
        }
        Ok(SymbolWord {
            alphabet: self.alphabet,
            symbols: self.symbols[1..].to_vec(),
        })
    }

    /// Digits concatenated, e.g. `0120`.
    pub fn digits(&self) -> String {
        self.symbols.iter().map(|s| char::from(b'0' + s)).collect()
    }
}

/// A point of one of the supported phase spaces.
#[derive(Debug, Clone, PartialEq)]
pub enum PhasePoint {
    /// Angle on the circle, always reduced into `[0, 1)`.
    CircleAngle(f64),
    /// Coordinate on an interval map's domain.
    IntervalCoord(f64),
    /// Point of the cylinder `S^1 x I`; `theta` reduced into `[0, 1)`.
    CylinderPoint { theta: f64, x: f64 },
    /// Finite word of a full shift.
    SymbolWord(SymbolWord),
}

impl PhasePoint {
    pub fn circle(theta: f64) -> Self {
        PhasePoint::CircleAngle(frac(theta))
    }

    pub fn interval(x: f64) -> Self {
        PhasePoint::IntervalCoord(x)
    }

    pub fn cylinder(theta: f64, x: f64) -> Self {
        PhasePoint::CylinderPoint {
            theta: frac(theta),
            x,
        }
    }

    pub fn word(alphabet: u32, symbols: &[u8]) -> Result<Self> {
        Ok(PhasePoint::SymbolWord(SymbolWord::new(
            alphabet,
            symbols.to_vec(),
        )?))
    }

    pub fn as_angle(&self) -> Option<f64> {
        match self {
            PhasePoint::CircleAngle(t) => Some(*t),
            _ => None,
        }
    }

    pub fn as_coord(&self) -> Option<f64> {
        match self {
            PhasePoint::IntervalCoord(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_cylinder(&self) -> Option<(f64, f64)> {
        match self {
            PhasePoint::CylinderPoint { theta, x } => Some((*theta, *x)),
            _ => None,
        }
    }

    pub fn as_word(&self) -> Option<&SymbolWord> {
        match self {
            PhasePoint::SymbolWord(w) => Some(w),
            _ => None,
        }
    }

    fn kind_name(&self) -> &'static str {
        match self {
            PhasePoint::CircleAngle(_) => "circle angle",
            PhasePoint::IntervalCoord(_) => "interval coordinate",
            PhasePoint::CylinderPoint { .. } => "cylinder point",
            PhasePoint::SymbolWord(_) => "symbol word",
        }
    }
}

/// Shape descriptor of the fluctuation `b` in the Viana drive
/// `a(theta) = a0 + alpha * b(theta)`.
#[derive(Debug, Clone)]
pub enum Roughness {
    /// `b(theta) = sin(2 pi theta)`, the standard choice.
    Sine,
    /// Periodic piecewise-linear interpolation of values on a uniform grid
    /// over `[0, 1)`; lets other Morse-like profiles be plugged in.
    Tabulated(Arc<Vec<f64>>),
}

impl Roughness {
    fn eval(&self, theta: f64) -> f64 {
        match self {
            Roughness::Sine => (2.0 * std::f64::consts::PI * theta).sin(),
            Roughness::Tabulated(values) => {
                let n = values.len();
                let t = frac(theta) * n as f64;
                let i = (t as usize).min(n - 1);
                let s = t - i as f64;
                let a = values[i];
                let b = values[(i + 1) % n];
                a + s * (b - a)
            }
        }
    }

    fn derivative(&self, theta: f64) -> f64 {
        match self {
            Roughness::Sine => {
                2.0 * std::f64::consts::PI * (2.0 * std::f64::consts::PI * theta).cos()
            }
            Roughness::Tabulated(values) => {
                let n = values.len();
                let t = frac(theta) * n as f64;
                let i = (t as usize).min(n - 1);
                (values[(i + 1) % n] - values[i]) * n as f64
            }
        }
    }
}

/// Number of drive samples used when validating the invariant fiber interval.
const VIANA_GRID: usize = 1 << 14;
/// Step by which the candidate fiber radius is shrunk during construction.
const VIANA_BETA_STEP: f64 = 1.0 / (1 << 14) as f64;

/// Viana skew product with validated parameters and fiber interval.
#[derive(Debug, Clone)]
pub struct VianaMap {
    d: u32,
    a0: f64,
    alpha: f64,
    roughness: Roughness,
    beta: f64,
    grid: usize,
}

impl VianaMap {
    fn build(d: u32, a0: f64, alpha: f64, roughness: Roughness) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidParameter(format!(
                "degree must be >= 2, got {d}"
            )));
        }
        if !(a0 > 1.0 && a0 < 2.0) {
            return Err(Error::InvalidParameter(format!(
                "quadratic parameter must lie in (1, 2), got {a0}"
            )));
        }
        if !(alpha >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "drive amplitude must be >= 0, got {alpha}"
            )));
        }
        // Bound the drive over the validation grid, then shrink the candidate
        // radius from 2 and keep the smallest beta with
        // a_max < beta  and  a_min - beta^2 > -beta,
        // i.e. q(theta, [-beta, beta]) inside the open interval for every
        // sampled theta.
        let mut a_min = f64::INFINITY;
        let mut a_max = f64::NEG_INFINITY;
        for i in 0..VIANA_GRID {
            let theta = i as f64 / VIANA_GRID as f64;
            let a = a0 + alpha * roughness.eval(theta);
            a_min = a_min.min(a);
            a_max = a_max.max(a);
        }
        if !(a_min > 0.0) {
            return Err(Error::Construction(format!(
                "drive takes non-positive values (min {a_min})"
            )));
        }
        let mut beta = 2.0;
        let mut best = None;
        while beta > 0.0 {
            if a_max < beta && a_min - beta * beta > -beta {
                best = Some(beta);
            }
            beta -= VIANA_BETA_STEP;
        }
        let beta = best.ok_or_else(|| {
            Error::Construction(format!(
                "no invariant fiber interval: drive range [{a_min}, {a_max}] admits no radius"
            ))
        })?;
        Ok(VianaMap {
            d,
            a0,
            alpha,
            roughness,
            beta,
            grid: VIANA_GRID,
        })
    }

    pub fn degree(&self) -> u32 {
        self.d
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Radius of the invariant fiber interval `I = [-beta, beta]`.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Resolution of the theta-grid used to validate the interval.
    pub fn validation_grid(&self) -> usize {
        self.grid
    }

    /// Drive `a(theta) = a0 + alpha * b(theta)`.
    pub fn drive(&self, theta: f64) -> f64 {
        self.a0 + self.alpha * self.roughness.eval(theta)
    }

    pub fn drive_derivative(&self, theta: f64) -> f64 {
        self.alpha * self.roughness.derivative(theta)
    }

    /// Extremes of the drive over the validation grid: `(a_min, a_max)`.
    pub fn drive_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.grid {
            let a = self.drive(i as f64 / self.grid as f64);
            lo = lo.min(a);
            hi = hi.max(a);
        }
        (lo, hi)
    }
}

/// One of the supported dynamical systems.
#[derive(Debug, Clone)]
pub enum MapSystem {
    CircleTimesD { d: u32 },
    Quadratic { a0: f64 },
    Viana(VianaMap),
    FullShift { k: u32 },
}

impl MapSystem {
    pub fn circle_times_d(d: u32) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidParameter(format!(
                "degree must be >= 2, got {d}"
            )));
        }
        Ok(MapSystem::CircleTimesD { d })
    }

    pub fn quadratic(a0: f64) -> Result<Self> {
        if !(a0 > 1.0 && a0 <= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "quadratic parameter must lie in (1, 2], got {a0}"
            )));
        }
        Ok(MapSystem::Quadratic { a0 })
    }

    pub fn viana(d: u32, a0: f64, alpha: f64) -> Result<Self> {
        Ok(MapSystem::Viana(VianaMap::build(
            d,
            a0,
            alpha,
            Roughness::Sine,
        )?))
    }

    pub fn viana_with_roughness(d: u32, a0: f64, alpha: f64, roughness: Roughness) -> Result<Self> {
        Ok(MapSystem::Viana(VianaMap::build(d, a0, alpha, roughness)?))
    }

    pub fn full_shift(k: u32) -> Result<Self> {
        if !(2..=255).contains(&k) {
            return Err(Error::InvalidParameter(format!(
                "alphabet size must be in [2, 255], got {k}"
            )));
        }
        Ok(MapSystem::FullShift { k })
    }

    /// Short human-readable identifier used in reports and CSV headers.
    pub fn describe(&self) -> String {
        match self {
            MapSystem::CircleTimesD { d } => format!("circle_times_{d}"),
            MapSystem::Quadratic { a0 } => format!("quadratic_a0={a0}"),
            MapSystem::Viana(v) => format!(
                "viana_d={}_a0={}_alpha={}",
                v.degree(),
                v.a0(),
                v.alpha()
            ),
            MapSystem::FullShift { k } => format!("full_shift_{k}"),
        }
    }

    /// Domain of the quadratic family: `[a0 - a0^2, a0]`.
    pub fn quadratic_domain(&self) -> Option<(f64, f64)> {
        match self {
            MapSystem::Quadratic { a0 } => Some((a0 - a0 * a0, *a0)),
            _ => None,
        }
    }

    pub fn as_viana(&self) -> Option<&VianaMap> {
        match self {
            MapSystem::Viana(v) => Some(v),
            _ => None,
        }
    }

    fn mismatch(&self, p: &PhasePoint) -> Error {
        Error::VariantMismatch(format!(
            "{} applied to {}",
            self.describe(),
            p.kind_name()
        ))
    }

    /// One step of the dynamics.
    pub fn step(&self, p: &PhasePoint) -> Result<PhasePoint> {
        match (self, p) {
            (MapSystem::CircleTimesD { d }, PhasePoint::CircleAngle(theta)) => {
                Ok(PhasePoint::CircleAngle(frac(f64::from(*d) * theta)))
            }
            (MapSystem::Quadratic { a0 }, PhasePoint::IntervalCoord(x)) => {
                Ok(PhasePoint::IntervalCoord(a0 - x * x))
            }
            (MapSystem::Viana(v), PhasePoint::CylinderPoint { theta, x }) => {
                Ok(PhasePoint::CylinderPoint {
                    theta: frac(f64::from(v.d) * theta),
                    x: v.drive(*theta) - x * x,
                })
            }
            (MapSystem::FullShift { k }, PhasePoint::SymbolWord(w)) => {
                if w.alphabet() != *k {
                    return Err(Error::VariantMismatch(format!(
                        "word over {} symbols fed to a {k}-shift",
                        w.alphabet()
                    )));
                }
                Ok(PhasePoint::SymbolWord(w.shifted()?))
            }
            _ => Err(self.mismatch(p)),
        }
    }

    /// Operator norm of `Df(p)^{-1}`; `+inf` on the critical set.
    pub fn inv_deriv_norm(&self, p: &PhasePoint) -> Result<f64> {
        match (self, p) {
            (MapSystem::CircleTimesD { d }, PhasePoint::CircleAngle(_)) => {
                Ok(1.0 / f64::from(*d))
            }
            (MapSystem::Quadratic { .. }, PhasePoint::IntervalCoord(x)) => {
                if *x == 0.0 {
                    Ok(f64::INFINITY)
                } else {
                    Ok(1.0 / (2.0 * x.abs()))
                }
            }
            (MapSystem::Viana(v), PhasePoint::CylinderPoint { theta, x }) => {
                if *x == 0.0 {
                    return Ok(f64::INFINITY);
                }
                // Df = [[d, 0], [alpha*b'(theta), -2x]]; the norm of the
                // inverse is 1/sigma_min(Df).
                let smin = singular_value_min_2x2(
                    f64::from(v.d),
                    0.0,
                    v.drive_derivative(*theta),
                    -2.0 * x,
                );
                Ok(1.0 / smin)
            }
            (MapSystem::FullShift { .. }, PhasePoint::SymbolWord(_)) => Err(Error::Unsupported(
                "inverse derivative norm of a shift system".into(),
            )),
            _ => Err(self.mismatch(p)),
        }
    }

    /// Distance from `p` to the critical set; `+inf` when the map has none.
    pub fn crit_dist(&self, p: &PhasePoint) -> Result<f64> {
        match (self, p) {
            (MapSystem::CircleTimesD { .. }, PhasePoint::CircleAngle(_))
            | (MapSystem::FullShift { .. }, PhasePoint::SymbolWord(_)) => Ok(f64::INFINITY),
            (MapSystem::Quadratic { .. }, PhasePoint::IntervalCoord(x)) => Ok(x.abs()),
            // Critical set S^1 x {0}: nearest point shares theta, so the
            // max-metric distance is |x|.
            (MapSystem::Viana(_), PhasePoint::CylinderPoint { x, .. }) => Ok(x.abs()),
            _ => Err(self.mismatch(p)),
        }
    }

    /// Truncated critical distance: `dist(p, C)` when below `delta`, else 1.
    pub fn dist_delta(&self, p: &PhasePoint, delta: f64) -> Result<f64> {
        assert!(delta > 0.0, "delta must be positive");
        let d = self.crit_dist(p)?;
        Ok(if d < delta { d } else { 1.0 })
    }

    /// Whether the phase space is one-dimensional (circle or interval).
    pub fn is_one_dimensional(&self) -> bool {
        matches!(
            self,
            MapSystem::CircleTimesD { .. } | MapSystem::Quadratic { .. }
        )
    }

    /// Uniform random point of the phase space. Shifts are excluded (a word
    /// length would be needed).
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<PhasePoint> {
        match self {
            MapSystem::CircleTimesD { .. } => Ok(PhasePoint::circle(rng.gen::<f64>())),
            MapSystem::Quadratic { a0 } => {
                let (lo, hi) = (a0 - a0 * a0, *a0);
                Ok(PhasePoint::interval(lo + (hi - lo) * rng.gen::<f64>()))
            }
            MapSystem::Viana(v) => {
                let theta = rng.gen::<f64>();
                let x = v.beta() * (2.0 * rng.gen::<f64>() - 1.0);
                Ok(PhasePoint::cylinder(theta, x))
            }
            MapSystem::FullShift { .. } => Err(Error::Unsupported(
                "random point of a shift system".into(),
            )),
        }
    }

    pub(crate) fn in_domain(&self, p: &PhasePoint) -> bool {
        match (self, p) {
            (MapSystem::Quadratic { a0 }, PhasePoint::IntervalCoord(x)) => {
                (a0 - a0 * a0..=*a0).contains(x)
            }
            (MapSystem::Viana(v), PhasePoint::CylinderPoint { x, .. }) => x.abs() <= v.beta(),
            _ => true,
        }
    }

    /// Orbit segment of length `n` (so `n + 1` points), with derivative and
    /// critical-distance sequences.
    pub fn orbit(&self, p: &PhasePoint, n: usize) -> Result<Orbit> {
        if n == 0 {
            return Err(Error::InvalidParameter("orbit length must be >= 1".into()));
        }
        if let (MapSystem::FullShift { .. }, PhasePoint::SymbolWord(w)) = (self, p) {
            if w.len() <= n {
                return Err(Error::WordExhausted {
                    needed: n + 1,
                    have: w.len(),
                });
            }
        }
        if !self.in_domain(p) {
            return Err(Error::DomainEscape { step: 0 });
        }
        let mut points = Vec::with_capacity(n + 1);
        let mut inv_norms = Vec::with_capacity(n);
        let mut crit_dists = Vec::with_capacity(n);
        let mut current = p.clone();
        for i in 0..n {
            inv_norms.push(match self.inv_deriv_norm(&current) {
                Ok(v) => v,
                Err(Error::Unsupported(_)) => f64::NAN,
                Err(e) => return Err(e),
            });
            crit_dists.push(self.crit_dist(&current)?);
            let next = self.step(&current)?;
            if !self.in_domain(&next) {
                return Err(Error::DomainEscape { step: i + 1 });
            }
            points.push(current);
            current = next;
        }
        points.push(current);
        Ok(Orbit {
            map: self.clone(),
            points,
            inv_norms,
            crit_dists,
        })
    }

    /// All points `y` with `f^n(y) = p`, tagged with their forward branch
    /// itineraries, in lexicographic itinerary order. One-dimensional maps
    /// only. An empty list means `p` has no `n`-th preimages.
    pub fn inverse_branches(&self, p: &PhasePoint, n: usize) -> Result<Vec<BranchPreimage>> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "preimage depth must be >= 1".into(),
            ));
        }
        match self {
            MapSystem::CircleTimesD { d } => {
                let theta = p.as_angle().ok_or_else(|| self.mismatch(p))?;
                let mut frontier = vec![(theta, Vec::new())];
                for _ in 0..n {
                    let mut next = Vec::with_capacity(frontier.len() * *d as usize);
                    for (t, itin) in frontier {
                        for j in 0..*d {
                            let mut it = Vec::with_capacity(itin.len() + 1);
                            it.push(j as u8);
                            it.extend_from_slice(&itin);
                            next.push(((t + f64::from(j)) / f64::from(*d), it));
                        }
                    }
                    next.sort_by(|a, b| a.1.cmp(&b.1));
                    frontier = next;
                }
                Ok(frontier
                    .into_iter()
                    .map(|(t, itinerary)| BranchPreimage {
                        point: PhasePoint::circle(t),
                        itinerary,
                    })
                    .collect())
            }
            MapSystem::Quadratic { a0 } => {
                let target = p.as_coord().ok_or_else(|| self.mismatch(p))?;
                let (lo, hi) = self.quadratic_domain().unwrap();
                let mut frontier = vec![(target, Vec::new())];
                for _ in 0..n {
                    let mut next = Vec::new();
                    for (y, itin) in frontier {
                        let rad2 = a0 - y;
                        if rad2 < 0.0 {
                            continue; // above the maximum value: no preimage
                        }
                        let r = rad2.sqrt();
                        if r == 0.0 {
                            let mut it = vec![0u8];
                            it.extend_from_slice(&itin);
                            next.push((0.0, it));
                            continue;
                        }
                        if -r >= lo {
                            let mut it = vec![0u8];
                            it.extend_from_slice(&itin);
                            next.push((-r, it));
                        }
                        if r <= hi {
                            let mut it = vec![1u8];
                            it.extend_from_slice(&itin);
                            next.push((r, it));
                        }
                    }
                    next.sort_by(|a, b| a.1.cmp(&b.1));
                    frontier = next;
                }
                Ok(frontier
                    .into_iter()
                    .map(|(x, itinerary)| BranchPreimage {
                        point: PhasePoint::interval(x),
                        itinerary,
                    })
                    .collect())
            }
            _ => Err(Error::Unsupported(
                "inverse branches are defined for one-dimensional maps".into(),
            )),
        }
    }
}

/// A single `n`-th preimage with its forward branch itinerary.
#[derive(Debug, Clone)]
pub struct BranchPreimage {
    pub point: PhasePoint,
    /// `itinerary[i]` identifies the monotone branch containing the `i`-th
    /// forward iterate of the preimage.
    pub itinerary: Vec<u8>,
}

/// Orbit segment together with derivative and critical-distance data.
#[derive(Debug, Clone)]
pub struct Orbit {
    map: MapSystem,
    points: Vec<PhasePoint>,
    inv_norms: Vec<f64>,
    crit_dists: Vec<f64>,
}

impl Orbit {
    /// Number of steps (one less than the number of stored points).
    pub fn steps(&self) -> usize {
        self.inv_norms.len()
    }

    pub fn map(&self) -> &MapSystem {
        &self.map
    }

    pub fn points(&self) -> &[PhasePoint] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &PhasePoint {
        &self.points[i]
    }

    pub fn initial(&self) -> &PhasePoint {
        &self.points[0]
    }

    /// `||Df(x_i)^{-1}||` for `i = 0 .. steps`.
    pub fn inv_norms(&self) -> &[f64] {
        &self.inv_norms
    }

    /// Distances to the critical set for `i = 0 .. steps`.
    pub fn crit_dists(&self) -> &[f64] {
        &self.crit_dists
    }

    /// Assemble an orbit from raw sequences (testing synthetic data).
    #[doc(hidden)]
    pub fn from_raw(
        map: MapSystem,
        points: Vec<PhasePoint>,
        inv_norms: Vec<f64>,
        crit_dists: Vec<f64>,
    ) -> Self {
        assert_eq!(points.len(), inv_norms.len() + 1);
        assert_eq!(inv_norms.len(), crit_dists.len());
        Orbit {
            map,
            points,
            inv_norms,
            crit_dists,
        }
    }

    /// CSV export: `step,theta,x,inv_deriv_norm,crit_dist` with a header row.
    /// The derivative and critical-distance columns are empty on the final
    /// row, which carries only the endpoint.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "step,theta,x,inv_deriv_norm,crit_dist")?;
        for (i, p) in self.points.iter().enumerate() {
            let (theta, x) = match p {
                PhasePoint::CircleAngle(t) => (t.to_string(), String::new()),
                PhasePoint::IntervalCoord(v) => (String::new(), v.to_string()),
                PhasePoint::CylinderPoint { theta, x } => (theta.to_string(), x.to_string()),
                PhasePoint::SymbolWord(word) => (String::new(), word.digits()),
            };
            if i < self.inv_norms.len() {
                writeln!(
                    w,
                    "{i},{theta},{x},{},{}",
                    self.inv_norms[i], self.crit_dists[i]
                )?;
            } else {
                writeln!(w, "{i},{theta},{x},,")?;
            }
        }
        Ok(())
    }
}

/// Metrics on the supported phase spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// Shorter-arc distance on the circle.
    CircleArc,
    /// Absolute difference on an interval.
    Euclidean1D,
    /// `max(arc distance, |x - x'|)` on the cylinder.
    CylinderMax,
    /// `2^(-m)` where `m` is the length of the longest common prefix.
    WordMetric,
}

impl Metric {
    /// Natural metric of a map's phase space.
    pub fn for_map(map: &MapSystem) -> Metric {
        match map {
            MapSystem::CircleTimesD { .. } => Metric::CircleArc,
            MapSystem::Quadratic { .. } => Metric::Euclidean1D,
            MapSystem::Viana(_) => Metric::CylinderMax,
            MapSystem::FullShift { .. } => Metric::WordMetric,
        }
    }

    pub fn distance(&self, p: &PhasePoint, q: &PhasePoint) -> Result<f64> {
        match (self, p, q) {
            (Metric::CircleArc, PhasePoint::CircleAngle(a), PhasePoint::CircleAngle(b)) => {
                Ok(arc_dist(*a, *b))
            }
            (Metric::Euclidean1D, PhasePoint::IntervalCoord(a), PhasePoint::IntervalCoord(b)) => {
                Ok((a - b).abs())
            }
            (
                Metric::CylinderMax,
                PhasePoint::CylinderPoint { theta: t1, x: x1 },
                PhasePoint::CylinderPoint { theta: t2, x: x2 },
            ) => Ok(arc_dist(*t1, *t2).max((x1 - x2).abs())),
            (Metric::WordMetric, PhasePoint::SymbolWord(a), PhasePoint::SymbolWord(b)) => {
                if a.alphabet() != b.alphabet() {
                    return Err(Error::MetricMismatch(format!(
                        "alphabet sizes {} and {}",
                        a.alphabet(),
                        b.alphabet()
                    )));
                }
                let m = a
                    .symbols()
                    .iter()
                    .zip(b.symbols())
                    .take_while(|(x, y)| x == y)
                    .count();
                Ok(2f64.powi(-(m as i32)))
            }
            _ => Err(Error::MetricMismatch(format!(
                "{:?} on ({}, {})",
                self,
                p.kind_name(),
                q.kind_name()
            ))),
        }
    }
}
