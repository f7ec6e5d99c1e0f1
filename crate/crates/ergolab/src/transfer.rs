//! Ulam discretization of the weighted transfer operator.
//!
//! The operator `(L_phi v)(y) = sum_{f(x) = y} e^{phi(x)} v(x)` is
//! discretized on a uniform grid by the covering convention
//!
//! ```text
//! L[i][j] = e^{phi(c_j)} * sum_branches |f(cell_j /\ branch) /\ cell_i| / |cell_i|
//! ```
//!
//! with `c_j` the center of cell `j`. For `x -> d x mod 1` every cell's
//! image covers exactly `d` cells fully, so the matrix has entries exactly
//! 1, uniform is an exact eigenvector, and the leading eigenvalue is
//! exactly `d`; in general `log lambda` approximates the pressure `P(phi)`.
//! Exact branch geometry is implemented for the one-dimensional families;
//! the skew product uses Jacobian-weighted stratified Monte Carlo
//! (`|det Df| = 2 d |x|`), deterministically seeded per cell.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::{MapSystem, PhasePoint};
use crate::error::{Error, Result};
use crate::numeric::{fnv1a64, neumaier_sum};
use crate::potentials::Potential;
use crate::pressure::{Method, PressureEstimate, TableRow};

/// Iteration budget used by the pressure and density drivers.
pub const MAX_POWER_ITER: usize = 10_000;

/// Default per-cell sampling when a mode is not supplied for the skew
/// product (the one-dimensional families default to exact branches).
pub const DEFAULT_MC_SEED: u64 = 0x4552_474f;
pub const DEFAULT_MC_SAMPLES: usize = 64;

/// Uniform partition of the phase space.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Circle { m: usize },
    Interval { m: usize, lo: f64, hi: f64 },
    Cylinder { m_theta: usize, m_x: usize, beta: f64 },
}

impl Grid {
    /// One-dimensional grid matching the map's phase space.
    pub fn for_map_1d(map: &MapSystem, m: usize) -> Result<Grid> {
        if m < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 2 cells, got {m}"
            )));
        }
        match map {
            MapSystem::CircleTimesD { .. } => Ok(Grid::Circle { m }),
            MapSystem::Quadratic { .. } => {
                let (lo, hi) = map.quadratic_domain().unwrap();
                Ok(Grid::Interval { m, lo, hi })
            }
            _ => Err(Error::VariantMismatch(format!(
                "one-dimensional grid on {}",
                map.describe()
            ))),
        }
    }

    /// Product grid over the cylinder for the skew product.
    pub fn for_map_2d(map: &MapSystem, m_theta: usize, m_x: usize) -> Result<Grid> {
        if m_theta < 2 || m_x < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 2 cells per axis, got {m_theta} x {m_x}"
            )));
        }
        match map {
            MapSystem::Viana(v) => Ok(Grid::Cylinder {
                m_theta,
                m_x,
                beta: v.beta(),
            }),
            _ => Err(Error::VariantMismatch(format!(
                "cylinder grid on {}",
                map.describe()
            ))),
        }
    }

    pub fn cells(&self) -> usize {
        match self {
            Grid::Circle { m } | Grid::Interval { m, .. } => *m,
            Grid::Cylinder { m_theta, m_x, .. } => m_theta * m_x,
        }
    }

    /// Lebesgue measure of one cell (all cells are congruent).
    pub fn cell_measure(&self) -> f64 {
        match self {
            Grid::Circle { m } => 1.0 / *m as f64,
            Grid::Interval { m, lo, hi } => (hi - lo) / *m as f64,
            Grid::Cylinder { m_theta, m_x, beta } => {
                (1.0 / *m_theta as f64) * (2.0 * beta / *m_x as f64)
            }
        }
    }

    pub fn center(&self, i: usize) -> PhasePoint {
        match self {
            Grid::Circle { m } => PhasePoint::circle((i as f64 + 0.5) / *m as f64),
            Grid::Interval { m, lo, hi } => {
                PhasePoint::interval(lo + (hi - lo) * (i as f64 + 0.5) / *m as f64)
            }
            Grid::Cylinder { m_theta, m_x, beta } => {
                let it = i / m_x;
                let ix = i % m_x;
                PhasePoint::cylinder(
                    (it as f64 + 0.5) / *m_theta as f64,
                    -beta + 2.0 * beta * (ix as f64 + 0.5) / *m_x as f64,
                )
            }
        }
    }

    /// Cell containing the point; `None` outside the covered domain (a
    /// relative slack of 1e-9 absorbs rounding at the boundary).
    pub fn cell_of(&self, p: &PhasePoint) -> Option<usize> {
        fn clamp_index(t: f64, m: usize) -> usize {
            let i = t.floor() as isize;
            i.clamp(0, m as isize - 1) as usize
        }
        match (self, p) {
            (Grid::Circle { m }, PhasePoint::CircleAngle(theta)) => {
                Some(clamp_index(crate::numeric::frac(*theta) * *m as f64, *m))
            }
            (Grid::Interval { m, lo, hi }, PhasePoint::IntervalCoord(x)) => {
                let slack = 1e-9 * (hi - lo);
                if *x < lo - slack || *x > hi + slack {
                    return None;
                }
                Some(clamp_index((x - lo) / (hi - lo) * *m as f64, *m))
            }
            (
                Grid::Cylinder { m_theta, m_x, beta },
                PhasePoint::CylinderPoint { theta, x },
            ) => {
                let slack = 1e-9 * 2.0 * beta;
                if *x < -beta - slack || *x > beta + slack {
                    return None;
                }
                let it = clamp_index(crate::numeric::frac(*theta) * *m_theta as f64, *m_theta);
                let ix = clamp_index((x + beta) / (2.0 * beta) * *m_x as f64, *m_x);
                Some(it * m_x + ix)
            }
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Grid::Circle { m } => format!("circle_m={m}"),
            Grid::Interval { m, lo, hi } => format!("interval_m={m}_[{lo},{hi}]"),
            Grid::Cylinder { m_theta, m_x, beta } => {
                format!("cylinder_{m_theta}x{m_x}_beta={beta}")
            }
        }
    }
}

/// How operator entries are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuildMode {
    /// Branch-by-branch image geometry (one-dimensional maps only).
    ExactBranch,
    /// Jacobian-weighted stratified sampling, seeded per `(seed, cell)`.
    MonteCarlo { seed: u64, samples_per_cell: usize },
}

impl BuildMode {
    pub fn describe(&self) -> String {
        match self {
            BuildMode::ExactBranch => "exact_branch".into(),
            BuildMode::MonteCarlo {
                seed,
                samples_per_cell,
            } => format!("monte_carlo_seed={seed}_spc={samples_per_cell}"),
        }
    }
}

/// Row-compressed nonnegative transfer matrix on a grid.
#[derive(Debug, Clone)]
pub struct UlamOperator {
    grid: Grid,
    potential_id: String,
    mode: BuildMode,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl UlamOperator {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn cells(&self) -> usize {
        self.grid.cells()
    }

    pub fn mode(&self) -> BuildMode {
        self.mode
    }

    pub fn potential_id(&self) -> &str {
        &self.potential_id
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Matrix-vector product, rows in parallel, each row accumulated in
    /// ascending column order.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cells(), "dimension mismatch");
        (0..self.cells())
            .into_par_iter()
            .map(|i| {
                let mut acc = 0.0;
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    acc += self.values[k] * v[self.col_idx[k]];
                }
                acc
            })
            .collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cells()];
        for (k, &j) in self.col_idx.iter().enumerate() {
            sums[j] += self.values[k];
        }
        sums
    }

    /// All stored entries of one column as `(row, value)`, ascending by
    /// row (linear scan; intended for inspection, not inner loops).
    pub fn column_entries(&self, j: usize) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.cells() {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.col_idx[k] == j {
                    out.push((i, self.values[k]));
                }
            }
        }
        out
    }

    /// Plain-text triplet export: a `#` header with grid, mode, and
    /// potential, then one `row col value` line per stored entry.
    pub fn write_triplets<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(
            w,
            "# rows={} cols={} nnz={} grid={} mode={} potential={}",
            self.cells(),
            self.cells(),
            self.nnz(),
            self.grid.describe(),
            self.mode.describe(),
            self.potential_id
        )?;
        for i in 0..self.cells() {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                writeln!(w, "{} {} {}", i, self.col_idx[k], self.values[k])?;
            }
        }
        Ok(())
    }
}

fn abs_jacobian(map: &MapSystem, p: &PhasePoint) -> Result<f64> {
    match (map, p) {
        (MapSystem::CircleTimesD { d }, PhasePoint::CircleAngle(_)) => Ok(f64::from(*d)),
        (MapSystem::Quadratic { .. }, PhasePoint::IntervalCoord(x)) => Ok(2.0 * x.abs()),
        (MapSystem::Viana(v), PhasePoint::CylinderPoint { x, .. }) => {
            Ok(2.0 * f64::from(v.degree()) * x.abs())
        }
        _ => Err(Error::VariantMismatch(format!(
            "Jacobian of {} at an incompatible point",
            map.describe()
        ))),
    }
}

/// Exact overlap distribution of an interval image `[s, e]` over the cells
/// of a one-dimensional grid, in units of the cell measure.
fn spread_interval(
    s: f64,
    e: f64,
    lo: f64,
    w: f64,
    m: usize,
    out: &mut Vec<(usize, f64)>,
) {
    if !(e > s) {
        return;
    }
    let first = (((s - lo) / w).floor() as isize).clamp(0, m as isize - 1) as usize;
    let last = (((e - lo) / w).floor() as isize).clamp(0, m as isize - 1) as usize;
    for i in first..=last {
        let cell_lo = lo + w * i as f64;
        let cell_hi = lo + w * (i + 1) as f64;
        let overlap = e.min(cell_hi) - s.max(cell_lo);
        if overlap > 0.0 {
            out.push((i, overlap / w));
        }
    }
}

fn exact_column(map: &MapSystem, grid: &Grid, j: usize) -> Result<Vec<(usize, f64)>> {
    match (map, grid) {
        (MapSystem::CircleTimesD { d }, Grid::Circle { m }) => {
            // Cell boundaries are integers over m, and x -> d x keeps them
            // so: the image covers exactly d cells fully.
            let mut entries = vec![0.0f64; (*d as usize).min(*m)];
            let mut rows = Vec::with_capacity(*d as usize);
            for r in 0..*d as usize {
                let target = (*d as usize * j + r) % m;
                match rows.iter().position(|&t| t == target) {
                    Some(pos) => entries[pos] += 1.0,
                    None => {
                        rows.push(target);
                        entries[rows.len() - 1] = 1.0;
                    }
                }
            }
            let mut out: Vec<(usize, f64)> = rows
                .into_iter()
                .zip(entries)
                .filter(|(_, v)| *v > 0.0)
                .collect();
            out.sort_unstable_by_key(|(i, _)| *i);
            Ok(out)
        }
        (MapSystem::Quadratic { a0 }, Grid::Interval { m, lo, hi }) => {
            let w = (hi - lo) / *m as f64;
            let a = lo + w * j as f64;
            let b = if j + 1 == *m { *hi } else { lo + w * (j + 1) as f64 };
            let f = |x: f64| a0 - x * x;
            let mut out = Vec::new();
            // Monotone on either side of the critical point at 0.
            if a < 0.0 {
                let q = b.min(0.0);
                let (s, e) = (f(a).min(f(q)), f(a).max(f(q)));
                spread_interval(s.max(*lo), e.min(*hi), *lo, w, *m, &mut out);
            }
            if b > 0.0 {
                let p = a.max(0.0);
                let (s, e) = (f(b).min(f(p)), f(b).max(f(p)));
                spread_interval(s.max(*lo), e.min(*hi), *lo, w, *m, &mut out);
            }
            out.sort_by_key(|(i, _)| *i);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(out.len());
            for (i, v) in out {
                match merged.last_mut() {
                    Some((li, lv)) if *li == i => *lv += v,
                    _ => merged.push((i, v)),
                }
            }
            Ok(merged)
        }
        (MapSystem::Viana(_), _) => Err(Error::Unsupported(
            "exact branch geometry is not available for the skew product; use MonteCarlo mode"
                .into(),
        )),
        (MapSystem::FullShift { .. }, _) => Err(Error::Unsupported(
            "Ulam discretization of a shift system".into(),
        )),
        _ => Err(Error::VariantMismatch(format!(
            "grid {} does not match {}",
            grid.describe(),
            map.describe()
        ))),
    }
}

fn cell_seed(seed: u64, j: usize) -> u64 {
    let mut bytes = [0u8; 16];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..].copy_from_slice(&(j as u64).to_le_bytes());
    fnv1a64(&bytes)
}

fn monte_carlo_column(
    map: &MapSystem,
    grid: &Grid,
    j: usize,
    seed: u64,
    samples: usize,
) -> Result<Vec<(usize, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(seed, j));
    let mut hits: Vec<(usize, f64)> = Vec::with_capacity(samples);
    let mut record = |p: PhasePoint, weight: f64| -> Result<()> {
        let jac = abs_jacobian(map, &p)?;
        let image = map.step(&p)?;
        if let Some(target) = grid.cell_of(&image) {
            hits.push((target, jac * weight));
        }
        Ok(())
    };
    match grid {
        Grid::Circle { m } | Grid::Interval { m, .. } => {
            let (lo, w) = match grid {
                Grid::Circle { m } => (j as f64 / *m as f64, 1.0 / *m as f64),
                Grid::Interval { m, lo, hi } => {
                    (lo + (hi - lo) * j as f64 / *m as f64, (hi - lo) / *m as f64)
                }
                _ => unreachable!(),
            };
            let _ = m;
            let inv = 1.0 / samples as f64;
            for k in 0..samples {
                let u: f64 = rng.gen();
                let x = lo + w * (k as f64 + u) * inv;
                let p = match grid {
                    Grid::Circle { .. } => PhasePoint::circle(x),
                    _ => PhasePoint::interval(x),
                };
                record(p, inv)?;
            }
        }
        Grid::Cylinder { m_theta, m_x, beta } => {
            let side = (samples as f64).sqrt().round() as usize;
            if side * side != samples {
                return Err(Error::InvalidParameter(format!(
                    "samples per cell must be a perfect square on a 2D grid, got {samples}"
                )));
            }
            let it = j / m_x;
            let ix = j % m_x;
            let t_lo = it as f64 / *m_theta as f64;
            let wt = 1.0 / *m_theta as f64;
            let x_lo = -beta + 2.0 * beta * ix as f64 / *m_x as f64;
            let wx = 2.0 * beta / *m_x as f64;
            let inv_side = 1.0 / side as f64;
            let inv = 1.0 / samples as f64;
            for kt in 0..side {
                for kx in 0..side {
                    let ut: f64 = rng.gen();
                    let ux: f64 = rng.gen();
                    let theta = t_lo + wt * (kt as f64 + ut) * inv_side;
                    let x = x_lo + wx * (kx as f64 + ux) * inv_side;
                    record(PhasePoint::cylinder(theta, x), inv)?;
                }
            }
        }
    }
    hits.sort_by_key(|(i, _)| *i);
    let mut merged: Vec<(usize, f64)> = Vec::new();
    for (i, v) in hits {
        match merged.last_mut() {
            Some((li, lv)) if *li == i => *lv += v,
            _ => merged.push((i, v)),
        }
    }
    Ok(merged)
}

/// Assemble the discretized operator; columns are independent and built in
/// parallel, then transposed into row-compressed form deterministically.
pub fn build_ulam(
    map: &MapSystem,
    grid: &Grid,
    phi: &Potential,
    mode: BuildMode,
) -> Result<UlamOperator> {
    match (map, grid) {
        (MapSystem::CircleTimesD { .. }, Grid::Circle { .. })
        | (MapSystem::Quadratic { .. }, Grid::Interval { .. })
        | (MapSystem::Viana(_), Grid::Cylinder { .. }) => {}
        (MapSystem::FullShift { .. }, _) => {
            return Err(Error::Unsupported(
                "Ulam discretization of a shift system".into(),
            ))
        }
        _ => {
            return Err(Error::VariantMismatch(format!(
                "grid {} does not match {}",
                grid.describe(),
                map.describe()
            )))
        }
    }
    if let BuildMode::MonteCarlo {
        samples_per_cell, ..
    } = mode
    {
        if samples_per_cell == 0 {
            return Err(Error::InvalidParameter(
                "samples per cell must be positive".into(),
            ));
        }
    }
    let cells = grid.cells();
    let columns: Vec<Vec<(usize, f64)>> = (0..cells)
        .into_par_iter()
        .map(|j| -> Result<Vec<(usize, f64)>> {
            let weight = phi.evaluate(&grid.center(j))?.exp();
            let raw = match mode {
                BuildMode::ExactBranch => exact_column(map, grid, j)?,
                BuildMode::MonteCarlo {
                    seed,
                    samples_per_cell,
                } => monte_carlo_column(map, grid, j, seed, samples_per_cell)?,
            };
            Ok(raw.into_iter().map(|(i, v)| (i, weight * v)).collect())
        })
        .collect::<Result<_>>()?;
    let mut row_counts = vec![0usize; cells];
    for col in &columns {
        for (i, _) in col {
            row_counts[*i] += 1;
        }
    }
    let mut row_ptr = vec![0usize; cells + 1];
    for i in 0..cells {
        row_ptr[i + 1] = row_ptr[i] + row_counts[i];
    }
    let nnz = row_ptr[cells];
    let mut col_idx = vec![0usize; nnz];
    let mut values = vec![0.0f64; nnz];
    let mut cursor = row_ptr.clone();
    for (j, col) in columns.iter().enumerate() {
        for (i, v) in col {
            let k = cursor[*i];
            col_idx[k] = j;
            values[k] = *v;
            cursor[*i] += 1;
        }
    }
    Ok(UlamOperator {
        grid: grid.clone(),
        potential_id: phi.describe(),
        mode,
        row_ptr,
        col_idx,
        values,
    })
}

/// Leading eigen-pair of the discretized operator.
#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub lambda: f64,
    /// Nonnegative eigenvector, normalized to sum 1 (cell masses).
    pub vector: Vec<f64>,
    /// `||L v - lambda v||_1` at the returned pair.
    pub residual: f64,
    pub iterations: usize,
    /// False when the eigenvalue tolerance was not met within the budget.
    pub converged: bool,
}

/// Power iteration from the uniform vector; stops when successive
/// eigenvalue estimates differ by less than `tol`.
pub fn power_iterate(op: &UlamOperator, tol: f64, max_iter: usize) -> Result<SpectralResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    if max_iter == 0 {
        return Err(Error::InvalidParameter(
            "iteration budget must be positive".into(),
        ));
    }
    let cells = op.cells();
    let mut seen = vec![false; cells];
    for &j in &op.col_idx {
        seen[j] = true;
    }
    if let Some(j) = seen.iter().position(|s| !s) {
        return Err(Error::ZeroColumn(j));
    }
    let mut v = vec![1.0 / cells as f64; cells];
    let mut lambda = f64::NAN;
    let mut iterations = 0;
    let mut converged = false;
    for it in 1..=max_iter {
        let w = op.apply(&v);
        let next = neumaier_sum(w.iter().copied());
        if !(next > 0.0) || !next.is_finite() {
            return Err(Error::Construction(format!(
                "power iteration produced a degenerate eigenvalue estimate {next}"
            )));
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / next;
        }
        iterations = it;
        let done = (next - lambda).abs() < tol;
        lambda = next;
        if done {
            converged = true;
            break;
        }
    }
    let w = op.apply(&v);
    let diffs: Vec<f64> = w
        .iter()
        .zip(&v)
        .map(|(wi, vi)| (wi - lambda * vi).abs())
        .collect();
    let residual = neumaier_sum(diffs.iter().copied());
    Ok(SpectralResult {
        lambda,
        vector: v,
        residual,
        iterations,
        converged,
    })
}

/// Pressure as the log of the leading eigenvalue.
pub fn pressure_ulam(
    map: &MapSystem,
    phi: &Potential,
    grid: &Grid,
    mode: BuildMode,
    tol: f64,
) -> Result<PressureEstimate> {
    let op = build_ulam(map, grid, phi, mode)?;
    let spectral = power_iterate(&op, tol, MAX_POWER_ITER)?;
    if !spectral.converged {
        return Err(Error::Construction(format!(
            "power iteration did not meet tolerance {tol} within {MAX_POWER_ITER} iterations"
        )));
    }
    Ok(PressureEstimate {
        method: Method::Ulam,
        value: spectral.lambda.ln(),
        table: vec![TableRow::Ulam {
            cells: op.cells(),
            lambda: spectral.lambda,
            residual: spectral.residual,
            iterations: spectral.iterations,
        }],
        note: format!(
            "log of the leading eigenvalue on {} ({} cells, mode {}, eigenvalue tol {tol}) for {}",
            grid.describe(),
            op.cells(),
            mode.describe(),
            map.describe()
        ),
    })
}

/// Piecewise-constant probability density on a grid.
#[derive(Debug, Clone)]
pub struct DensityTable {
    grid: Grid,
    density: Vec<f64>,
    lambda: f64,
    residual: f64,
    iterations: usize,
}

impl DensityTable {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Integral of the density over the phase space.
    pub fn total_mass(&self) -> f64 {
        let w = self.grid.cell_measure();
        let masses: Vec<f64> = self.density.iter().map(|d| d * w).collect();
        neumaier_sum(masses.iter().copied())
    }

    /// CSV export: `cell_index,center,density` (1D) or
    /// `cell_index,center_theta,center_x,density` (2D).
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        match &self.grid {
            Grid::Circle { .. } | Grid::Interval { .. } => {
                writeln!(w, "cell_index,center,density")?;
                for (i, d) in self.density.iter().enumerate() {
                    let c = match self.grid.center(i) {
                        PhasePoint::CircleAngle(t) => t,
                        PhasePoint::IntervalCoord(x) => x,
                        _ => unreachable!(),
                    };
                    writeln!(w, "{i},{c},{d}")?;
                }
            }
            Grid::Cylinder { .. } => {
                writeln!(w, "cell_index,center_theta,center_x,density")?;
                for (i, d) in self.density.iter().enumerate() {
                    if let PhasePoint::CylinderPoint { theta, x } = self.grid.center(i) {
                        writeln!(w, "{i},{theta},{x},{d}")?;
                    }
                }
            }
        }
        writeln!(
            w,
            "# grid={},lambda={},total_mass={}",
            self.grid.describe(),
            self.lambda,
            self.total_mass()
        )
    }

    /// SVG export: line plot (1D) or grayscale heat map (2D). An optional
    /// comment (say, a timestamp) is embedded verbatim; pass `None` for
    /// byte-reproducible output.
    pub fn write_svg<W: Write>(&self, w: &mut W, comment: Option<&str>) -> io::Result<()> {
        writeln!(
            w,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 640 360">"#
        )?;
        if let Some(c) = comment {
            writeln!(w, "<!-- {c} -->")?;
        }
        writeln!(
            w,
            r#"<rect x="0" y="0" width="640" height="360" fill="white"/>"#
        )?;
        let peak = self.density.iter().cloned().fold(0.0f64, f64::max).max(1e-300);
        match &self.grid {
            Grid::Circle { m } | Grid::Interval { m, .. } => {
                let mut points = String::new();
                for (i, d) in self.density.iter().enumerate() {
                    let x = 20.0 + 600.0 * (i as f64 + 0.5) / *m as f64;
                    let y = 340.0 - 300.0 * d / peak;
                    points.push_str(&format!("{x},{y} "));
                }
                writeln!(
                    w,
                    r#"<polyline fill="none" stroke="black" points="{}"/>"#,
                    points.trim_end()
                )?;
            }
            Grid::Cylinder { m_theta, m_x, .. } => {
                let cw = 600.0 / *m_theta as f64;
                let ch = 320.0 / *m_x as f64;
                for it in 0..*m_theta {
                    for ix in 0..*m_x {
                        let d = self.density[it * m_x + ix];
                        let shade = (255.0 * (1.0 - d / peak)).round() as u8;
                        let x = 20.0 + cw * it as f64;
                        let y = 340.0 - ch * (ix + 1) as f64;
                        writeln!(
                            w,
                            r#"<rect x="{x}" y="{y}" width="{cw}" height="{ch}" fill="rgb({shade},{shade},{shade})"/>"#
                        )?;
                    }
                }
            }
        }
        writeln!(w, "</svg>")
    }
}

/// Density of the maximal-entropy candidate: normalized leading
/// eigenvector of the unweighted operator. One-dimensional maps use exact
/// branches; the skew product uses the default Monte Carlo mode.
pub fn mme_density(map: &MapSystem, grid: &Grid, tol: f64) -> Result<DensityTable> {
    let mode = match map {
        MapSystem::Viana(_) => BuildMode::MonteCarlo {
            seed: DEFAULT_MC_SEED,
            samples_per_cell: DEFAULT_MC_SAMPLES,
        },
        _ => BuildMode::ExactBranch,
    };
    mme_density_with_mode(map, grid, tol, mode)
}

/// As `mme_density` with an explicit construction mode.
pub fn mme_density_with_mode(
    map: &MapSystem,
    grid: &Grid,
    tol: f64,
    mode: BuildMode,
) -> Result<DensityTable> {
    let op = build_ulam(map, grid, &Potential::Constant(0.0), mode)?;
    let spectral = power_iterate(&op, tol, MAX_POWER_ITER)?;
    if !spectral.converged {
        return Err(Error::Construction(format!(
            "power iteration did not meet tolerance {tol} within {MAX_POWER_ITER} iterations"
        )));
    }
    let w = grid.cell_measure();
    let mut density: Vec<f64> = spectral.vector.iter().map(|m| m / w).collect();
    let masses: Vec<f64> = density.iter().map(|d| d * w).collect();
    let mass = neumaier_sum(masses.iter().copied());
    if !(mass > 0.0) {
        return Err(Error::Construction(
            "eigenvector carries no mass".into(),
        ));
    }
    for d in density.iter_mut() {
        *d /= mass;
    }
    Ok(DensityTable {
        grid: grid.clone(),
        density,
        lambda: spectral.lambda,
        residual: spectral.residual,
        iterations: spectral.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::Analytic;
    use crate::pressure::pressure_separated;

    fn null() -> Potential {
        Potential::Constant(0.0)
    }

    #[test]
    fn grid_roundtrip_and_measure() {
        let circle = MapSystem::circle_times_d(2).unwrap();
        let g = Grid::for_map_1d(&circle, 16).unwrap();
        assert_eq!(g.cells(), 16);
        assert!((g.cell_measure() - 1.0 / 16.0).abs() < 1e-15);
        for i in 0..16 {
            assert_eq!(g.cell_of(&g.center(i)), Some(i));
        }
        let quad = MapSystem::quadratic(2.0).unwrap();
        let gq = Grid::for_map_1d(&quad, 8).unwrap();
        for i in 0..8 {
            assert_eq!(gq.cell_of(&gq.center(i)), Some(i));
        }
        assert_eq!(gq.cell_of(&PhasePoint::interval(5.0)), None);
        let viana = MapSystem::viana(16, 1.8, 0.01).unwrap();
        let gv = Grid::for_map_2d(&viana, 8, 4).unwrap();
        assert_eq!(gv.cells(), 32);
        for i in 0..32 {
            assert_eq!(gv.cell_of(&gv.center(i)), Some(i));
        }
        assert!(Grid::for_map_1d(&viana, 8).is_err());
        assert!(Grid::for_map_2d(&circle, 8, 8).is_err());
    }

    #[test]
    fn doubling_columns_cover_two_cells_exactly() {
        let map = MapSystem::circle_times_d(2).unwrap();
        let grid = Grid::for_map_1d(&map, 8).unwrap();
        let op = build_ulam(&map, &grid, &null(), BuildMode::ExactBranch).unwrap();
        assert_eq!(op.nnz(), 16);
        for j in 0..8 {
            let col = op.column_entries(j);
            let rows: Vec<usize> = col.iter().map(|(i, _)| *i).collect();
            assert_eq!(rows, vec![(2 * j) % 8, (2 * j + 1) % 8]);
            for (_, v) in &col {
                assert_eq!(*v, 1.0, "covering fractions are exact");
            }
        }
        for s in op.column_sums() {
            assert_eq!(s, 2.0);
        }
    }

    #[test]
    fn quadratic_fractions_from_branch_endpoints() {
        // a0 = 2 on [-2, 2] with 4 unit cells: f(x) = 2 - x^2 sends
        // [-2,-1] and [1,2] onto [-2,1] (three cells) and the middle
        // cells onto [1,2] (one cell).
        let map = MapSystem::quadratic(2.0).unwrap();
        let grid = Grid::for_map_1d(&map, 4).unwrap();
        let op = build_ulam(&map, &grid, &null(), BuildMode::ExactBranch).unwrap();
        let expected: [Vec<(usize, f64)>; 4] = [
            vec![(0, 1.0), (1, 1.0), (2, 1.0)],
            vec![(3, 1.0)],
            vec![(3, 1.0)],
            vec![(0, 1.0), (1, 1.0), (2, 1.0)],
        ];
        for (j, want) in expected.iter().enumerate() {
            let col = op.column_entries(j);
            assert_eq!(col.len(), want.len(), "column {j}");
            for ((i, v), (wi, wv)) in col.iter().zip(want) {
                assert_eq!(i, wi, "column {j}");
                assert!((v - wv).abs() < 1e-12, "column {j}: {v} vs {wv}");
            }
        }
        let spectral = power_iterate(&op, 1e-12, 100).unwrap();
        assert!((spectral.lambda - 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_weight_scales_operator_and_eigenvalue() {
        let map = MapSystem::circle_times_d(2).unwrap();
        let grid = Grid::for_map_1d(&map, 64).unwrap();
        let base = build_ulam(&map, &grid, &null(), BuildMode::ExactBranch).unwrap();
        let c = 0.37;
        let scaled = build_ulam(
            &map,
            &grid,
            &Potential::Constant(c),
            BuildMode::ExactBranch,
        )
        .unwrap();
        let factor = c.exp();
        for (a, b) in base.values.iter().zip(&scaled.values) {
            assert!((b - factor * a).abs() <= 1e-15 * factor);
        }
        let l0 = power_iterate(&base, 1e-12, 1000).unwrap().lambda;
        let lc = power_iterate(&scaled, 1e-12, 1000).unwrap().lambda;
        assert!((lc - factor * l0).abs() <= 1e-10 * factor * l0);
    }

    #[test]
    fn leading_pair_is_exact_for_circle_maps() {
        for (d, m) in [(2u32, 1usize << 12), (3, 6561)] {
            let map = MapSystem::circle_times_d(d).unwrap();
            let grid = Grid::for_map_1d(&map, m).unwrap();
            let op = build_ulam(&map, &grid, &null(), BuildMode::ExactBranch).unwrap();
            let spectral = power_iterate(&op, 1e-10, 1000).unwrap();
            assert!(spectral.converged);
            assert!(
                (spectral.lambda - f64::from(d)).abs() <= 1e-6,
                "d={d}: lambda {}",
                spectral.lambda
            );
            let uniform = 1.0 / m as f64;
            for vi in &spectral.vector {
                assert!((vi - uniform).abs() <= 1e-8, "d={d}");
            }
            assert!(spectral.residual <= 1e-8);
        }
    }

    #[test]
    fn zero_column_is_reported() {
        let grid = Grid::Circle { m: 2 };
        let op = UlamOperator {
            grid,
            potential_id: "test".into(),
            mode: BuildMode::ExactBranch,
            row_ptr: vec![0, 1, 2],
            col_idx: vec![0, 0],
            values: vec![1.0, 1.0],
        };
        match power_iterate(&op, 1e-6, 10) {
            Err(Error::ZeroColumn(1)) => {}
            other => panic!("expected zero-column error, got {other:?}"),
        }
    }

    #[test]
    fn monte_carlo_reproduces_exact_doubling_entries() {
        let map = MapSystem::circle_times_d(2).unwrap();
        let grid = Grid::for_map_1d(&map, 64).unwrap();
        let exact = build_ulam(&map, &grid, &null(), BuildMode::ExactBranch).unwrap();
        let mc = build_ulam(
            &map,
            &grid,
            &null(),
            BuildMode::MonteCarlo {
                seed: 9,
                samples_per_cell: 64,
            },
        )
        .unwrap();
        // Linear branches + stratified samples: the hit counts are exact.
        assert_eq!(exact.row_ptr, mc.row_ptr);
        assert_eq!(exact.col_idx, mc.col_idx);
        for (a, b) in exact.values.iter().zip(&mc.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn monte_carlo_is_seed_deterministic() {
        let map = MapSystem::quadratic(1.9).unwrap();
        let grid = Grid::for_map_1d(&map, 32).unwrap();
        let mode = BuildMode::MonteCarlo {
            seed: 1234,
            samples_per_cell: 25,
        };
        let a = build_ulam(&map, &grid, &null(), mode).unwrap();
        let b = build_ulam(&map, &grid, &null(), mode).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.col_idx, b.col_idx);
        let other = build_ulam(
            &map,
            &grid,
            &null(),
            BuildMode::MonteCarlo {
                seed: 4321,
                samples_per_cell: 25,
            },
        )
        .unwrap();
        assert_ne!(a.values, other.values);
    }

    #[test]
    fn exact_branch_refused_for_the_skew_product() {
        let map = MapSystem::viana(16, 1.8, 0.01).unwrap();
        let grid = Grid::for_map_2d(&map, 8, 8).unwrap();
        match build_ulam(&map, &grid, &null(), BuildMode::ExactBranch) {
            Err(Error::Unsupported(msg)) => assert!(msg.contains("MonteCarlo")),
            other => panic!("expected unsupported, got {other:?}"),
        }
    }

    #[test]
    fn refinement_keeps_eigenvalue_pinned() {
        for d in [2u32, 3] {
            let map = MapSystem::circle_times_d(d).unwrap();
            let mut prev_gap: Option<f64> = None;
            let mut lambdas = Vec::new();
            for exp in 8..=12 {
                let grid = Grid::for_map_1d(&map, 1usize << exp).unwrap();
                let op = build_ulam(&map, &grid, &null(), BuildMode::ExactBranch).unwrap();
                lambdas.push(power_iterate(&op, 1e-10, 1000).unwrap().lambda);
            }
            for pair in lambdas.windows(2) {
                let gap = (pair[1] - pair[0]).abs();
                if let Some(p) = prev_gap {
                    assert!(gap <= p + 1e-15);
                }
                prev_gap = Some(gap);
                assert!(gap <= 1e-12, "d={d}");
            }
        }
    }

    #[test]
    fn ulam_pressure_examples() {
        let map = MapSystem::circle_times_d(2).unwrap();
        let grid = Grid::for_map_1d(&map, 1 << 10).unwrap();
        let p0 = pressure_ulam(&map, &null(), &grid, BuildMode::ExactBranch, 1e-10).unwrap();
        assert!((p0.value - std::f64::consts::LN_2).abs() < 1e-6);
        assert!((p0.recompute_value() - p0.value).abs() < 1e-15);
        let c = -0.25;
        let pc = pressure_ulam(
            &map,
            &Potential::Constant(c),
            &grid,
            BuildMode::ExactBranch,
            1e-10,
        )
        .unwrap();
        assert!((pc.value - (std::f64::consts::LN_2 + c)).abs() < 1e-6);
    }

    #[test]
    fn spectral_and_separated_pressures_agree() {
        let map = MapSystem::circle_times_d(2).unwrap();
        let phi = Potential::Analytic(Analytic::CosTheta { t: 0.1 });
        let grid = Grid::for_map_1d(&map, 1 << 10).unwrap();
        let spectral = pressure_ulam(&map, &phi, &grid, BuildMode::ExactBranch, 1e-10).unwrap();
        let separated = pressure_separated(&map, &phi, &[0, 1], &[1e-3], 1 << 16).unwrap();
        let rel = (spectral.value - separated.value).abs() / separated.value.abs();
        assert!(
            rel < 0.02,
            "spectral {} vs separated {}",
            spectral.value,
            separated.value
        );
    }

    #[test]
    fn mme_density_is_uniform_for_circle_maps() {
        for (d, m) in [(2u32, 256usize), (3, 243)] {
            let map = MapSystem::circle_times_d(d).unwrap();
            let grid = Grid::for_map_1d(&map, m).unwrap();
            let table = mme_density(&map, &grid, 1e-10).unwrap();
            assert!((table.total_mass() - 1.0).abs() <= 1e-12);
            for dens in table.density() {
                assert!((dens - 1.0).abs() <= 1e-8, "d={d}");
            }
            assert!((table.lambda() - f64::from(d)).abs() <= 1e-6);
        }
    }

    #[test]
    fn skew_product_density_normalizes_and_repeats() {
        let map = MapSystem::viana(16, 1.8, 0.01).unwrap();
        let grid = Grid::for_map_2d(&map, 64, 64).unwrap();
        let a = mme_density(&map, &grid, 1e-9).unwrap();
        assert!((a.total_mass() - 1.0).abs() <= 1e-12);
        assert!(a.lambda() > 1.0);
        assert!(a.density().iter().all(|d| *d >= 0.0));
        let b = mme_density(&map, &grid, 1e-9).unwrap();
        assert_eq!(a.density(), b.density());
        assert_eq!(a.lambda(), b.lambda());
    }

    #[test]
    fn triplet_export_layout() {
        let map = MapSystem::circle_times_d(2).unwrap();
        let grid = Grid::for_map_1d(&map, 4).unwrap();
        let op = build_ulam(&map, &grid, &null(), BuildMode::ExactBranch).unwrap();
        let mut buf = Vec::new();
        op.write_triplets(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# rows=4 cols=4 nnz=8 grid=circle_m=4"));
        assert_eq!(lines[1], "0 0 1");
        assert_eq!(lines.len(), 9);
    }

    #[test]
    fn density_exports() {
        let map = MapSystem::circle_times_d(2).unwrap();
        let grid = Grid::for_map_1d(&map, 8).unwrap();
        let table = mme_density(&map, &grid, 1e-10).unwrap();
        let mut csv = Vec::new();
        table.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("cell_index,center,density\n0,0.0625,1\n"));
        assert!(text.contains("total_mass=1"));
        let mut svg = Vec::new();
        table.write_svg(&mut svg, None).unwrap();
        let svg_text = String::from_utf8(svg).unwrap();
        assert!(svg_text.starts_with("<svg"));
        assert!(svg_text.contains("<polyline"));
        assert!(!svg_text.contains("<!--"));
        let mut svg2 = Vec::new();
        table.write_svg(&mut svg2, Some("generated 2026-08-23")).unwrap();
        assert!(String::from_utf8(svg2).unwrap().contains("<!-- generated 2026-08-23 -->"));
    }
}
