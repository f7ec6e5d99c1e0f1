//! Subcommand planning and execution.
//!
//! Planning turns a resolved configuration into a fully typed operation,
//! consuming every `[run]` key it understands and rejecting leftovers;
//! parameter mistakes surface before any computation starts (exit code 2).
//! Execution then calls into the library and renders the outputs in
//! memory; its errors are computation failures (exit code 1).

use crate::config::{start_point, ExperimentConfig, UsageError};
use crate::out::{svg_comment, OutFile};
use ergolab::dynamics::{MapSystem, PhasePoint};
use ergolab::hyperbolic::{classify, detect_pliss, sample_points};
use ergolab::potentials::{verify_bounded, Potential};
use ergolab::pressure::{
    pressure_separated, relative_pressure_shift, LambdaSpec, PressureEstimate, TableRow,
};
use ergolab::transfer::{mme_density, pressure_ulam, BuildMode, Grid};
use ergolab::Error;

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

/// Grid request; resolved against the map when the operation runs.
#[derive(Debug, Clone, Copy)]
pub enum GridSpec {
    OneD { m: usize },
    TwoD { m_theta: usize, m_x: usize },
}

/// A validated operation with every parameter bound.
pub enum Plan {
    Orbit {
        map: MapSystem,
        start: PhasePoint,
        n: usize,
    },
    HypTimes {
        map: MapSystem,
        start: PhasePoint,
        n: usize,
        sigma: f64,
    },
    Classify {
        map: MapSystem,
        seeds: usize,
        sigma: f64,
        horizon: usize,
        threshold: f64,
        master_seed: u64,
    },
    VerifyPotential {
        map: MapSystem,
        phi: Potential,
        seeds: usize,
        horizon: usize,
        master_seed: u64,
    },
    Birkhoff {
        map: MapSystem,
        phi: Potential,
        start: PhasePoint,
        n: usize,
    },
    PressureSep {
        map: MapSystem,
        phi: Potential,
        n_list: Vec<usize>,
        eps_list: Vec<f64>,
        resolution: usize,
    },
    PressureShift {
        k: u32,
        phi: Potential,
        lambda: LambdaSpec,
        n_floor: usize,
        n_max: usize,
        gamma_tol: f64,
    },
    Ulam {
        map: MapSystem,
        phi: Potential,
        grid: GridSpec,
        mode: BuildMode,
        tol: f64,
    },
    Mme {
        map: MapSystem,
        grid: GridSpec,
        tol: f64,
    },
}

fn require_map(cfg: &ExperimentConfig) -> Result<MapSystem, UsageError> {
    cfg.map.clone().ok_or_else(|| {
        usage(format!(
            "operation `{}` needs a [map] section in the config",
            cfg.operation
        ))
    })
}

fn require_potential(cfg: &ExperimentConfig) -> Result<Potential, UsageError> {
    cfg.potential.clone().ok_or_else(|| {
        usage(format!(
            "operation `{}` needs a [potential] section in the config",
            cfg.operation
        ))
    })
}

fn potential_or_zero(cfg: &ExperimentConfig) -> Potential {
    cfg.potential.clone().unwrap_or(Potential::Constant(0.0))
}

fn grid_spec(cfg: &mut ExperimentConfig, map: &MapSystem) -> Result<GridSpec, UsageError> {
    if matches!(map, MapSystem::Viana(_)) {
        Ok(GridSpec::TwoD {
            m_theta: cfg.run.require_parsed::<usize>("m_theta")?,
            m_x: cfg.run.require_parsed::<usize>("m_x")?,
        })
    } else {
        Ok(GridSpec::OneD {
            m: cfg.run.require_parsed::<usize>("m")?,
        })
    }
}

fn resolve_grid(map: &MapSystem, request: GridSpec) -> ergolab::Result<Grid> {
    match request {
        GridSpec::OneD { m } => Grid::for_map_1d(map, m),
        GridSpec::TwoD { m_theta, m_x } => Grid::for_map_2d(map, m_theta, m_x),
    }
}

/// Consume the `[run]` keys for `cfg.operation` and produce a typed plan.
pub fn plan(mut cfg: ExperimentConfig) -> Result<Plan, UsageError> {
    let op = cfg.operation.clone();
    let plan = match op.as_str() {
        "orbit" => {
            let map = require_map(&cfg)?;
            let start = start_point(&mut cfg.run, &map)?;
            let n = cfg.run.require_parsed::<usize>("n")?;
            Plan::Orbit { map, start, n }
        }
        "hyptimes" => {
            let map = require_map(&cfg)?;
            let start = start_point(&mut cfg.run, &map)?;
            Plan::HypTimes {
                map,
                start,
                n: cfg.run.require_parsed::<usize>("n")?,
                sigma: cfg.run.require_parsed::<f64>("sigma")?,
            }
        }
        "classify" => Plan::Classify {
            map: require_map(&cfg)?,
            seeds: cfg.run.require_parsed::<usize>("seeds")?,
            sigma: cfg.run.require_parsed::<f64>("sigma")?,
            horizon: cfg.run.require_parsed::<usize>("horizon")?,
            threshold: cfg.run.require_parsed::<f64>("threshold")?,
            master_seed: cfg.master_seed,
        },
        "verify-potential" => Plan::VerifyPotential {
            map: require_map(&cfg)?,
            phi: require_potential(&cfg)?,
            seeds: cfg.run.require_parsed::<usize>("seeds")?,
            horizon: cfg.run.require_parsed::<usize>("horizon")?,
            master_seed: cfg.master_seed,
        },
        "birkhoff" => {
            let map = require_map(&cfg)?;
            let start = start_point(&mut cfg.run, &map)?;
            Plan::Birkhoff {
                map,
                phi: require_potential(&cfg)?,
                start,
                n: cfg.run.require_parsed::<usize>("n")?,
            }
        }
        "pressure-sep" => Plan::PressureSep {
            map: require_map(&cfg)?,
            phi: potential_or_zero(&cfg),
            n_list: cfg.run.require_list::<usize>("n_list")?,
            eps_list: cfg.run.require_list::<f64>("eps_list")?,
            resolution: cfg.run.require_parsed::<usize>("resolution")?,
        },
        "pressure-shift" => {
            let map = require_map(&cfg)?;
            let MapSystem::FullShift { k } = map else {
                return Err(usage("operation `pressure-shift` needs a full_shift [map]"));
            };
            let lambda = match cfg.run.take("sub_alphabet") {
                Some(s) => LambdaSpec::SubAlphabet(crate::config::digits_of(&s)?),
                None => LambdaSpec::WholeSpace,
            };
            Plan::PressureShift {
                k,
                phi: potential_or_zero(&cfg),
                lambda,
                n_floor: cfg.run.take_parsed::<usize>("n_floor")?.unwrap_or(1),
                n_max: cfg.run.take_parsed::<usize>("n_max")?.unwrap_or(20),
                gamma_tol: cfg.run.take_parsed::<f64>("gamma_tol")?.unwrap_or(1e-7),
            }
        }
        "ulam" => {
            let map = require_map(&cfg)?;
            let grid = grid_spec(&mut cfg, &map)?;
            let mode = match cfg.run.take("mode").as_deref() {
                None | Some("exact") => BuildMode::ExactBranch,
                Some("monte_carlo") => BuildMode::MonteCarlo {
                    seed: cfg.master_seed,
                    samples_per_cell: cfg.run.require_parsed::<usize>("samples")?,
                },
                Some(other) => {
                    return Err(usage(format!(
                        "unknown ulam mode `{other}`; expected exact or monte_carlo"
                    )))
                }
            };
            Plan::Ulam {
                phi: potential_or_zero(&cfg),
                map,
                grid,
                mode,
                tol: cfg.run.take_parsed::<f64>("tol")?.unwrap_or(1e-10),
            }
        }
        "mme" => {
            let map = require_map(&cfg)?;
            let grid = grid_spec(&mut cfg, &map)?;
            Plan::Mme {
                map,
                grid,
                tol: cfg.run.take_parsed::<f64>("tol")?.unwrap_or(1e-10),
            }
        }
        other => return Err(usage(format!("operation `{other}` has no planner"))),
    };
    cfg.run.finish(&format!("operation `{op}`"))?;
    Ok(plan)
}

/// Execution result: a one-line human summary, the output files, and
/// whether a verification-style operation reached a negative verdict
/// (completed, but the property failed).
pub struct OpOutput {
    pub headline: String,
    pub files: Vec<OutFile>,
    pub verdict_failed: bool,
}

impl OpOutput {
    fn ok(headline: String, files: Vec<OutFile>) -> OpOutput {
        OpOutput {
            headline,
            files,
            verdict_failed: false,
        }
    }
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> ergolab::Result<Vec<u8>> {
    let mut buf = Vec::new();
    write(&mut buf).map_err(|e| Error::Construction(format!("render csv: {e}")))?;
    Ok(buf)
}

fn estimate_file(name: &str, est: &PressureEstimate) -> ergolab::Result<OutFile> {
    Ok((name.to_string(), csv_bytes(|w| est.write_csv(w))?))
}

/// Run a planned operation and render its outputs.
pub fn run(plan: Plan, hash: u64, reproducible: bool) -> ergolab::Result<OpOutput> {
    match plan {
        Plan::Orbit { map, start, n } => {
            let orbit = map.orbit(&start, n)?;
            let csv = csv_bytes(|w| orbit.write_csv(w))?;
            Ok(OpOutput::ok(
                format!("orbit: {} steps on {}", orbit.steps(), map.describe()),
                vec![("orbit.csv".to_string(), csv)],
            ))
        }
        Plan::HypTimes {
            map,
            start,
            n,
            sigma,
        } => {
            let orbit = map.orbit(&start, n)?;
            let record = detect_pliss(&orbit, sigma)?;
            let csv = csv_bytes(|w| record.write_csv(w))?;
            let freq_points: Vec<(f64, f64)> = (1..=record.steps())
                .map(|i| {
                    (
                        i as f64,
                        record.frequency(i).expect("i is within the horizon"),
                    )
                })
                .collect();
            let svg = crate::out::svg_polyline(
                &freq_points,
                "hyperbolic time frequency",
                &svg_comment(hash, reproducible),
            );
            let freq = record.frequency(n.max(1)).unwrap_or(0.0);
            let truncated = match record.truncated_at() {
                Some(i) => format!("; truncated at step {i}"),
                None => String::new(),
            };
            Ok(OpOutput::ok(
                format!(
                    "{} hyperbolic times up to n={n} at sigma={sigma} (frequency {freq:.4}{truncated})",
                    record.times().len()
                ),
                vec![
                    ("hyptimes.csv".to_string(), csv),
                    ("hyptimes_freq.svg".to_string(), svg),
                ],
            ))
        }
        Plan::Classify {
            map,
            seeds,
            sigma,
            horizon,
            threshold,
            master_seed,
        } => {
            let points = sample_points(&map, seeds, master_seed)?;
            let cls = classify(&map, &points, sigma, horizon, threshold)?;
            let csv = csv_bytes(|w| cls.write_csv(w))?;
            Ok(OpOutput::ok(
                format!(
                    "classified {seeds} seeds on {}: fraction_H={:.4} ({} excluded)",
                    map.describe(),
                    cls.fraction_h(),
                    cls.excluded
                ),
                vec![("classify.csv".to_string(), csv)],
            ))
        }
        Plan::VerifyPotential {
            map,
            phi,
            seeds,
            horizon,
            master_seed,
        } => {
            let rep = verify_bounded(&phi, &map, seeds, horizon, master_seed)?;
            let csv = csv_bytes(|w| rep.write_csv(w))?;
            let bound = match rep.bound {
                Some(b) => format!(" (bound {b})"),
                None => " (no uniform bound claimed)".to_string(),
            };
            let verdict = if rep.passed { "PASS" } else { "FAIL" };
            Ok(OpOutput {
                headline: format!(
                    "{verdict}: max |S_n| = {:.10} over {seeds} seeds, horizon {horizon}{bound}",
                    rep.global_max
                ),
                files: vec![("birkhoff_report.csv".to_string(), csv)],
                verdict_failed: !rep.passed,
            })
        }
        Plan::Birkhoff { map, phi, start, n } => {
            let orbit = map.orbit(&start, n)?;
            // Row i holds S_i, the sum of the first i values, so the final
            // row reports the n-step Birkhoff sum.
            let mut csv = String::from("n,phi_at_n,S_n\n");
            let mut sum = 0.0f64;
            for i in 0..=orbit.steps() {
                let value = phi.evaluate(orbit.point(i))?;
                csv.push_str(&format!("{i},{value},{sum}\n"));
                sum += value;
            }
            let last = sum - phi.evaluate(orbit.point(orbit.steps()))?;
            Ok(OpOutput::ok(
                format!(
                    "S_{}({}) = {last:.10} along the orbit of {}",
                    orbit.steps(),
                    phi.describe(),
                    map.describe()
                ),
                vec![("birkhoff.csv".to_string(), csv.into_bytes())],
            ))
        }
        Plan::PressureSep {
            map,
            phi,
            n_list,
            eps_list,
            resolution,
        } => {
            let est = pressure_separated(&map, &phi, &n_list, &eps_list, resolution)?;
            Ok(OpOutput::ok(
                format!("separated-set pressure = {:.8} ({})", est.value, est.note),
                vec![estimate_file("pressure_sep.csv", &est)?],
            ))
        }
        Plan::PressureShift {
            k,
            phi,
            lambda,
            n_floor,
            n_max,
            gamma_tol,
        } => {
            let est = relative_pressure_shift(k, &phi, &lambda, n_floor, n_max, gamma_tol)?;
            Ok(OpOutput::ok(
                format!(
                    "gamma_star = {:.8} on {} (k={k}, depth {n_max})",
                    est.value,
                    lambda.describe()
                ),
                vec![estimate_file("pressure_shift.csv", &est)?],
            ))
        }
        Plan::Ulam {
            map,
            phi,
            grid,
            mode,
            tol,
        } => {
            let grid = resolve_grid(&map, grid)?;
            let est = pressure_ulam(&map, &phi, &grid, mode, tol)?;
            let lambda = est
                .table
                .iter()
                .find_map(|row| match row {
                    TableRow::Ulam { lambda, .. } => Some(*lambda),
                    _ => None,
                })
                .unwrap_or(f64::NAN);
            Ok(OpOutput::ok(
                format!(
                    "spectral pressure = {:.8} (lambda = {lambda:.8}) on {}",
                    est.value,
                    map.describe()
                ),
                vec![estimate_file("ulam.csv", &est)?],
            ))
        }
        Plan::Mme { map, grid, tol } => {
            let grid = resolve_grid(&map, grid)?;
            let table = mme_density(&map, &grid, tol)?;
            let csv = csv_bytes(|w| table.write_csv(w))?;
            let svg = csv_bytes(|w| table.write_svg(w, Some(&svg_comment(hash, reproducible))))?;
            Ok(OpOutput::ok(
                format!(
                    "maximal-entropy density on {}: lambda = {:.8}, residual {:.2e}, mass {:.10}",
                    map.describe(),
                    table.lambda(),
                    table.residual(),
                    table.total_mass()
                ),
                vec![
                    ("mme_density.csv".to_string(), csv),
                    ("mme_density.svg".to_string(), svg),
                ],
            ))
        }
    }
}
