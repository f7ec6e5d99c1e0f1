//! `ergolab`: command-line driver for the thermodynamic-formalism toolkit.
//!
//! Every subcommand reads a line-oriented config file, runs one library
//! operation, writes its outputs plus a `manifest.txt` with per-file
//! checksums into the output directory, and prints a one-line summary.
//! Exit codes: 0 on success, 1 when a computation or verification fails,
//! 2 for configuration and usage mistakes. Output directory precedence:
//! the `ERGOLAB_OUT` environment variable, then `--out`, then the config's
//! `[output] dir`, then `./ergolab_out`.

mod config;
mod ops;
mod out;
mod suite;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "ergolab",
    version,
    about = "Numerical experiments on non-uniformly expanding maps: orbits, hyperbolic times, pressure estimators, transfer operators"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Experiment config file (line-oriented `key = value` sections).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config; ERGOLAB_OUT overrides both).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed (overrides the config's `[run] seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Size of the worker thread pool (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Suppress wall-clock timestamps so reruns are byte-identical.
    #[arg(long)]
    reproducible: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Iterate a map and write the orbit as CSV.
    Orbit(Common),
    /// Detect hyperbolic times along one orbit; CSV plus a frequency plot.
    Hyptimes(Common),
    /// Label random seeds by hyperbolic-time frequency at a horizon.
    Classify(Common),
    /// Check the uniform Birkhoff-sum bound of a potential over random orbits.
    VerifyPotential(Common),
    /// Birkhoff sums of a potential along one orbit.
    Birkhoff(Common),
    /// Separated-set pressure estimate on a map.
    PressureSep(Common),
    /// Cylinder-cover pressure on a full shift by bisection.
    PressureShift(Common),
    /// Build an Ulam transfer operator and report its spectral pressure.
    Ulam(Common),
    /// Maximal-entropy density from the unweighted transfer operator.
    Mme(Common),
    /// Run the pinned acceptance suite; one pass/fail line per criterion.
    Acceptance(Common),
}

impl Cmd {
    fn split(self) -> (&'static str, Common) {
        match self {
            Cmd::Orbit(c) => ("orbit", c),
            Cmd::Hyptimes(c) => ("hyptimes", c),
            Cmd::Classify(c) => ("classify", c),
            Cmd::VerifyPotential(c) => ("verify-potential", c),
            Cmd::Birkhoff(c) => ("birkhoff", c),
            Cmd::PressureSep(c) => ("pressure-sep", c),
            Cmd::PressureShift(c) => ("pressure-shift", c),
            Cmd::Ulam(c) => ("ulam", c),
            Cmd::Mme(c) => ("mme", c),
            Cmd::Acceptance(c) => ("acceptance", c),
        }
    }
}

const EXIT_COMPUTE: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (operation, common) = cli.command.split();

    if let Some(threads) = common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("usage error: cannot configure {threads} threads: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }

    let config_text = match &common.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => Some(text),
            Err(e) => {
                eprintln!("usage error: cannot read config {}: {e}", path.display());
                return ExitCode::from(EXIT_USAGE);
            }
        },
        None => None,
    };

    let cfg = match config::load(operation, config_text.as_deref(), common.seed) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("usage error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };

    let out_dir = std::env::var_os("ERGOLAB_OUT")
        .map(PathBuf::from)
        .or_else(|| common.out.clone())
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("ergolab_out"));

    if operation == "acceptance" {
        return run_acceptance(cfg, &out_dir, common.reproducible);
    }

    let hash = cfg.hash;
    let canonical = cfg.canonical.clone();
    let plan = match ops::plan(cfg) {
        Ok(plan) => plan,
        Err(e) => {
            eprintln!("usage error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };

    let started = Instant::now();
    let mut output = match ops::run(plan, hash, common.reproducible) {
        Ok(output) => output,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_COMPUTE);
        }
    };
    let wall_ms = started.elapsed().as_millis();

    out::append_hash_footer(&mut output.files, hash);
    // The canonical parameter text is itself an output: together with the
    // hash it lets any result file be traced to its exact configuration.
    output
        .files
        .push(("config_canonical.txt".to_string(), canonical.into_bytes()));
    let checksums = match out::write_outputs(&out_dir, &output.files) {
        Ok(sums) => sums,
        Err(e) => {
            eprintln!("error: cannot write outputs to {}: {e}", out_dir.display());
            return ExitCode::from(EXIT_COMPUTE);
        }
    };
    let wall = if common.reproducible { None } else { Some(wall_ms) };
    if let Err(e) = out::write_manifest(&out_dir, operation, hash, wall, &checksums, &[]) {
        eprintln!("error: cannot write manifest: {e}");
        return ExitCode::from(EXIT_COMPUTE);
    }

    println!("{}", output.headline);
    println!(
        "wrote {} file(s) + manifest.txt to {} (config_hash {hash:016x})",
        output.files.len(),
        out_dir.display()
    );
    if output.verdict_failed {
        ExitCode::from(EXIT_COMPUTE)
    } else {
        ExitCode::SUCCESS
    }
}

/// Run the ten pinned criteria, write their evidence files and a manifest
/// recording each verdict, and print one line per criterion.
fn run_acceptance(
    cfg: config::ExperimentConfig,
    out_dir: &PathBuf,
    reproducible: bool,
) -> ExitCode {
    if !cfg.run.is_empty() {
        eprintln!("usage error: the acceptance suite takes no [run] keys except `seed`");
        return ExitCode::from(EXIT_USAGE);
    }
    let started = Instant::now();
    let criteria = suite::run_suite(cfg.master_seed);
    let wall_ms = started.elapsed().as_millis();

    let mut files = Vec::new();
    let mut extra = Vec::new();
    let mut all_passed = true;
    for criterion in &criteria {
        println!("{}", criterion.line());
        all_passed &= criterion.passed;
        extra.push((
            format!("criterion.{:02}", criterion.index),
            if criterion.passed { "pass" } else { "FAIL" }.to_string(),
        ));
        files.extend(criterion.files.iter().cloned());
    }
    extra.push((
        "criteria_passed".to_string(),
        format!(
            "{}/{}",
            criteria.iter().filter(|c| c.passed).count(),
            criteria.len()
        ),
    ));

    out::append_hash_footer(&mut files, cfg.hash);
    files.push((
        "config_canonical.txt".to_string(),
        cfg.canonical.clone().into_bytes(),
    ));
    let checksums = match out::write_outputs(out_dir, &files) {
        Ok(sums) => sums,
        Err(e) => {
            eprintln!("error: cannot write outputs to {}: {e}", out_dir.display());
            return ExitCode::from(EXIT_COMPUTE);
        }
    };
    let wall = if reproducible { None } else { Some(wall_ms) };
    if let Err(e) = out::write_manifest(out_dir, "acceptance", cfg.hash, wall, &checksums, &extra)
    {
        eprintln!("error: cannot write manifest: {e}");
        return ExitCode::from(EXIT_COMPUTE);
    }

    println!(
        "acceptance: {} of {} criteria passed (seed {}, {} evidence files in {})",
        criteria.iter().filter(|c| c.passed).count(),
        criteria.len(),
        cfg.master_seed,
        files.len(),
        out_dir.display()
    );
    if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_COMPUTE)
    }
}
