//! End-to-end tests of the `ergolab` binary: config handling, exit codes,
//! output files, and byte-level determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;

fn ergolab() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ergolab"));
    // Keep the ambient environment from redirecting test outputs.
    cmd.env_remove("ERGOLAB_OUT");
    cmd
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("exp.conf");
    fs::write(&path, text).unwrap();
    path
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

const ORBIT_CONF: &str = "[map]\nkind = circle_times_d\nd = 2\n\n[run]\nn = 3\ntheta0 = 0.1\n";

#[test]
fn orbit_doubles_the_angle() {
    let tmp = TempDir::new().unwrap();
    let conf = write_config(tmp.path(), ORBIT_CONF);
    let out_dir = tmp.path().join("out");
    let output = run(ergolab()
        .args(["orbit", "--config"])
        .arg(&conf)
        .arg("--out")
        .arg(&out_dir));
    assert!(output.status.success(), "{}", stderr_of(&output));

    let csv = fs::read_to_string(out_dir.join("orbit.csv")).unwrap();
    let thetas: Vec<&str> = csv
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(thetas, ["0.1", "0.2", "0.4", "0.8"]);
    assert!(csv.lines().last().unwrap().starts_with("# config_hash="));

    let manifest = fs::read_to_string(out_dir.join("manifest.txt")).unwrap();
    assert!(manifest.contains("operation = orbit"));
    assert!(manifest.contains("file = orbit.csv fnv1a64="));
    assert!(out_dir.join("config_canonical.txt").exists());
}

#[test]
fn unknown_key_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let conf = write_config(
        tmp.path(),
        "[map]\nkind = circle_times_d\nd = 2\nsigm = 0.5\n",
    );
    let output = run(ergolab().args(["orbit", "--config"]).arg(&conf));
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("unknown key `sigm`"));
}

#[test]
fn degree_one_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let conf = write_config(
        tmp.path(),
        "[map]\nkind = circle_times_d\nd = 1\n[run]\nn = 3\ntheta0 = 0.1\n",
    );
    let output = run(ergolab().args(["orbit", "--config"]).arg(&conf));
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("degree must be >= 2"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let output = run(ergolab().arg("frobnicate"));
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn missing_map_section_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let conf = write_config(tmp.path(), "[run]\nn = 3\ntheta0 = 0.1\n");
    let output = run(ergolab().args(["orbit", "--config"]).arg(&conf));
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("[map]"));
}

#[test]
fn operation_mismatch_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let conf = write_config(
        tmp.path(),
        "[map]\nkind = circle_times_d\nd = 2\n[run]\noperation = ulam\nm = 64\n",
    );
    let output = run(ergolab().args(["orbit", "--config"]).arg(&conf));
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("config names operation"));
}

#[test]
fn computation_failure_exits_one_and_leaves_no_outputs() {
    let tmp = TempDir::new().unwrap();
    // A one-dimensional grid cannot be built over a shift space.
    let conf = write_config(tmp.path(), "[map]\nkind = full_shift\nk = 2\n[run]\nm = 64\n");
    let out_dir = tmp.path().join("out");
    let output = run(ergolab()
        .args(["ulam", "--config"])
        .arg(&conf)
        .arg("--out")
        .arg(&out_dir));
    assert_eq!(output.status.code(), Some(1));
    assert!(!out_dir.exists(), "failed run must not leave outputs");
}

#[test]
fn env_var_overrides_the_out_flag() {
    let tmp = TempDir::new().unwrap();
    let conf = write_config(tmp.path(), ORBIT_CONF);
    let flag_dir = tmp.path().join("flag");
    let env_dir = tmp.path().join("env");
    let output = run(Command::new(env!("CARGO_BIN_EXE_ergolab"))
        .env("ERGOLAB_OUT", &env_dir)
        .args(["orbit", "--config"])
        .arg(&conf)
        .arg("--out")
        .arg(&flag_dir));
    assert!(output.status.success(), "{}", stderr_of(&output));
    assert!(env_dir.join("orbit.csv").exists());
    assert!(!flag_dir.exists());
}

#[test]
fn pressure_shift_restricted_to_two_symbols_gives_log_two() {
    let tmp = TempDir::new().unwrap();
    let conf = write_config(
        tmp.path(),
        "[map]\nkind = full_shift\nk = 3\n[run]\nsub_alphabet = 01\nn_max = 24\n",
    );
    let out_dir = tmp.path().join("out");
    let output = run(ergolab()
        .args(["pressure-shift", "--config"])
        .arg(&conf)
        .arg("--out")
        .arg(&out_dir));
    assert!(output.status.success(), "{}", stderr_of(&output));
    assert!(
        stdout_of(&output).contains("gamma_star = 0.693147"),
        "stdout: {}",
        stdout_of(&output)
    );
}

#[test]
fn verify_potential_reports_pass_for_a_bump_pair() {
    let tmp = TempDir::new().unwrap();
    let conf = write_config(
        tmp.path(),
        "[map]\nkind = circle_times_d\nd = 2\n\n[potential]\nkind = bump_pair\nheight = 1\nlo = 0.3\nhi = 0.4\n\n[run]\nseeds = 20\nhorizon = 2000\n",
    );
    let out_dir = tmp.path().join("out");
    let output = run(ergolab()
        .args(["verify-potential", "--config"])
        .arg(&conf)
        .arg("--out")
        .arg(&out_dir));
    assert!(output.status.success(), "{}", stderr_of(&output));
    assert!(stdout_of(&output).starts_with("PASS"));
    assert!(out_dir.join("birkhoff_report.csv").exists());
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let conf = write_config(
        tmp.path(),
        "[map]\nkind = circle_times_d\nd = 2\n[run]\nn_list = 0,1\neps_list = 0.01\nresolution = 1024\n",
    );
    let mut payloads = Vec::new();
    for tag in ["a", "b"] {
        let out_dir = tmp.path().join(tag);
        let output = run(ergolab()
            .args(["pressure-sep", "--seed", "5", "--config"])
            .arg(&conf)
            .arg("--out")
            .arg(&out_dir));
        assert!(output.status.success(), "{}", stderr_of(&output));
        payloads.push(fs::read(out_dir.join("pressure_sep.csv")).unwrap());
    }
    assert_eq!(payloads[0], payloads[1]);
}

#[test]
fn reproducible_svg_output_is_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let conf = write_config(tmp.path(), "[map]\nkind = circle_times_d\nd = 2\n[run]\nm = 256\n");
    let mut payloads = Vec::new();
    for tag in ["a", "b"] {
        let out_dir = tmp.path().join(tag);
        let output = run(ergolab()
            .args(["mme", "--reproducible", "--config"])
            .arg(&conf)
            .arg("--out")
            .arg(&out_dir));
        assert!(output.status.success(), "{}", stderr_of(&output));
        payloads.push(fs::read(out_dir.join("mme_density.svg")).unwrap());
    }
    assert_eq!(payloads[0], payloads[1]);
    assert!(!String::from_utf8_lossy(&payloads[0]).contains("generated_unix"));
}

#[test]
fn seed_enters_the_config_hash() {
    let tmp = TempDir::new().unwrap();
    let conf = write_config(tmp.path(), ORBIT_CONF);
    let mut hashes = Vec::new();
    for seed in ["1", "2"] {
        let out_dir = tmp.path().join(seed);
        let output = run(ergolab()
            .args(["orbit", "--seed", seed, "--config"])
            .arg(&conf)
            .arg("--out")
            .arg(&out_dir));
        assert!(output.status.success(), "{}", stderr_of(&output));
        let manifest = fs::read_to_string(out_dir.join("manifest.txt")).unwrap();
        let hash_line = manifest
            .lines()
            .find(|l| l.starts_with("config_hash"))
            .unwrap()
            .to_string();
        hashes.push(hash_line);
    }
    assert_ne!(hashes[0], hashes[1]);
}

#[test]
fn hyptimes_writes_a_frequency_plot() {
    let tmp = TempDir::new().unwrap();
    let conf = write_config(
        tmp.path(),
        "[map]\nkind = quadratic\na0 = 2\n[run]\nn = 20\nx0 = 2\nsigma = 0.5\n",
    );
    let out_dir = tmp.path().join("out");
    let output = run(ergolab()
        .args(["hyptimes", "--threads", "2", "--config"])
        .arg(&conf)
        .arg("--out")
        .arg(&out_dir));
    assert!(output.status.success(), "{}", stderr_of(&output));
    let svg = fs::read_to_string(out_dir.join("hyptimes_freq.svg")).unwrap();
    assert!(svg.contains("polyline"));
    let csv = fs::read_to_string(out_dir.join("hyptimes.csv")).unwrap();
    assert!(csv.starts_with("n_hyperbolic\n1\n2\n"), "csv: {csv}");
}
