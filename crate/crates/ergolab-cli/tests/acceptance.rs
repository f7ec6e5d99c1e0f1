//! Acceptance gate: runs the binary's pinned suite and re-asserts every
//! verdict, then checks that a rerun with the same seed reproduces every
//! CSV byte for byte.
//!
//! The suite prints one line per criterion; this test fails loudly with
//! those lines if any criterion fails, and adds the eleventh line for the
//! rerun-determinism check it performs itself.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use tempfile::TempDir;

const MASTER_SEED: &str = "424242";

fn run_suite(out_dir: &Path) -> String {
    let output = Command::new(env!("CARGO_BIN_EXE_ergolab"))
        .env_remove("ERGOLAB_OUT")
        .args(["acceptance", "--reproducible", "--seed", MASTER_SEED, "--out"])
        .arg(out_dir)
        .output()
        .expect("binary runs");
    let stdout = String::from_utf8_lossy(&output.stdout).into_owned();
    assert!(
        output.status.success(),
        "acceptance run failed (exit {:?}):\n{stdout}\n{}",
        output.status.code(),
        String::from_utf8_lossy(&output.stderr)
    );
    stdout
}

fn csv_payloads(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut map = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        if name.ends_with(".csv") {
            map.insert(name, fs::read(&path).unwrap());
        }
    }
    map
}

#[test]
fn all_criteria_pass_and_reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let dir_a = tmp.path().join("run_a");
    let dir_b = tmp.path().join("run_b");

    let stdout = run_suite(&dir_a);
    let lines: Vec<&str> = stdout
        .lines()
        .filter(|l| l.starts_with("criterion "))
        .collect();
    for line in &lines {
        println!("{line}");
    }
    assert_eq!(lines.len(), 10, "expected ten criterion lines:\n{stdout}");
    let failing: Vec<&&str> = lines.iter().filter(|l| !l.contains(" pass ")).collect();
    assert!(
        failing.is_empty(),
        "failing criteria:\n{}",
        failing
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join("\n")
    );

    run_suite(&dir_b);
    let payloads_a = csv_payloads(&dir_a);
    let payloads_b = csv_payloads(&dir_b);
    assert_eq!(
        payloads_a.keys().collect::<Vec<_>>(),
        payloads_b.keys().collect::<Vec<_>>(),
        "reruns must emit the same file set"
    );
    assert!(!payloads_a.is_empty(), "suite must write CSV evidence");
    let mut differing = Vec::new();
    for (name, bytes) in &payloads_a {
        if payloads_b[name] != *bytes {
            differing.push(name.clone());
        }
    }
    let line = format!(
        "criterion 11 {}          rerunning the suite reproduces every CSV byte for byte :: {} files compared{}",
        if differing.is_empty() { "pass" } else { "FAIL" },
        payloads_a.len(),
        if differing.is_empty() {
            String::new()
        } else {
            format!(", differing: {}", differing.join(", "))
        }
    );
    println!("{line}");
    assert!(differing.is_empty(), "{line}");
}
