//! Output directory handling: file writing with checksums, the run
//! manifest, and a small SVG line-plot helper.
//!
//! Every run writes its files first and the manifest last, so a manifest
//! on disk certifies a complete run. If any write fails, the files already
//! written by the same run are removed: consumers never see a partial
//! output set.

use ergolab::numeric::fnv1a64;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// A named output file held in memory until the run succeeds.
pub type OutFile = (String, Vec<u8>);

/// Append a `# config_hash=` comment line to every CSV payload. SVG files
/// carry the hash in their embedded comment instead.
pub fn append_hash_footer(files: &mut [OutFile], hash: u64) {
    for (name, bytes) in files.iter_mut() {
        if name.ends_with(".csv") {
            bytes.extend_from_slice(format!("# config_hash={hash:016x}\n").as_bytes());
        }
    }
}

/// The comment embedded in SVG outputs: always the config hash, plus a
/// wall-clock timestamp unless reproducible output was requested.
pub fn svg_comment(hash: u64, reproducible: bool) -> String {
    if reproducible {
        format!("config_hash={hash:016x}")
    } else {
        let unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        format!("config_hash={hash:016x} generated_unix={unix}")
    }
}

/// Write all files into `dir`, returning `(name, checksum)` pairs. On any
/// failure the files written so far by this call are removed before the
/// error is returned.
pub fn write_outputs(dir: &Path, files: &[OutFile]) -> io::Result<Vec<(String, u64)>> {
    fs::create_dir_all(dir)?;
    let mut written: Vec<PathBuf> = Vec::new();
    let mut checksums = Vec::new();
    for (name, bytes) in files {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, bytes) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            return Err(e);
        }
        written.push(path);
        checksums.push((name.clone(), fnv1a64(bytes)));
    }
    Ok(checksums)
}

/// Write `manifest.txt`: tool version, operation, config hash, wall time
/// (omitted in reproducible mode), one checksum line per output file, and
/// any extra `key = value` lines the operation wants to record.
pub fn write_manifest(
    dir: &Path,
    operation: &str,
    hash: u64,
    wall_ms: Option<u128>,
    checksums: &[(String, u64)],
    extra: &[(String, String)],
) -> io::Result<()> {
    let mut text = String::new();
    text.push_str(&format!("tool = ergolab {TOOL_VERSION}\n"));
    text.push_str(&format!("operation = {operation}\n"));
    text.push_str(&format!("config_hash = {hash:016x}\n"));
    if let Some(ms) = wall_ms {
        text.push_str(&format!("wall_ms = {ms}\n"));
    }
    for (name, sum) in checksums {
        text.push_str(&format!("file = {name} fnv1a64={sum:016x}\n"));
    }
    for (key, value) in extra {
        text.push_str(&format!("{key} = {value}\n"));
    }
    fs::write(dir.join("manifest.txt"), text)
}

/// Minimal SVG line plot of `(x, y)` samples with autoscaled axes; used
/// for quantities like running hyperbolic-time frequency.
pub fn svg_polyline(points: &[(f64, f64)], label: &str, comment: &str) -> Vec<u8> {
    let mut out = String::new();
    out.push_str(r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 640 360">"#);
    out.push('\n');
    out.push_str(&format!("<!-- {comment} -->\n"));
    out.push_str(r#"<rect x="0" y="0" width="640" height="360" fill="white"/>"#);
    out.push('\n');
    if !points.is_empty() {
        let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut y_lo, mut y_hi) = (0.0f64, f64::NEG_INFINITY);
        for &(x, y) in points {
            x_lo = x_lo.min(x);
            x_hi = x_hi.max(x);
            y_lo = y_lo.min(y);
            y_hi = y_hi.max(y);
        }
        let x_span = (x_hi - x_lo).max(1e-300);
        let y_span = (y_hi - y_lo).max(1e-300);
        let mut path = String::new();
        for &(x, y) in points {
            let px = 20.0 + 600.0 * (x - x_lo) / x_span;
            let py = 340.0 - 300.0 * (y - y_lo) / y_span;
            path.push_str(&format!("{px},{py} "));
        }
        out.push_str(&format!(
            r#"<polyline fill="none" stroke="black" points="{}"/>"#,
            path.trim_end()
        ));
        out.push('\n');
        out.push_str(&format!(
            r#"<text x="22" y="20" font-size="14">{label} (y in [{y_lo}, {y_hi}], x in [{x_lo}, {x_hi}])</text>"#
        ));
        out.push('\n');
    }
    out.push_str("</svg>\n");
    out.into_bytes()
}
