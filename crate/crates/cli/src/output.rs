//! Deterministic artifact writing.
//!
//! CSV bodies serialize every float with 17 significant digits — round-trip
//! exact for IEEE doubles — so byte-identical reruns are a meaningful
//! contract. Wall-clock timestamps are quarantined to the manifest, which is
//! written last and carries a SHA-256 checksum of every other output file.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RawConfig;

/// Round-trip-exact float field (17 significant digits).
pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

/// Optional statistic; absent values print as NaN so every row has the same
/// arity for downstream tools.
pub fn fmt_opt(x: Option<f64>) -> String {
    match x {
        Some(v) => fmt_f(v),
        None => "NaN".to_string(),
    }
}

/// One output file, assembled in memory before anything touches the disk.
#[derive(Debug, Clone)]
pub struct OutFile {
    pub name: String,
    pub body: String,
}

impl OutFile {
    pub fn new(name: impl Into<String>, body: impl Into<String>) -> OutFile {
        OutFile { name: name.into(), body: body.into() }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// Run metadata: enough to reproduce the run (config echo + seeds) and to
/// audit it (tool version, timestamps, output checksums).
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: &'static str,
    pub experiment: String,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub master_seed: u64,
    /// Seed handed to each trial (`child_seed(master, trial)`).
    pub trial_seeds: Vec<u64>,
    /// Structured echo of the effective configuration.
    pub config: RawConfig,
    /// The same echo as literal TOML, ready to rerun.
    pub config_toml: String,
    /// SHA-256 of every other file written by this run.
    pub checksums: BTreeMap<String, String>,
}

pub fn now_unix_ms() -> u128 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

/// Writes all data files, then the manifest (timestamped and checksummed)
/// last. Returns the paths written, manifest included.
pub fn write_run(
    dir: &Path,
    files: &[OutFile],
    mut manifest: RunManifest,
) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for f in files {
        let path = dir.join(&f.name);
        let mut handle = std::fs::File::create(&path)?;
        handle.write_all(f.body.as_bytes())?;
        manifest.checksums.insert(f.name.clone(), sha256_hex(f.body.as_bytes()));
        written.push(path);
    }
    manifest.finished_unix_ms = now_unix_ms();
    let path = dir.join("manifest.json");
    let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, body)?;
    written.push(path);
    Ok(written)
}

/// Builds a CSV body from a header and row formatter.
pub fn csv_body(header: &str, rows: &[Vec<String>]) -> String {
    let mut body = String::new();
    body.push_str(header);
    body.push('\n');
    for row in rows {
        body.push_str(&row.join(","));
        body.push('\n');
    }
    body
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips_exactly() {
        for &x in &[
            0.0,
            1.0,
            -1.0,
            std::f64::consts::PI,
            1.2345678901234567e-300,
            9.87e250,
            f64::MIN_POSITIVE,
        ] {
            let s = fmt_f(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_opt(None), "NaN");
    }

    #[test]
    fn checksums_are_stable() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn csv_rows_join_with_commas_and_newlines() {
        let body = csv_body(
            "a,b",
            &[vec!["1".into(), "2".into()], vec!["3".into(), "4".into()]],
        );
        assert_eq!(body, "a,b\n1,2\n3,4\n");
    }
}
