//! Output files, content hashes and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::scenario::Scenario;

/// One artifact held in memory until the run has succeeded.
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Shortest round-trip decimal form; exponent notation outside a
/// readable range so tiny fractional frequencies stay compact.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// CSV with a header row and '\n' terminators.
pub struct Table {
    name: String,
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Self { name: name.to_string(), writer }
    }

    pub fn row(&mut self, values: &[f64]) {
        self.writer.write_record(values.iter().map(|v| fmt_f64(*v))).expect("in-memory write");
    }

    pub fn labeled_row(&mut self, label: &str, values: &[f64]) {
        let fields = std::iter::once(label.to_string()).chain(values.iter().map(|v| fmt_f64(*v)));
        self.writer.write_record(fields).expect("in-memory write");
    }

    pub fn finish(self) -> Artifact {
        let bytes = self.writer.into_inner().expect("in-memory flush");
        Artifact { name: self.name, bytes }
    }
}

pub fn json_artifact<T: Serialize>(name: &str, value: &T) -> Artifact {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable value");
    bytes.push(b'\n');
    Artifact { name: name.to_string(), bytes }
}

/// SHA-256 of the git blob encoding `blob <len>\0<bytes>`.
pub fn blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

#[derive(Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Serialize)]
pub struct InputEntry {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub scenario: &'a Scenario,
    pub inputs: Vec<InputEntry>,
    pub files: Vec<FileEntry>,
    /// Hash over the sorted `name sha256` lines of `files`.
    pub content_hash: String,
}

pub fn content_hash(files: &[FileEntry]) -> String {
    let mut lines: Vec<String> = files.iter().map(|f| format!("{} {}\n", f.name, f.sha256)).collect();
    lines.sort();
    blob_hash(lines.concat().as_bytes())
}

/// Writes the artifacts, then `summary.json` and `manifest.json` last.
pub fn write_run(
    dir: &Path,
    scenario: &Scenario,
    inputs: Vec<InputEntry>,
    mut artifacts: Vec<Artifact>,
    summary: &serde_json::Value,
) -> std::io::Result<String> {
    fs::create_dir_all(dir)?;
    artifacts.push(json_artifact("summary.json", summary));
    let mut files = Vec::with_capacity(artifacts.len());
    for a in &artifacts {
        fs::write(dir.join(&a.name), &a.bytes)?;
        files.push(FileEntry { name: a.name.clone(), sha256: blob_hash(&a.bytes), bytes: a.bytes.len() });
    }
    let content_hash = content_hash(&files);
    let manifest = Manifest {
        tool: "sqclock",
        version: env!("CARGO_PKG_VERSION"),
        command: scenario.command.name(),
        seed: scenario.seed,
        scenario,
        inputs,
        files,
        content_hash: content_hash.clone(),
    };
    let m = json_artifact("manifest.json", &manifest);
    fs::write(dir.join(&m.name), &m.bytes)?;
    Ok(content_hash)
}
