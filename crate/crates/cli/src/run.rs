//! Run directory: artifacts, a provenance manifest and a metadata sidecar.
//!
//! `manifest.json` depends only on inputs, flags and outputs, so two runs with
//! the same inputs produce the same manifest. Wall-clock times and the thread
//! count go to `run_meta.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use memesim_core::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";
pub const RUN_META: &str = "run_meta.json";

#[derive(Debug, Serialize)]
struct InputEntry {
    role: String,
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    flags: &'a serde_json::Value,
    inputs: &'a [InputEntry],
    outputs: &'a BTreeMap<String, String>,
}

#[derive(Debug, Serialize)]
struct RunMeta {
    command: String,
    started_unix: u64,
    finished_unix: u64,
    elapsed_ms: u128,
    threads: usize,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Pretty JSON with a trailing newline.
pub fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub struct RunDir {
    dir: PathBuf,
    command: String,
    flags: serde_json::Value,
    inputs: Vec<InputEntry>,
    outputs: BTreeMap<String, String>,
    started: SystemTime,
    clock: Instant,
}

impl RunDir {
    pub fn create(dir: impl Into<PathBuf>, command: &str, flags: serde_json::Value) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(RunDir {
            dir,
            command: command.to_string(),
            flags,
            inputs: Vec::new(),
            outputs: BTreeMap::new(),
            started: SystemTime::now(),
            clock: Instant::now(),
        })
    }

    /// Records an input file and its content hash.
    pub fn input(&mut self, role: &str, path: &Path) -> Result<()> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        self.inputs.push(InputEntry {
            role: role.to_string(),
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    /// Writes an artifact into the run directory and records its hash.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.outputs.insert(name.to_string(), sha256_hex(bytes));
        Ok(path)
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        self.write(name, &json_bytes(value)?)
    }

    /// Writes an artifact produced by a writer-based serializer.
    pub fn write_with(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, &buf)?;
        Ok(buf)
    }

    pub fn finish(self, threads: usize) -> Result<PathBuf> {
        let manifest = Manifest {
            command: &self.command,
            version: env!("CARGO_PKG_VERSION"),
            flags: &self.flags,
            inputs: &self.inputs,
            outputs: &self.outputs,
        };
        let manifest_path = self.dir.join(MANIFEST);
        fs::write(&manifest_path, json_bytes(&manifest)?).map_err(|e| Error::io(&manifest_path, e))?;
        let unix = |t: SystemTime| t.duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        let meta = RunMeta {
            command: self.command.clone(),
            started_unix: unix(self.started),
            finished_unix: unix(SystemTime::now()),
            elapsed_ms: self.clock.elapsed().as_millis(),
            threads,
        };
        let meta_path = self.dir.join(RUN_META);
        fs::write(&meta_path, json_bytes(&meta)?).map_err(|e| Error::io(&meta_path, e))?;
        Ok(self.dir)
    }
}
