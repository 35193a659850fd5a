use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

#[derive(Debug, Serialize)]
pub struct OutputFile {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Record of one invocation. Everything except this file is a pure
/// function of (config, command, version).
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: Vec<String>,
    /// SHA-256 of the effective configuration after flag overrides.
    pub config_hash: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub outputs: Vec<OutputFile>,
}

/// Collects output files in one directory.
pub struct OutputDir {
    dir: PathBuf,
    files: Vec<OutputFile>,
    command: Vec<String>,
    config_hash: String,
    started: f64,
}

impl OutputDir {
    pub fn create(dir: &Path, command: Vec<String>, effective_config: &str) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            command,
            config_hash: sha256_hex(effective_config.as_bytes()),
            started: unix_now(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: Vec<u8>) -> Result<(), CliError> {
        fs::write(self.dir.join(name), &bytes)?;
        self.files.push(OutputFile {
            name: name.to_string(),
            bytes: bytes.len(),
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    pub fn csv(
        &mut self,
        name: &str,
        emit: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    ) -> Result<(), CliError> {
        let mut buf = Vec::new();
        emit(&mut buf)?;
        self.write(name, buf)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut buf = serde_json::to_vec_pretty(value)?;
        buf.push(b'\n');
        self.write(name, buf)
    }

    pub fn finish(self) -> Result<RunManifest, CliError> {
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            config_hash: self.config_hash,
            started_unix: self.started,
            finished_unix: unix_now(),
            outputs: self.files,
        };
        let mut buf = serde_json::to_vec_pretty(&manifest)?;
        buf.push(b'\n');
        fs::write(self.dir.join(MANIFEST_FILE), buf)?;
        Ok(manifest)
    }
}
