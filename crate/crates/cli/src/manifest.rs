//! Run manifests: the effective configuration, seeds and SHA-256 digests of
//! every file a command read or wrote. No timestamps, so rerunning a
//! command reproduces its manifest byte for byte.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{PipelineConfig, Seeds};

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub role: String,
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// Command line after the program name.
    pub arguments: Vec<String>,
    pub config: PipelineConfig,
    pub seeds: Seeds,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub summary: serde_json::Value,
}

pub fn digest(path: &Path) -> std::io::Result<(String, u64)> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    let mut total = 0u64;
    loop {
        let n = reader.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
        total += n as u64;
    }
    Ok((hex::encode(hasher.finalize()), total))
}

fn file_digest(role: &str, path: &Path) -> std::io::Result<FileDigest> {
    let (sha256, bytes) = digest(path)?;
    Ok(FileDigest {
        role: role.to_owned(),
        path: path.to_owned(),
        sha256,
        bytes,
    })
}

impl Manifest {
    pub fn new(command: &str, config: &PipelineConfig) -> Self {
        Manifest {
            tool: env!("CARGO_BIN_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_owned(),
            arguments: std::env::args().skip(1).collect(),
            config: config.clone(),
            seeds: config.seeds.clone(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            summary: serde_json::Value::Null,
        }
    }

    pub fn input(&mut self, role: &str, path: &Path) -> std::io::Result<()> {
        self.inputs.push(file_digest(role, path)?);
        Ok(())
    }

    pub fn output(&mut self, role: &str, path: &Path) -> std::io::Result<()> {
        self.outputs.push(file_digest(role, path)?);
        Ok(())
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        log::info!("manifest written to {}", path.display());
        Ok(())
    }
}

/// `<output>.manifest.json` next to the primary output.
pub fn default_path(primary: &Path) -> PathBuf {
    let mut name = primary.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    primary.with_file_name(name)
}
