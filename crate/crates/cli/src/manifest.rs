//! Run directories and their manifests.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::Command;
use crate::config::Config;

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Everything that determines a run's outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Invocation {
    pub master_seed: u64,
    pub command: Command,
    pub config: Config,
}

impl Invocation {
    /// Hash of the canonical JSON form.
    pub fn hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("invocation serializes"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub master_seed: u64,
    pub invocation: Invocation,
    pub config_hash: String,
    /// Input files as given, with their content hashes at run time.
    pub inputs: Vec<FileDigest>,
    /// Output file names relative to the run directory.
    pub outputs: Vec<FileDigest>,
    pub created_at: String,
}

impl RunManifest {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read(path).with_context(|| format!("reading manifest {}", path.display()))?;
        serde_json::from_slice(&text).with_context(|| format!("parsing manifest {}", path.display()))
    }
}

/// One file produced by a command.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn new(name: &str, bytes: impl Into<Vec<u8>>) -> Self {
        Self {
            name: name.to_string(),
            bytes: bytes.into(),
        }
    }

    pub fn json<S: Serialize>(name: &str, value: &S) -> anyhow::Result<Self> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        Ok(Self::new(name, bytes))
    }
}

/// Writes artifacts and the manifest into `dir`, returning the manifest.
pub fn write_run(
    dir: &Path,
    invocation: &Invocation,
    inputs: &[PathBuf],
    artifacts: &[Artifact],
) -> anyhow::Result<RunManifest> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut outputs = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let path = dir.join(&a.name);
        std::fs::write(&path, &a.bytes).with_context(|| format!("writing {}", path.display()))?;
        outputs.push(FileDigest {
            path: a.name.clone(),
            sha256: sha256_hex(&a.bytes),
        });
    }
    let inputs = inputs
        .iter()
        .map(|p| {
            let bytes = std::fs::read(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(FileDigest {
                path: p.display().to_string(),
                sha256: sha256_hex(&bytes),
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: invocation.command.name().to_string(),
        master_seed: invocation.master_seed,
        invocation: invocation.clone(),
        config_hash: invocation.hash(),
        inputs,
        outputs,
        created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    std::fs::write(dir.join(MANIFEST_FILE), bytes)?;
    Ok(manifest)
}

/// Output files whose hashes differ between two manifests, or that only one has.
pub fn output_mismatches(expected: &RunManifest, actual: &RunManifest) -> Vec<String> {
    let mut out = Vec::new();
    for e in &expected.outputs {
        match actual.outputs.iter().find(|a| a.path == e.path) {
            Some(a) if a.sha256 == e.sha256 => {}
            Some(_) => out.push(format!("{}: content differs", e.path)),
            None => out.push(format!("{}: not produced", e.path)),
        }
    }
    for a in &actual.outputs {
        if !expected.outputs.iter().any(|e| e.path == a.path) {
            out.push(format!("{}: not in original run", a.path));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
