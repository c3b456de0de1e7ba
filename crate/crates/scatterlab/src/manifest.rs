//! Run manifests: what was run, with which parameters, and digests of every
//! file written.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::io::write_file;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool: String,
    pub tool_version: String,
    pub parameters: Value,
    pub master_seed: Option<u64>,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub outputs: Vec<OutputDigest>,
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Collects written files and emits the manifest.
pub struct ManifestBuilder {
    command: String,
    parameters: Value,
    master_seed: Option<u64>,
    started: f64,
    outputs: Vec<(PathBuf, String)>,
}

impl ManifestBuilder {
    pub fn start(command: &str, parameters: Value, master_seed: Option<u64>) -> Self {
        ManifestBuilder {
            command: command.to_string(),
            parameters,
            master_seed,
            started: unix_now(),
            outputs: Vec::new(),
        }
    }

    /// Write `contents` to `path` and remember its digest.
    pub fn write(&mut self, path: &Path, contents: &str) -> Result<(), CliError> {
        write_file(path, contents)?;
        self.outputs
            .push((path.to_path_buf(), sha256_hex(contents.as_bytes())));
        Ok(())
    }

    pub fn finish(self, manifest_path: &Path) -> Result<RunManifest, CliError> {
        let manifest = RunManifest {
            command: self.command,
            tool: "scatterlab".into(),
            tool_version: TOOL_VERSION.into(),
            parameters: self.parameters,
            master_seed: self.master_seed,
            started_unix: self.started,
            finished_unix: unix_now(),
            outputs: self
                .outputs
                .into_iter()
                .map(|(p, sha256)| OutputDigest {
                    path: p.display().to_string(),
                    sha256,
                })
                .collect(),
        };
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::output(format!("cannot encode manifest: {e}")))?;
        write_file(manifest_path, &(text + "\n"))?;
        Ok(manifest)
    }
}

/// `<out>.manifest.json` next to a single output file.
pub fn manifest_path_for(out: &Path) -> PathBuf {
    let mut name = out
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}
