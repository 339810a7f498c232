use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliResult;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub outputs: Vec<OutputEntry>,
    /// Resolved defaults and calibrations worth recording.
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub notes: serde_json::Map<String, serde_json::Value>,
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

/// Collects outputs of one run and writes the manifest last.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> CliResult<PathBuf> {
        let p = self.path(name);
        fs::write(&p, contents)?;
        self.record(name);
        Ok(p)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<PathBuf> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(name, s)
    }

    /// Registers a file written by other code.
    pub fn record(&mut self, name: &str) {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
    }

    pub fn finish(
        self,
        command: &str,
        config: serde_json::Value,
        seed: u64,
        notes: serde_json::Map<String, serde_json::Value>,
    ) -> CliResult<RunManifest> {
        let outputs = self
            .files
            .iter()
            .map(|f| {
                Ok(OutputEntry {
                    path: f.clone(),
                    sha256: sha256_file(&self.root.join(f))?,
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        let m = RunManifest {
            version: qskyrmion::VERSION.to_string(),
            command: command.to_string(),
            config,
            seed,
            outputs,
            notes,
        };
        let mut s = serde_json::to_string_pretty(&m)?;
        s.push('\n');
        fs::write(self.root.join(MANIFEST_NAME), s)?;
        Ok(m)
    }
}
