use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::{FieldSource, ResolvedConfig};
use super::io::write_json;
use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputFile {
    /// Path relative to the command's output directory.
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentManifest {
    pub subcommand: String,
    pub config: Vec<FieldSource>,
    pub master_seed: u64,
    pub code_version: String,
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
    pub outputs: Vec<OutputFile>,
    #[serde(skip)]
    dir: PathBuf,
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

/// Lower-case hex SHA-256 of a file's bytes.
pub fn sha256_file(path: &Path) -> Result<String, HarnessError> {
    let io = |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = File::open(path).map_err(io)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let k = file.read(&mut buf).map_err(io)?;
        if k == 0 {
            break;
        }
        hasher.update(&buf[..k]);
    }
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

impl ExperimentManifest {
    pub fn begin(cfg: &ResolvedConfig) -> Self {
        Self {
            subcommand: cfg.command.name().to_string(),
            config: cfg.provenance.clone(),
            master_seed: cfg.seed,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix_s: now(),
            finished_unix_s: 0.0,
            outputs: Vec::new(),
            dir: cfg.command_dir(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Path of an output file inside the command directory.
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Digests a file already written under [`Self::path`].
    pub fn record(&mut self, name: &str) -> Result<(), HarnessError> {
        let path = self.path(name);
        let bytes = std::fs::metadata(&path)
            .map_err(|source| HarnessError::Io {
                path: path.clone(),
                source,
            })?
            .len();
        self.outputs.push(OutputFile {
            name: name.to_string(),
            bytes,
            sha256: sha256_file(&path)?,
        });
        Ok(())
    }

    /// Stamps the end time and writes `manifest.json`.
    pub fn finish(mut self) -> Result<Self, HarnessError> {
        self.finished_unix_s = now();
        write_json(&self.path("manifest.json"), &self)?;
        Ok(self)
    }
}
