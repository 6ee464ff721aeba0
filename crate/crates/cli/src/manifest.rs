//! Provenance record written next to every set of outputs.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use target_decoy::TdError;

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest<C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub argv: Vec<String>,
    pub config: C,
    pub seed: u64,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<PathBuf>,
    pub started_unix_seconds: u64,
    pub elapsed_seconds: f64,
}

/// Collects provenance while a command runs.
pub struct Recorder {
    started: SystemTime,
    clock: Instant,
}

impl Recorder {
    pub fn start() -> Self {
        Self {
            started: SystemTime::now(),
            clock: Instant::now(),
        }
    }

    pub fn finish<C: Serialize>(
        &self,
        command: &'static str,
        argv: &[String],
        config: C,
        seed: u64,
        inputs: Vec<InputDigest>,
        outputs: Vec<PathBuf>,
    ) -> Manifest<C> {
        Manifest {
            tool: "tdfdr",
            version: env!("CARGO_PKG_VERSION"),
            command,
            argv: argv.to_vec(),
            config,
            seed,
            inputs,
            outputs,
            started_unix_seconds: self
                .started
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            elapsed_seconds: self.clock.elapsed().as_secs_f64(),
        }
    }
}

pub fn digest_file(path: &Path) -> Result<InputDigest, TdError> {
    let bytes = std::fs::read(path).map_err(|e| TdError::io(path, e))?;
    let hash = Sha256::digest(&bytes);
    let sha256 = hash.iter().map(|b| format!("{b:02x}")).collect();
    Ok(InputDigest {
        path: path.to_path_buf(),
        sha256,
    })
}
