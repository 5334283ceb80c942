//! Run manifests: enough provenance to re-run or audit any command. Input
//! digests are taken before processing starts, so a manifest vouches for
//! what the command actually read.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub command: String,
    pub started_utc: String,
    pub finished_utc: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Snapshot of the parsed command arguments.
    pub config: serde_json::Value,
    /// Input path to SHA-256 hex digest.
    pub inputs: BTreeMap<String, String>,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true)
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, seed: Option<u64>) -> Self {
        RunManifest {
            tool: format!("compset {}", env!("CARGO_PKG_VERSION")),
            command: command.to_string(),
            started_utc: now(),
            finished_utc: None,
            seed,
            config,
            inputs: BTreeMap::new(),
        }
    }

    pub fn digest_input(&mut self, path: &Path) -> std::io::Result<()> {
        let mut file = File::open(path)?;
        let mut hasher = Sha256::new();
        let mut buf = [0u8; 64 * 1024];
        loop {
            let n = file.read(&mut buf)?;
            if n == 0 {
                break;
            }
            hasher.update(&buf[..n]);
        }
        let hex: String = hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        self.inputs.insert(path.display().to_string(), hex);
        Ok(())
    }

    pub fn write(mut self, path: &Path) -> std::io::Result<()> {
        self.finished_utc = Some(now());
        let mut out = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut out, &self)?;
        writeln!(out)?;
        out.flush()
    }
}
